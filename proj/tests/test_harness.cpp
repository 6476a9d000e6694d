#include <zlib.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "licb/image_io.hpp"
#include "licb/suite.hpp"
#include "licb/textures.hpp"

namespace fs = std::filesystem;
using namespace licb;
using namespace licb::diff;

namespace {

fs::path tmp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_ppm(const fs::path& p, int w, int h, uint8_t v) {
  std::ofstream f(p, std::ios::binary);
  f << "P6\n# a comment\n" << w << " " << h << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3, v);
  for (int y = 0; y < h; ++y)
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(v >> 24);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

void put_chunk(std::vector<uint8_t>& out, const char* type,
               const std::vector<uint8_t>& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  put_be32(out, 0);  // CRC, not checked by the loader
}

void write_png(const fs::path& p, int w, int h,
               const std::vector<uint8_t>& rgb) {
  std::vector<uint8_t> raw;
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), rgb.begin() + static_cast<size_t>(y) * w * 3,
               rgb.begin() + static_cast<size_t>(y + 1) * w * 3);
  }
  std::vector<uint8_t> comp(compressBound(raw.size()));
  uLongf clen = comp.size();
  REQUIRE(compress(comp.data(), &clen, raw.data(), raw.size()) == Z_OK);
  comp.resize(clen);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, static_cast<uint32_t>(w));
  put_be32(ihdr, static_cast<uint32_t>(h));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

}  // namespace

TEST_CASE("ppm loading, cropping, and roundtrip") {
  fs::path dir = tmp_dir("licb_ppm");
  write_ppm(dir / "white.ppm", 64, 64, 255);
  auto rec = io::load_image((dir / "white.ppm").string());
  CHECK(rec.pixels.shape() == ShapeVec{1, 3, 64, 64});
  CHECK(rec.bit_depth == 8);
  for (float v : rec.pixels.data()) CHECK(v == 1.0f);

  // odd sizes are center-cropped to multiples of 8
  write_ppm(dir / "odd.ppm", 67, 65, 100);
  auto odd = io::load_image((dir / "odd.ppm").string());
  CHECK(odd.pixels.shape() == ShapeVec{1, 3, 64, 64});

  // too small after cropping
  write_ppm(dir / "tiny.ppm", 40, 40, 10);
  CHECK_THROWS_AS(io::load_image((dir / "tiny.ppm").string()), io::ImageError);

  // save/load agrees to within one 8-bit step
  Tensor t = textures::noise_texture(64, 401);
  io::save_ppm((dir / "rt.ppm").string(), t);
  auto back = io::load_image((dir / "rt.ppm").string());
  for (size_t i = 0; i < t.numel(); ++i)
    CHECK(std::abs(back.pixels.data()[i] - t.data()[i]) <= 1.0f / 255.0f + 1e-6f);
  fs::remove_all(dir);
}

TEST_CASE("png loading") {
  fs::path dir = tmp_dir("licb_png");
  int w = 72, h = 64;
  std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t o = (static_cast<size_t>(y) * w + x) * 3;
      rgb[o] = static_cast<uint8_t>(x * 3 % 256);
      rgb[o + 1] = static_cast<uint8_t>(y * 4 % 256);
      rgb[o + 2] = static_cast<uint8_t>((x + y) % 256);
    }
  write_png(dir / "t.png", w, h, rgb);
  auto rec = io::load_image((dir / "t.png").string());
  CHECK(rec.pixels.shape() == ShapeVec{1, 3, 64, 72});
  size_t plane = static_cast<size_t>(h) * w;
  // spot-check a pixel against the source bytes
  int y = 10, x = 20;
  size_t o = (static_cast<size_t>(y) * w + x) * 3;
  CHECK(rec.pixels.data()[static_cast<size_t>(y) * w + x] ==
        doctest::Approx(rgb[o] / 255.0).epsilon(1e-6));
  CHECK(rec.pixels.data()[plane + static_cast<size_t>(y) * w + x] ==
        doctest::Approx(rgb[o + 1] / 255.0).epsilon(1e-6));

  // grayscale PNGs are rejected
  std::vector<uint8_t> bad = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, 64);
  put_be32(ihdr, 64);
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});
  put_chunk(bad, "IHDR", ihdr);
  std::ofstream bf(dir / "bad.png", std::ios::binary);
  bf.write(reinterpret_cast<const char*>(bad.data()),
           static_cast<std::streamsize>(bad.size()));
  bf.close();
  CHECK_THROWS_AS(io::load_image((dir / "bad.png").string()), io::ImageError);
  fs::remove_all(dir);
}

TEST_CASE("synthetic textures") {
  Tensor a = textures::noise_texture(64, 5);
  Tensor b = textures::noise_texture(64, 5);
  Tensor c = textures::noise_texture(64, 6);
  CHECK(a.shape() == ShapeVec{1, 3, 64, 64});
  bool differs = false;
  for (size_t i = 0; i < a.numel(); ++i) {
    CHECK(a.data()[i] == b.data()[i]);
    CHECK(a.data()[i] >= 0.0f);
    CHECK(a.data()[i] <= 1.0f);
    if (a.data()[i] != c.data()[i]) differs = true;
  }
  CHECK(differs);

  Tensor e = textures::edge_texture(64, 5);
  for (float v : e.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  auto ds = textures::make_dataset(3, 64, 9);
  CHECK(ds.size() == 3);
  for (const auto& t : ds) CHECK(t.shape() == ShapeVec{1, 3, 64, 64});
}

TEST_CASE("number formatting is locale-free and stable") {
  CHECK(suite::fmt(0.5) == "0.5");
  CHECK(suite::fmt(1.0 / 3.0) == "0.333333333");
  CHECK(suite::fmt(std::numeric_limits<double>::infinity()) == "999");
  CHECK(suite::fmt(-std::numeric_limits<double>::quiet_NaN()) == "-999");
  CHECK(suite::fmt(0.0) == "0");
}

TEST_CASE("suite config validation") {
  fs::path dir = tmp_dir("licb_cfg");
  auto write_cfg = [&](const std::string& body) {
    std::ofstream f(dir / "c.json");
    f << body;
    f.close();
    return (dir / "c.json").string();
  };

  CHECK_THROWS_AS(suite::SuiteConfig::from_json_file(write_cfg("{}")),
                  suite::SuiteError);  // no lambdas
  CHECK_THROWS_AS(suite::SuiteConfig::from_json_file(write_cfg(
                      R"({"lambdas":[0.01],"images":["/no/such/file.ppm"]})")),
                  suite::SuiteError);

  auto cfg = suite::SuiteConfig::from_json_file(write_cfg(
      R"({"lambdas":[0.01,0.05],"families":["FACTORIZED"],"surface_steps":2})"));
  CHECK(cfg.lambdas.size() == 2);
  REQUIRE(cfg.families.size() == 1);
  CHECK(cfg.families[0] == models::Family::kFactorized);
  CHECK(cfg.surface_steps == 2);
  CHECK(cfg.directions.size() == 6);  // defaults kick in
  fs::remove_all(dir);
}

TEST_CASE("suite runs, resumes, and is deterministic") {
  fs::path dir = tmp_dir("licb_suite");
  suite::SuiteConfig cfg;
  cfg.synthetic_count = 1;
  cfg.synthetic_size = 64;
  cfg.families = {models::Family::kFactorized};
  cfg.lambdas = {0.01, 0.05};
  cfg.directions = {{"rate", 1.0, 0.0}, {"distortion", 0.0, 1.0}};
  cfg.surface_steps = 2;
  cfg.train_steps = 8;
  cfg.ladder_steps = 4;
  cfg.train_crop = 32;
  cfg.out_dir = (dir / "run").string();

  auto res = suite::run_suite(cfg);
  // 2 submodels x 2 directions srda, plus 2 arda
  CHECK(res.total_tasks == 6);
  CHECK(res.completed == 6);
  CHECK(res.failed == 0);
  CHECK(fs::exists(dir / "run" / "reports.csv"));
  CHECK(fs::exists(dir / "run" / "aggregates.csv"));
  CHECK(fs::exists(dir / "run" / "manifest.json"));
  CHECK(fs::exists(dir / "run" / "models" / "FACTORIZED_0.licm"));
  CHECK(fs::exists(dir / "run" / "models" / "FACTORIZED_1.licm"));
  CHECK(fs::exists(dir / "run" / "plots" / "rdcurve_FACTORIZED.csv"));
  CHECK(fs::exists(dir / "run" / "tasks" / "srda_img0_FACTORIZED_0_rate.json"));
  CHECK(fs::exists(dir / "run" / "tasks" / "srda_img0_FACTORIZED_0_rate.xadv"));
  CHECK(fs::exists(dir / "run" / "tasks" / "arda_img0_rate.json"));

  // a second invocation resumes off the manifest
  auto res2 = suite::run_suite(cfg);
  CHECK(res2.skipped == 6);
  CHECK(res2.completed == 0);

  // a fresh run in another directory reproduces the reports byte for byte
  suite::SuiteConfig cfg2 = cfg;
  cfg2.out_dir = (dir / "run2").string();
  auto res3 = suite::run_suite(cfg2);
  CHECK(res3.completed == 6);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f),
                       std::istreambuf_iterator<char>());
  };
  std::string r1 = slurp(dir / "run" / "reports.csv");
  CHECK(!r1.empty());
  CHECK(r1 == slurp(dir / "run2" / "reports.csv"));
  CHECK(slurp(dir / "run" / "aggregates.csv") ==
        slurp(dir / "run2" / "aggregates.csv"));

  // header plus one row per task
  CHECK(std::count(r1.begin(), r1.end(), '\n') == 7);
  fs::remove_all(dir);
}
