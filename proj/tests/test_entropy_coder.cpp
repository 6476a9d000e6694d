#include <cmath>
#include <numeric>

#include "doctest.h"
#include "licb/codec.hpp"
#include "licb/entropy.hpp"
#include "licb/range_coder.hpp"
#include "licb/textures.hpp"

using namespace licb;
using namespace licb::diff;
using namespace licb::entropy;
using namespace licb::coder;

TEST_CASE("gaussian interval probabilities") {
  // P(-0.5 < N(0,1) <= 0.5)
  CHECK(gaussian_interval(0.0, 0.0, 1.0) == doctest::Approx(0.3829).epsilon(1e-3));

  double total = 0.0;
  for (int s = -40; s <= 40; ++s) total += gaussian_interval(s, 0.3, 1.2);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

  // unimodal: maximized at round(mu)
  double best = 0.0;
  int argbest = -99;
  for (int s = -10; s <= 10; ++s) {
    double p = gaussian_interval(s, 1.7, 0.8);
    if (p > best) {
      best = p;
      argbest = s;
    }
  }
  CHECK(argbest == 2);
}

TEST_CASE("likelihood floor and bits") {
  Tensor p = Tensor::from_data({4}, {0.5f, 0.5f, 1e-30f, 1.0f});
  Tensor l = log2_floored(p);
  for (float v : l.data()) CHECK(v >= std::log2(1e-9f) - 1e-4f);

  Tensor half = Tensor::full({8}, 0.5f);
  CHECK(bits_from_likelihood(half).scalar_value() == doctest::Approx(8.0));
}

TEST_CASE("cdf table construction") {
  // uniform over 4 symbols, no escape
  std::vector<double> pmf(4, 0.25);
  CdfTable t = build_cdf(pmf, 0, false);
  std::vector<uint32_t> want = {0, 16384, 32768, 49152, 65536};
  REQUIRE(t.cum.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i) CHECK(t.cum[i] == want[i]);

  CdfTable g = gaussian_cdf_table(0.0, 1.0, -8, 8, false);
  // symmetric about 0
  int n = g.num_symbols();
  for (int i = 0; i < n; ++i) {
    uint32_t m1 = g.freq(i);
    uint32_t m2 = g.freq(n - 1 - i);
    CHECK(std::abs(static_cast<int64_t>(m1) - static_cast<int64_t>(m2)) <= 1);
  }
  // nonzero mass everywhere
  CdfTable far = gaussian_cdf_table(0.0, 0.04, kSymMin, kSymMax, true);
  for (int i = 0; i < far.num_symbols(); ++i) CHECK(far.freq(i) >= 1);
}

TEST_CASE("range coder roundtrips") {
  // empty stream: flush bytes only
  RangeEncoder enc;
  std::vector<uint8_t> empty = enc.finish();
  CHECK(empty.size() == 5);

  Rng rng(41);
  CdfTable gauss = gaussian_cdf_table(0.0, 4.0, kSymMin, kSymMax, true);
  for (int trial = 0; trial < 1000; ++trial) {
    int len = rng.uniform_int(0, 40);
    std::vector<int32_t> syms(len);
    for (auto& s : syms)
      s = static_cast<int32_t>(std::llround(rng.normal() * 4.0));
    auto bytes = encode_stream(syms, {&gauss, 1});
    auto back = decode_stream(bytes, {&gauss, 1}, syms.size());
    CHECK(back == syms);
  }
}

TEST_CASE("range coder near entropy on uniform bytes") {
  std::vector<double> pmf(256, 1.0 / 256.0);
  CdfTable t = build_cdf(pmf, 0, false);
  Rng rng(43);
  std::vector<int32_t> syms(1000);
  for (auto& s : syms) s = rng.uniform_int(0, 255);
  auto bytes = encode_stream(syms, {&t, 1});
  // 1000 8-bit symbols: about 1000 payload bytes (plus sentinel + flush)
  CHECK(bytes.size() >= 990);
  CHECK(bytes.size() <= 1020);

  // length bounded by the information content plus a small constant
  double info_bits = 0.0;
  for (size_t i = 0; i < syms.size(); ++i)
    info_bits -= std::log2(static_cast<double>(t.freq(syms[i])) / 65536.0);
  CHECK(8.0 * bytes.size() <= info_bits + 32.0 + 8.0 * 9);
}

TEST_CASE("escape path codes out-of-range symbols") {
  CdfTable t = gaussian_cdf_table(0.0, 1.0, kSymMin, kSymMax, true);
  std::vector<int32_t> syms = {0, 5000, -3, 1 << 20, 7};
  auto bytes = encode_stream(syms, {&t, 1});
  CHECK(decode_stream(bytes, {&t, 1}, syms.size()) == syms);

  CdfTable no_esc = gaussian_cdf_table(0.0, 1.0, -4, 4, false);
  std::vector<int32_t> bad = {9};
  CHECK_THROWS_AS(encode_stream(bad, {&no_esc, 1}), StreamError);
}

TEST_CASE("stream corruption detection") {
  CdfTable t = gaussian_cdf_table(0.0, 2.0, kSymMin, kSymMax, true);
  Rng rng(47);
  std::vector<int32_t> syms(64);
  for (auto& s : syms) s = static_cast<int32_t>(std::llround(rng.normal() * 2));
  auto bytes = encode_stream(syms, {&t, 1});

  // truncation is an error, not garbage
  std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
  CHECK_THROWS_AS(decode_stream(cut, {&t, 1}, syms.size()), StreamError);

  // decoding under a different table trips the sentinel (seeded case)
  CdfTable wrong = gaussian_cdf_table(3.0, 0.3, kSymMin, kSymMax, true);
  CHECK_THROWS_AS(decode_stream(bytes, {&wrong, 1}, syms.size()), StreamError);
}

TEST_CASE("file codec roundtrips per family") {
  Tensor x = textures::noise_texture(64, 5);
  for (auto fam : {models::Family::kFactorized, models::Family::kHyperS,
                   models::Family::kHyperMc}) {
    auto model = models::CompressionModel::create(fam, 0.01, 77);
    Bitstream bs = compress_file(model, 3, x);
    CHECK(bs.height == 64);
    CHECK(bs.width == 64);
    CHECK(bs.lambda_index == 3);

    auto bytes = bs.serialize();
    Bitstream parsed = Bitstream::parse(bytes);
    CHECK(parsed.height == 64);
    CHECK(parsed.width == 64);
    CHECK(parsed.z_seg == bs.z_seg);
    CHECK(parsed.y_seg == bs.y_seg);

    auto bundle = model.encode(x, QuantMode::kRoundSte);
    Tensor direct = model.decode(bundle.y_hat);
    DecompressResult dec = decompress_file(model, parsed);
    REQUIRE(dec.y_hat.numel() == bundle.y_hat.numel());
    for (size_t i = 0; i < bundle.y_hat.numel(); ++i)
      CHECK(dec.y_hat.data()[i] == bundle.y_hat.data()[i]);
    for (size_t i = 0; i < direct.numel(); ++i)
      CHECK(dec.x_hat.data()[i] == direct.data()[i]);
  }
}

TEST_CASE("file codec resolves submodels by header") {
  Tensor x = textures::edge_texture(64, 9);
  std::vector<models::CompressionModel> grid;
  grid.push_back(models::CompressionModel::create(models::Family::kHyperS, 0.01, 1));
  grid.push_back(models::CompressionModel::create(models::Family::kHyperS, 0.05, 2));
  Bitstream bs = compress_file(grid[1], 1, x);
  DecompressResult dec = decompress_file(std::span<const models::CompressionModel>(grid), bs);
  auto bundle = grid[1].encode(x, QuantMode::kRoundSte);
  for (size_t i = 0; i < bundle.y_hat.numel(); ++i)
    CHECK(dec.y_hat.data()[i] == bundle.y_hat.data()[i]);

  bs.lambda_index = 7;
  CHECK_THROWS_AS(
      decompress_file(std::span<const models::CompressionModel>(grid), bs),
      StreamError);
}

TEST_CASE("estimated bits are realizable") {
  for (auto fam : {models::Family::kFactorized, models::Family::kHyperMc}) {
    auto model = models::CompressionModel::create(fam, 0.01, 13);
    for (int i = 0; i < 3; ++i) {
      Tensor x = textures::noise_texture(64, 100 + i);
      auto rd = model.forward_rd(x, QuantMode::kRoundSte);
      double est_bits = rd.rate_bpp.scalar_value() * 64 * 64;
      Bitstream bs = compress_file(model, 0, x);
      CHECK(static_cast<double>(bs.payload_bits()) <= 1.02 * est_bits + 64.0);
    }
  }
}
