#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "licb/analysis.hpp"
#include "licb/attacks.hpp"
#include "licb/codec.hpp"
#include "licb/image_io.hpp"
#include "licb/optim.hpp"
#include "licb/suite.hpp"
#include "licb/textures.hpp"

using namespace licb;
using diff::Tensor;

namespace {

std::vector<Tensor> gather_images(const std::vector<std::string>& paths,
                                  int synth_count, int synth_size,
                                  uint64_t seed) {
  if (!paths.empty()) {
    std::vector<Tensor> out;
    for (const auto& p : paths) out.push_back(io::load_image(p).pixels);
    return out;
  }
  return textures::make_dataset(synth_count, synth_size, seed);
}

Tensor load_pixels(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".xadv") {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io::ImageError("cannot open " + path);
    std::vector<uint8_t> b{std::istreambuf_iterator<char>(f),
                           std::istreambuf_iterator<char>()};
    if (b.size() < 8 || std::memcmp(b.data(), "LICT", 4) != 0)
      throw io::ImageError("bad tensor file " + path);
    uint32_t rank = get_u32(b.data() + 4);
    diff::ShapeVec shape;
    size_t pos = 8;
    for (uint32_t i = 0; i < rank; ++i, pos += 4)
      shape.push_back(static_cast<int>(get_u32(b.data() + pos)));
    std::vector<float> data(diff::shape_numel(shape));
    for (size_t i = 0; i < data.size(); ++i, pos += 4)
      data[i] = get_f32(b.data() + pos);
    return Tensor::from_data(shape, std::move(data));
  }
  return io::load_image(path).pixels;
}

void print_report(const analysis::RDReport& r) {
  std::printf("bpp   %0.6f -> %0.6f  (delta %+0.6f)\n", r.r_pre, r.r_post,
              r.delta_r);
  std::printf("mse   %0.4f -> %0.4f  (delta %+0.4f)\n", r.d_pre, r.d_post,
              r.delta_d);
  std::printf("psnr  %0.4f -> %0.4f dB\n", r.psnr_pre, r.psnr_post);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"licbench: learned-image-compression robustness workbench"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train = app.add_subcommand("train", "train one submodel");
  std::string tr_family = "FACTORIZED", tr_out = "model.licm";
  double tr_lambda = 0.015;
  std::vector<std::string> tr_images;
  int tr_steps = 400, tr_batch = 2, tr_crop = 48, tr_synth = 4, tr_size = 64;
  double tr_lr = 1e-3;
  uint64_t tr_seed = 1;
  train->add_option("--family", tr_family, "FACTORIZED|HYPER_S|HYPER_MC");
  train->add_option("--lambda", tr_lambda, "RD tradeoff");
  train->add_option("--out", tr_out, "checkpoint path");
  train->add_option("--image", tr_images, "training images (PPM/PNG)");
  train->add_option("--steps", tr_steps);
  train->add_option("--batch", tr_batch);
  train->add_option("--crop", tr_crop);
  train->add_option("--lr", tr_lr);
  train->add_option("--synthetic-count", tr_synth);
  train->add_option("--synthetic-size", tr_size);
  train->add_option("--seed", tr_seed);

  // ---- attack ----
  auto* attack = app.add_subcommand("attack", "run an input attack");
  attack->require_subcommand(1);
  auto* srda_cmd = attack->add_subcommand("srda", "single-submodel attack");
  auto* arda_cmd = attack->add_subcommand("arda", "multi-submodel attack");
  std::vector<std::string> at_models;
  std::string at_image, at_out = "adv";
  double at_gr = 1.0, at_gd = 0.0, at_eps = 1e-3, at_tau = 1.0;
  int at_T = 64;
  for (auto* c : {srda_cmd, arda_cmd}) {
    c->add_option("--model", at_models, "checkpoint(s)")->required();
    c->add_option("--image", at_image, "input image")->required();
    c->add_option("--out", at_out, "output prefix");
    c->add_option("--gamma-r", at_gr);
    c->add_option("--gamma-d", at_gd);
    c->add_option("--epsilon", at_eps);
    c->add_option("--steps", at_T, "surface steps T");
  }
  arda_cmd->add_option("--tau", at_tau, "weight temperature");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "RD metrics and codec roundtrip");
  std::string ev_model, ev_image, ev_bits;
  eval->add_option("--model", ev_model)->required();
  eval->add_option("--image", ev_image)->required();
  eval->add_option("--bitstream", ev_bits, "also write a decodable bitstream");

  // ---- eci ----
  auto* eci_cmd = app.add_subcommand("eci", "entropy causal intervention");
  std::string ec_model, ec_image, ec_adv;
  std::vector<std::string> ec_do;
  eci_cmd->add_option("--model", ec_model)->required();
  eci_cmd->add_option("--image", ec_image)->required();
  eci_cmd->add_option("--adv", ec_adv)->required();
  eci_cmd->add_option("--do", ec_do, "subset of ys,yc,yh (repeatable)");

  // ---- ldmr ----
  auto* ldmr_cmd = app.add_subcommand("ldmr", "layer-wise magnify ratios");
  std::string ld_model, ld_image, ld_adv;
  ldmr_cmd->add_option("--model", ld_model)->required();
  ldmr_cmd->add_option("--image", ld_image)->required();
  ldmr_cmd->add_option("--adv", ld_adv)->required();

  // ---- defend ----
  auto* defend = app.add_subcommand("defend", "defenses");
  defend->require_subcommand(1);
  auto* at_cmd = defend->add_subcommand("at", "adversarial finetuning");
  std::string df_model, df_out = "model_at.licm";
  std::vector<std::string> df_images;
  int df_iters = 200, df_synth = 4, df_size = 64;
  uint64_t df_seed = 7;
  at_cmd->add_option("--model", df_model)->required();
  at_cmd->add_option("--out", df_out);
  at_cmd->add_option("--image", df_images);
  at_cmd->add_option("--iters", df_iters);
  at_cmd->add_option("--synthetic-count", df_synth);
  at_cmd->add_option("--synthetic-size", df_size);
  at_cmd->add_option("--seed", df_seed);
  auto* on_cmd = defend->add_subcommand("online", "online input updating");
  std::string on_model, on_adv, on_out = "updated.xadv";
  int on_iters = 30;
  double on_lr = 1e-2;
  on_cmd->add_option("--model", on_model)->required();
  on_cmd->add_option("--adv", on_adv)->required();
  on_cmd->add_option("--out", on_out);
  on_cmd->add_option("--iters", on_iters);
  on_cmd->add_option("--lr", on_lr);

  // ---- report ----
  auto* report = app.add_subcommand("report", "run the full suite");
  std::string rp_config;
  bool rp_plots_only = false;
  report->add_option("--config", rp_config, "suite JSON config")->required();
  report->add_flag("--plots-only", rp_plots_only,
                   "rebuild plot CSVs from existing artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto images = gather_images(tr_images, tr_synth, tr_size, tr_seed);
      auto model = models::CompressionModel::create(
          models::family_from_name(tr_family), tr_lambda, tr_seed);
      optim::TrainConfig tc;
      tc.steps = tr_steps;
      tc.batch = tr_batch;
      tc.crop = tr_crop;
      tc.lr = tr_lr;
      tc.lr_final = tr_lr * 0.1;
      tc.seed = tr_seed;
      auto trace = optim::train_rd(model, images, tc);
      model.save(tr_out);
      if (!trace.empty())
        std::printf("trained %d steps, final loss %0.6f -> %s\n", tr_steps,
                    trace.back().total, tr_out.c_str());
      return 0;
    }

    if (*attack) {
      Tensor x = load_pixels(at_image);
      attacks::AttackConfig ac;
      ac.gamma_r = at_gr;
      ac.gamma_d = at_gd;
      ac.epsilon = at_eps;
      ac.surface_steps = at_T;
      ac.tau = at_tau;
      std::vector<models::CompressionModel> ms;
      for (const auto& p : at_models)
        ms.push_back(models::CompressionModel::load(p));
      attacks::AttackResult ar =
          *srda_cmd ? attacks::srda(ms[0], x, ac) : attacks::arda(ms, x, ac);
      io::save_ppm(at_out + ".ppm", ar.x_adv);
      {
        std::vector<uint8_t> out = {'L', 'I', 'C', 'T'};
        put_u32(out, static_cast<uint32_t>(ar.x_adv.shape().size()));
        for (int d : ar.x_adv.shape()) put_u32(out, static_cast<uint32_t>(d));
        for (float v : ar.x_adv.data()) put_f32(out, v);
        std::ofstream f(at_out + ".xadv", std::ios::binary);
        f.write(reinterpret_cast<const char*>(out.data()),
                static_cast<std::streamsize>(out.size()));
      }
      analysis::RDReport rep = analysis::perf_variation(ms[0], x, ar.x_adv);
      print_report(rep);
      if (ar.instability) std::printf("instability flagged\n");
      return 0;
    }

    if (*eval) {
      auto model = models::CompressionModel::load(ev_model);
      Tensor x = load_pixels(ev_image);
      auto rd = model.forward_rd(x, diff::QuantMode::kRoundSte);
      double mse = analysis::safe_mse255(x, rd.x_hat);
      std::printf("bpp %0.6f  (y %0.6f, z %0.6f)\n",
                  rd.rate_bpp.scalar_value(), rd.bpp_y, rd.bpp_z);
      std::printf("mse %0.4f  psnr %0.4f dB\n", mse,
                  analysis::psnr_from_mse(mse));
      if (!ev_bits.empty()) {
        coder::Bitstream bs = coder::compress_file(model, 0, x);
        auto bytes = bs.serialize();
        std::ofstream f(ev_bits, std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        double npix = static_cast<double>(x.shape()[2]) * x.shape()[3];
        std::printf("bitstream %zu bytes (%0.6f bpp payload)\n", bytes.size(),
                    static_cast<double>(bs.payload_bits()) / npix);
      }
      return 0;
    }

    if (*eci_cmd) {
      auto model = models::CompressionModel::load(ec_model);
      Tensor x = load_pixels(ec_image);
      Tensor xa = load_pixels(ec_adv);
      analysis::DoSet ds;
      for (const auto& s : ec_do) {
        if (s == "ys") ds.y_s = true;
        else if (s == "yc") ds.y_c = true;
        else if (s == "yh") ds.y_h = true;
        else throw std::invalid_argument("unknown do operator: " + s);
      }
      analysis::EciReport rep = analysis::eci(model, x, xa, ds);
      std::printf("bpp_total %0.6f  bpp_y %0.6f  bpp_z %0.6f\n", rep.bpp_total,
                  rep.bpp_y, rep.bpp_z);
      std::printf("delta_mean %s  scale %0.6f\n",
                  rep.delta_mean
                      ? std::to_string(*rep.delta_mean).c_str()
                      : "NA",
                  rep.scale);
      return 0;
    }

    if (*ldmr_cmd) {
      auto model = models::CompressionModel::load(ld_model);
      Tensor x = load_pixels(ld_image);
      Tensor xa = load_pixels(ld_adv);
      auto prof = analysis::ldmr_cdmr(model, x, xa);
      std::printf("layer,ldmr_interval,ldmr,cdmr\n");
      for (const auto& r : prof.rows)
        std::printf("%s,%0.6f,%0.6f,%0.6f\n", r.layer.c_str(),
                    r.ldmr_interval, r.ldmr, r.cdmr);
      return 0;
    }

    if (*defend) {
      if (*at_cmd) {
        auto model = models::CompressionModel::load(df_model);
        auto images = gather_images(df_images, df_synth, df_size, df_seed);
        optim::FinetuneConfig fc;
        fc.iters = df_iters;
        fc.seed = df_seed;
        auto trace = optim::adversarial_finetune(model, images, fc);
        model.save(df_out);
        if (!trace.empty())
          std::printf("finetuned %d iters, final loss %0.6f -> %s\n", df_iters,
                      trace.back().total, df_out.c_str());
      } else {
        auto model = models::CompressionModel::load(on_model);
        Tensor xa = load_pixels(on_adv);
        optim::OnlineConfig oc;
        oc.iters = on_iters;
        oc.lr = on_lr;
        auto res = optim::online_update(model, xa, oc);
        std::vector<uint8_t> out = {'L', 'I', 'C', 'T'};
        put_u32(out, static_cast<uint32_t>(res.x_u.shape().size()));
        for (int d : res.x_u.shape()) put_u32(out, static_cast<uint32_t>(d));
        for (float v : res.x_u.data()) put_f32(out, v);
        std::ofstream f(on_out, std::ios::binary);
        f.write(reinterpret_cast<const char*>(out.data()),
                static_cast<std::streamsize>(out.size()));
        std::printf("online update: loss %0.6f -> %0.6f (%s)\n",
                    res.initial_loss, res.final_loss, on_out.c_str());
      }
      return 0;
    }

    if (*report) {
      auto cfg = suite::SuiteConfig::from_json_file(rp_config);
      if (rp_plots_only) {
        suite::emit_plotdata(cfg);
        return 0;
      }
      suite::SuiteResult res = suite::run_suite(cfg);
      std::printf("tasks: %d total, %d completed, %d skipped, %d failed\n",
                  res.total_tasks, res.completed, res.skipped, res.failed);
      for (const auto& f : res.failures)
        std::fprintf(stderr, "failed: %s\n", f.c_str());
      return res.failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 0;
}
