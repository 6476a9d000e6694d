#include <cmath>
#include <numeric>

#include "doctest.h"
#include "licb/analysis.hpp"
#include "licb/attacks.hpp"
#include "licb/textures.hpp"

using namespace licb;
using namespace licb::diff;
using namespace licb::analysis;
using licb::models::CompressionModel;
using licb::models::Family;

namespace {

Tensor attacked(const CompressionModel& model, const Tensor& x, double eps = 1e-3) {
  attacks::AttackConfig cfg;
  cfg.surface_steps = 4;
  cfg.epsilon = eps;
  return attacks::srda(model, x, cfg).x_adv;
}

}  // namespace

TEST_CASE("safe distortion and psnr") {
  Tensor a = Tensor::from_data({1, 3, 1, 1}, {0.5f, 0.5f, 0.5f});
  Tensor b = Tensor::from_data({1, 3, 1, 1}, {0.5f, 0.5f, 0.5f});
  CHECK(safe_mse255(a, b) == 0.0);
  CHECK(std::isinf(psnr_from_mse(0.0)));

  // one channel off by 0.1
  Tensor c = Tensor::from_data({1, 3, 1, 1}, {0.6f, 0.5f, 0.5f});
  CHECK(safe_mse255(a, c) == doctest::Approx(25.5 * 25.5 / 3.0).epsilon(1e-4));
  CHECK(psnr_from_mse(255.0 * 255.0) == doctest::Approx(0.0));

  // invalid reconstruction values count as full-scale error
  Tensor nanv = Tensor::from_data(
      {1, 3, 1, 1}, {std::numeric_limits<float>::quiet_NaN(), 1.7f, -0.2f});
  Tensor zero = Tensor::from_data({1, 3, 1, 1}, {0.0f, 0.0f, 0.0f});
  CHECK(safe_mse255(zero, nanv) == doctest::Approx(255.0 * 255.0));
}

TEST_CASE("perf_variation identity and validation") {
  auto model = CompressionModel::create(Family::kHyperS, 0.01, 81);
  Tensor x = textures::noise_texture(64, 301);
  RDReport r = perf_variation(model, x, x);
  CHECK(r.delta_r == 0.0);
  CHECK(r.delta_d == 0.0);
  CHECK(r.r_pre == r.r_post);
  CHECK(r.psnr_pre == r.psnr_post);

  Tensor wrong = Tensor::zeros({1, 3, 32, 32});
  CHECK_THROWS_AS(perf_variation(model, x, wrong), AnalysisError);
}

TEST_CASE("perf_variation on an attacked input") {
  auto model = CompressionModel::create(Family::kFactorized, 0.01, 83);
  Tensor x = textures::edge_texture(64, 302);
  Tensor x_a = attacked(model, x, 0.02);
  RDReport r = perf_variation(model, x, x_a);
  CHECK(r.delta_r == doctest::Approx(r.r_post - r.r_pre).epsilon(1e-12));
  CHECK(r.delta_d == doctest::Approx(r.d_post - r.d_pre).epsilon(1e-12));
  CHECK(r.delta_r > 0.0);  // rate direction
  CHECK(r.psnr_pre == doctest::Approx(psnr_from_mse(r.d_pre)));
}

TEST_CASE("aggregate groups and moments") {
  std::vector<RDReport> reps(3);
  for (int i = 0; i < 3; ++i) {
    reps[i].family = Family::kFactorized;
    reps[i].lambda_index = 0;
    reps[i].direction = "rate";
    reps[i].image_id = "img" + std::to_string(i);
  }
  reps[0].delta_r = 0.0;
  reps[1].delta_r = 2.0;
  reps[2].delta_r = 1.0;
  reps[2].direction = "distortion";

  auto rows = aggregate(reps);
  const AggRow* all = nullptr;
  const AggRow* rate = nullptr;
  const AggRow* sub = nullptr;
  for (const auto& r : rows) {
    if (r.group == "all") all = &r;
    if (r.group == "direction:rate") rate = &r;
    if (r.group.rfind("submodel:", 0) == 0) sub = &r;
  }
  REQUIRE(all);
  REQUIRE(rate);
  REQUIRE(sub);
  CHECK(all->n == 3);
  CHECK(all->mu_dr == doctest::Approx(1.0));
  CHECK(all->sd_dr == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(rate->n == 2);
  CHECK(rate->mu_dr == doctest::Approx(1.0));
  CHECK(rate->sd_dr == doctest::Approx(1.0));  // population sd of {0,2}
  CHECK(sub->n == 3);

  // single report has zero spread
  auto one = aggregate(std::span<const RDReport>(reps.data(), 1));
  for (const auto& r : one)
    if (r.group == "all") CHECK(r.sd_dr == 0.0);

  CHECK_THROWS_AS(aggregate(std::span<const RDReport>{}), AnalysisError);
}

TEST_CASE("local maps are consistent with the global deltas") {
  auto model = CompressionModel::create(Family::kHyperMc, 0.01, 87);
  Tensor x = textures::noise_texture(64, 303);

  LocalMaps zero = local_maps(model, x, x);
  for (double v : zero.rate_cells) CHECK(v == 0.0);
  for (double v : zero.dist_pixels) CHECK(v == 0.0);
  CHECK(zero.grid_h == 8);
  CHECK(zero.grid_w == 8);
  CHECK(zero.img_h == 64);
  CHECK(zero.img_w == 64);

  Tensor x_a = attacked(model, x, 0.02);
  LocalMaps m = local_maps(model, x, x_a);
  double cell_sum = std::accumulate(m.rate_cells.begin(), m.rate_cells.end(), 0.0);
  CHECK(m.delta_r_bpp == doctest::Approx(cell_sum / (64.0 * 64.0)).epsilon(1e-9));
  double pix_mean =
      std::accumulate(m.dist_pixels.begin(), m.dist_pixels.end(), 0.0) /
      m.dist_pixels.size();
  CHECK(m.delta_d == doctest::Approx(pix_mean).epsilon(1e-9));

  // map totals agree with the report deltas
  RDReport r = perf_variation(model, x, x_a);
  CHECK(m.delta_r_bpp == doctest::Approx(r.delta_r).epsilon(1e-6));
  CHECK(m.delta_d == doctest::Approx(r.delta_d).epsilon(1e-6));
}

TEST_CASE("causal interventions bracket the bitrate") {
  Tensor x = textures::noise_texture(64, 304);
  for (auto fam : {Family::kHyperS, Family::kHyperMc}) {
    auto model = CompressionModel::create(fam, 0.01, 89);
    Tensor x_a = attacked(model, x, 0.02);
    double bpp_adv =
        model.forward_rd(x_a, QuantMode::kRoundSte).rate_bpp.scalar_value();
    double bpp_ben =
        model.forward_rd(x, QuantMode::kRoundSte).rate_bpp.scalar_value();

    EciReport none = eci(model, x, x_a, DoSet{});
    CHECK(none.bpp_total == doctest::Approx(bpp_adv).epsilon(1e-12));

    DoSet full;
    full.y_s = true;
    full.y_h = true;
    full.y_c = fam == Family::kHyperMc;
    EciReport all = eci(model, x, x_a, full);
    CHECK(all.bpp_total == doctest::Approx(bpp_ben).epsilon(1e-9));

    CHECK(none.scale > 0.0);
    if (fam == Family::kHyperMc) {
      CHECK(none.delta_mean.has_value());
      EciReport ys = eci(model, x, x_a, DoSet{.y_s = true});
      CHECK(ys.delta_mean.has_value());
    } else {
      CHECK(!none.delta_mean.has_value());
      CHECK_THROWS_AS(eci(model, x, x_a, DoSet{.y_c = true}), AnalysisError);
    }
  }

  // factorized family has no hyper or context paths to intervene on
  auto fac = CompressionModel::create(Family::kFactorized, 0.01, 89);
  Tensor x_a = attacked(fac, x, 0.02);
  EciReport ys = eci(fac, x, x_a, DoSet{.y_s = true});
  double ben =
      fac.forward_rd(x, QuantMode::kRoundSte).rate_bpp.scalar_value();
  CHECK(ys.bpp_total == doctest::Approx(ben).epsilon(1e-9));
  CHECK_THROWS_AS(eci(fac, x, x_a, DoSet{.y_h = true}), AnalysisError);
  CHECK_THROWS_AS(eci(fac, x, x_a, DoSet{.y_c = true}), AnalysisError);
}

TEST_CASE("distance magnification telescopes") {
  auto model = CompressionModel::create(Family::kHyperS, 0.01, 91);
  Tensor x = textures::edge_texture(64, 305);
  Tensor x_a = attacked(model, x, 0.02);

  MagnifyProfile p = ldmr_cdmr(model, x, x_a);
  size_t I1 = model.layer_list().size();
  REQUIRE(p.rows.size() == I1);
  for (size_t i = 0; i < I1; ++i)
    CHECK(p.rows[i].layer == model.layer_list()[i].name);

  // cdmr_i = prod_{k<=i} ldmr_k, and the full product collapses to the
  // first interval because the last interval is defined as 1
  double prod = 1.0;
  for (const auto& row : p.rows) {
    prod *= row.ldmr;
    CHECK(row.cdmr == doctest::Approx(prod).epsilon(1e-9));
  }
  CHECK(p.rows.back().cdmr ==
        doctest::Approx(p.rows.front().ldmr_interval).epsilon(1e-4));
  // ratio chain is consistent with the interval column
  for (size_t i = 0; i + 1 < I1; ++i)
    CHECK(p.rows[i].ldmr ==
          doctest::Approx(p.rows[i].ldmr_interval / p.rows[i + 1].ldmr_interval)
              .epsilon(1e-6));

  // identical inputs give a zero denominator, which is an error with provenance
  try {
    ldmr_cdmr(model, x, x);
    FAIL("expected AnalysisError");
  } catch (const AnalysisError& e) {
    CHECK(std::string(e.what()).find(model.layer_list()[0].name) !=
          std::string::npos);
  }
}
