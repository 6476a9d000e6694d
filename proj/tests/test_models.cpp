#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "licb/model.hpp"
#include "licb/optim.hpp"
#include "licb/textures.hpp"

using namespace licb;
using namespace licb::diff;
using namespace licb::models;

TEST_CASE("encode/decode shape arithmetic") {
  auto model = CompressionModel::create(Family::kHyperS, 0.01, 3);
  Tensor x = textures::noise_texture(64, 1);
  auto b = model.encode(x, QuantMode::kRoundSte);
  CHECK(b.y_hat.shape() == ShapeVec{1, 48, 8, 8});
  REQUIRE(b.z_hat.has_value());
  CHECK(b.z_hat->shape() == ShapeVec{1, 16, 4, 4});
  CHECK(b.sigma->shape() == b.y_hat.shape());
  Tensor xh = model.decode(b.y_hat);
  CHECK(xh.shape() == x.shape());
}

TEST_CASE("encode rejects bad geometry") {
  auto model = CompressionModel::create(Family::kFactorized, 0.01, 3);
  Tensor bad = Tensor::zeros({1, 3, 60, 64});
  CHECK_THROWS_AS(model.encode(bad, QuantMode::kRoundSte), TensorError);
  Tensor bad2 = Tensor::zeros({1, 1, 64, 64});
  CHECK_THROWS_AS(model.encode(bad2, QuantMode::kRoundSte), TensorError);
}

TEST_CASE("deterministic encode and family gating") {
  auto model = CompressionModel::create(Family::kFactorized, 0.01, 5);
  Tensor zero = Tensor::zeros({1, 3, 64, 64});
  auto b1 = model.encode(zero, QuantMode::kRoundSte);
  auto b2 = model.encode(zero, QuantMode::kRoundSte);
  for (size_t i = 0; i < b1.y_hat.numel(); ++i)
    CHECK(b1.y_hat.data()[i] == b2.y_hat.data()[i]);
  CHECK(!b1.z.has_value());
  CHECK(!b1.z_hat.has_value());
  CHECK(!b1.mu.has_value());
  CHECK(b1.bits_z_value() == 0.0);

  auto hs = CompressionModel::create(Family::kHyperS, 0.01, 5);
  auto bh = hs.encode(zero, QuantMode::kRoundSte);
  CHECK(bh.z_hat.has_value());
  CHECK(!bh.mu.has_value());  // scale-only hyperprior

  // log-likelihoods are log-probabilities
  for (float p : bh.p_y.data()) {
    CHECK(p > 0.0f);
    CHECK(p <= 1.0f);
  }
}

TEST_CASE("zero latents decode to finite output") {
  auto model = CompressionModel::create(Family::kHyperMc, 0.01, 7);
  Tensor y0 = Tensor::zeros({1, 48, 8, 8});
  Tensor xh = model.decode(y0);
  for (float v : xh.data()) CHECK(std::isfinite(v));
}

TEST_CASE("forward_rd rate decomposition and summation oracle") {
  Tensor x = textures::edge_texture(64, 11);
  for (auto fam : {Family::kFactorized, Family::kHyperS, Family::kHyperMc}) {
    auto model = CompressionModel::create(fam, 0.01, 11);
    auto rd = model.forward_rd(x, QuantMode::kRoundSte);
    double npix = 64.0 * 64.0;
    // exact additivity of the two streams
    CHECK(rd.rate_bpp.scalar_value() ==
          doctest::Approx(rd.bpp_y + rd.bpp_z).epsilon(1e-15));

    // hand-summed per-element log likelihoods
    double bits = 0.0;
    for (float p : rd.bundle.p_y.data())
      bits -= std::log2(std::max(static_cast<double>(p), 1e-9));
    CHECK(rd.bundle.bits_y_value() / npix ==
          doctest::Approx(bits / npix).epsilon(1e-6));
  }
}

TEST_CASE("layer registry") {
  auto m1 = CompressionModel::create(Family::kHyperS, 0.01, 13);
  auto list = m1.layer_list();
  REQUIRE(list.size() == 13);
  for (size_t i = 0; i < list.size(); ++i)
    CHECK(list[i].index == static_cast<int>(i));
  int n_q = 0;
  for (const auto& h : list) {
    if (h.name == "Q") ++n_q;
    CHECK(h.name.find("ha.") == std::string::npos);
    CHECK(h.name.find("hs.") == std::string::npos);
  }
  CHECK(n_q == 1);

  auto m2 = CompressionModel::create(Family::kHyperS, 0.01, 99);
  auto list2 = m2.layer_list();
  REQUIRE(list2.size() == list.size());
  for (size_t i = 0; i < list.size(); ++i) CHECK(list2[i].name == list[i].name);
}

TEST_CASE("partial_encode prefixes the distortion path") {
  auto model = CompressionModel::create(Family::kHyperMc, 0.02, 17);
  Tensor x = textures::noise_texture(64, 17);

  Tensor p0 = model.partial_encode(x, 0);
  REQUIRE(p0.numel() == x.numel());
  for (size_t i = 0; i < x.numel(); ++i) CHECK(p0.data()[i] == x.data()[i]);

  int I1 = static_cast<int>(model.layer_list().size());
  Tensor full = model.partial_encode(x, I1);
  auto b = model.encode(x, QuantMode::kRoundSte);
  Tensor direct = model.decode(b.y_hat);
  REQUIRE(full.numel() == direct.numel());
  for (size_t i = 0; i < full.numel(); ++i)
    CHECK(full.data()[i] == doctest::Approx(direct.data()[i]).epsilon(1e-6));

  // intermediate equals applying the next layer to the previous prefix
  Tensor p3 = model.partial_encode(x, 3);
  Tensor p4 = model.partial_encode(x, 4);
  Tensor p4b = model.apply_layer(p3, 3);
  REQUIRE(p4.numel() == p4b.numel());
  for (size_t i = 0; i < p4.numel(); ++i) CHECK(p4.data()[i] == p4b.data()[i]);

  CHECK_THROWS_AS(model.partial_encode(x, I1 + 1), TensorError);
}

TEST_CASE("context transform is strictly causal") {
  auto model = CompressionModel::create(Family::kHyperMc, 0.01, 19);
  Rng rng(21);
  std::vector<float> yv(48 * 8 * 8);
  for (float& v : yv) v = static_cast<float>(rng.uniform_int(-4, 4));
  Tensor y1 = Tensor::from_data({1, 48, 8, 8}, yv);

  int h0 = 3, w0 = 5;  // probe location
  auto changed_at = [&](int ph, int pw) {
    std::vector<float> yv2 = yv;
    for (int c = 0; c < 48; ++c) yv2[(c * 8 + ph) * 8 + pw] += 7.0f;
    Tensor y2 = Tensor::from_data({1, 48, 8, 8}, std::move(yv2));
    Tensor c1 = model.context_features(y1);
    Tensor c2 = model.context_features(y2);
    for (int c = 0; c < 48; ++c) {
      size_t idx = (static_cast<size_t>(c) * 8 + h0) * 8 + w0;
      if (c1.data()[idx] != c2.data()[idx]) return true;
    }
    return false;
  };
  CHECK_FALSE(changed_at(h0, w0));      // center excluded
  CHECK_FALSE(changed_at(h0, w0 + 1));  // raster-future
  CHECK_FALSE(changed_at(h0 + 1, w0));
  CHECK(changed_at(h0, w0 - 1));        // raster-past neighbors feed in
  CHECK(changed_at(h0 - 1, w0));
}

TEST_CASE("checkpoint roundtrip") {
  auto model = CompressionModel::create(Family::kHyperMc, 0.037, 23);
  auto bytes = model.serialize();
  auto back = CompressionModel::deserialize(bytes);
  CHECK(back.family() == model.family());
  CHECK(back.lambda() == model.lambda());
  REQUIRE(back.param_names() == model.param_names());
  for (const auto& name : model.param_names()) {
    auto a = model.param(name).data();
    auto b = back.param(name).data();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  std::string path =
      (std::filesystem::temp_directory_path() / "licb_test_model.licm").string();
  model.save(path);
  auto loaded = CompressionModel::load(path);
  CHECK(loaded.serialize() == bytes);
  std::filesystem::remove(path);

  // clone is a deep copy
  auto c = model.clone();
  CHECK(c.serialize() == bytes);
}

TEST_CASE("short training beats the mean-color baseline") {
  auto model = CompressionModel::create(Family::kFactorized, 0.05, 29);
  auto images = textures::make_dataset(2, 64, 3000);
  optim::TrainConfig tc;
  tc.steps = 160;
  tc.batch = 2;
  tc.crop = 48;
  tc.seed = 5;
  optim::train_rd(model, images, tc);

  const Tensor& x = images[0];
  auto rd = model.forward_rd(x, QuantMode::kRoundSte);
  double mse = rd.distortion.scalar_value();

  double mean_mse = 0.0;
  for (int c = 0; c < 3; ++c) {
    double m = 0.0;
    auto v = x.data().subspan(static_cast<size_t>(c) * 64 * 64, 64 * 64);
    for (float f : v) m += f;
    m /= v.size();
    for (float f : v) mean_mse += (f - m) * (f - m) * 255.0 * 255.0;
  }
  mean_mse /= x.numel();
  CHECK(mse < mean_mse);
}
