#include <cmath>
#include <vector>

#include "doctest.h"
#include "licb/ops.hpp"

using namespace licb;
using namespace licb::diff;

namespace {

Tensor randu(const ShapeVec& shape, Rng& rng, double lo = -2.0, double hi = 2.0,
             bool grad = false) {
  std::vector<float> v(shape_numel(shape));
  for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return Tensor::from_data(shape, std::move(v), grad);
}

// plain quadruple-loop cross-correlation reference
std::vector<float> conv_ref(const Tensor& x, const Tensor& k, int stride,
                            int pad) {
  int N = x.shape()[0], IC = x.shape()[1], IH = x.shape()[2], IW = x.shape()[3];
  int OC = k.shape()[0], KH = k.shape()[2], KW = k.shape()[3];
  int OH = (IH + 2 * pad - KH) / stride + 1;
  int OW = (IW + 2 * pad - KW) / stride + 1;
  std::vector<float> out(static_cast<size_t>(N) * OC * OH * OW, 0.0f);
  auto xv = x.data();
  auto kv = k.data();
  for (int n = 0; n < N; ++n)
    for (int oc = 0; oc < OC; ++oc)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow) {
          double acc = 0.0;
          for (int ic = 0; ic < IC; ++ic)
            for (int kh = 0; kh < KH; ++kh)
              for (int kw = 0; kw < KW; ++kw) {
                int ih = oh * stride - pad + kh;
                int iw = ow * stride - pad + kw;
                if (ih < 0 || ih >= IH || iw < 0 || iw >= IW) continue;
                acc += static_cast<double>(
                           xv[((static_cast<size_t>(n) * IC + ic) * IH + ih) *
                                  IW +
                              iw]) *
                       kv[((static_cast<size_t>(oc) * IC + ic) * KH + kh) * KW +
                          kw];
              }
          out[((static_cast<size_t>(n) * OC + oc) * OH + oh) * OW + ow] =
              static_cast<float>(acc);
        }
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

}  // namespace

TEST_CASE("conv2d identity kernel") {
  Rng rng(1);
  Tensor x = randu({1, 2, 5, 5}, rng);
  std::vector<float> kd(2 * 2 * 3 * 3, 0.0f);
  // Kronecker delta per channel
  kd[0 * 2 * 9 + 0 * 9 + 4] = 1.0f;
  kd[1 * 2 * 9 + 1 * 9 + 4] = 1.0f;
  Tensor k = Tensor::from_data({2, 2, 3, 3}, std::move(kd));
  Tensor y = conv2d(x, k, 1, 1);
  REQUIRE(y.shape() == x.shape());
  for (size_t i = 0; i < x.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-6));
}

TEST_CASE("conv2d 1x1 all-ones kernel sums channels") {
  Rng rng(2);
  Tensor x = randu({1, 3, 4, 4}, rng);
  Tensor k = Tensor::full({1, 3, 1, 1}, 1.0f);
  Tensor y = conv2d(x, k, 1, 0);
  auto xv = x.data();
  for (int i = 0; i < 16; ++i) {
    float want = xv[i] + xv[16 + i] + xv[32 + i];
    CHECK(y.data()[i] == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("conv2d matches quadruple-loop reference") {
  Rng rng(3);
  for (int stride : {1, 2})
    for (int pad : {0, 1}) {
      Tensor x = randu({1, 2, 8, 8}, rng);
      Tensor k = randu({3, 2, 3, 3}, rng);
      Tensor y = conv2d(x, k, stride, pad);
      auto ref = conv_ref(x, k, stride, pad);
      REQUIRE(y.numel() == ref.size());
      for (size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(y.data()[i] - ref[i]) < 1e-5);
    }
}

TEST_CASE("conv2d_transpose delta kernel identity") {
  Rng rng(4);
  Tensor x = randu({1, 2, 5, 5}, rng);
  std::vector<float> kd(2 * 2 * 1 * 1, 0.0f);
  kd[0 * 2 + 0] = 1.0f;
  kd[1 * 2 + 1] = 1.0f;
  Tensor k = Tensor::from_data({2, 2, 1, 1}, std::move(kd));
  Tensor y = conv2d_transpose(x, k, 1, 0);
  REQUIRE(y.shape() == x.shape());
  for (size_t i = 0; i < x.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-6));
}

TEST_CASE("conv adjoint identity") {
  Rng rng(5);
  for (int stride : {1, 2}) {
    Tensor x = randu({1, 2, 8, 8}, rng);
    Tensor k = randu({3, 2, 4, 4}, rng);
    Tensor cx = conv2d(x, k, stride, 1);
    Tensor y = randu(cx.shape(), rng);
    // conv2d_transpose kernel layout is (IC, OC, KH, KW) from the conv's view
    std::vector<float> kt(k.numel());
    for (int ic = 0; ic < 2; ++ic)
      for (int oc = 0; oc < 3; ++oc)
        for (int i = 0; i < 16; ++i)
          kt[(static_cast<size_t>(oc) * 2 + ic) * 16 + i] =
              k.data()[(static_cast<size_t>(oc) * 2 + ic) * 16 + i];
    Tensor ty = conv2d_transpose(y, Tensor::from_data({3, 2, 4, 4}, kt), stride, 1);
    REQUIRE(ty.shape() == x.shape());
    CHECK(dot(cx.data(), y.data()) ==
          doctest::Approx(dot(x.data(), ty.data())).epsilon(1e-4));
  }
}

TEST_CASE("conv2d_transpose stride-2 shape doubling") {
  Rng rng(6);
  Tensor x = randu({1, 2, 4, 4}, rng);
  Tensor k = randu({2, 3, 4, 4}, rng);
  Tensor y = conv2d_transpose(x, k, 2, 1);
  CHECK(y.shape() == ShapeVec{1, 3, 8, 8});
}

TEST_CASE("gdn degenerate and scaled cases") {
  Rng rng(7);
  Tensor x = randu({1, 2, 3, 3}, rng);
  Tensor g0 = Tensor::zeros({2, 2});
  Tensor b1 = Tensor::full({2}, 1.0f);
  Tensor y = gdn(x, b1, g0, false);
  for (size_t i = 0; i < x.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-6));

  Tensor b4 = Tensor::full({2}, 4.0f);
  Tensor yf = gdn(x, b4, g0, false);
  Tensor yi = gdn(x, b4, g0, true);
  for (size_t i = 0; i < x.numel(); ++i) {
    CHECK(yf.data()[i] == doctest::Approx(x.data()[i] / 2.0f).epsilon(1e-6));
    CHECK(yi.data()[i] == doctest::Approx(x.data()[i] * 2.0f).epsilon(1e-6));
  }

  CHECK_THROWS_AS(gdn(x, Tensor::zeros({2}), g0, false), TensorError);
}

TEST_CASE("gdn matches elementwise reference") {
  Rng rng(8);
  int C = 3;
  Tensor x = randu({1, C, 4, 4}, rng);
  Tensor beta = randu({C}, rng, 0.5, 2.0);
  Tensor gamma = randu({C, C}, rng, 0.0, 0.3);
  for (bool inverse : {false, true}) {
    Tensor y = gdn(x, beta, gamma, inverse);
    auto xv = x.data();
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < 16; ++i) {
        double pool = beta.data()[c];
        for (int j = 0; j < C; ++j) {
          double xj = xv[j * 16 + i];
          pool += gamma.data()[c * C + j] * xj * xj;
        }
        double want = inverse ? xv[c * 16 + i] * std::sqrt(pool)
                              : xv[c * 16 + i] / std::sqrt(pool);
        CHECK(std::abs(y.data()[c * 16 + i] - want) < 1e-5);
      }
  }
}

TEST_CASE("quantize semantics") {
  Tensor x = Tensor::from_data({1, 1, 1, 4}, {0.4f, 0.6f, -1.5f, 2.0f}, true);
  Tensor q = quantize(x, QuantMode::kRoundSte);
  CHECK(q.data()[0] == 0.0f);
  CHECK(q.data()[1] == 1.0f);
  // idempotence
  Tensor qq = quantize(q, QuantMode::kRoundSte);
  for (size_t i = 0; i < q.numel(); ++i) CHECK(qq.data()[i] == q.data()[i]);

  backward(sum(q));
  for (float g : x.grad()) CHECK(g == 1.0f);

  Rng rng(11);
  Tensor big = randu({1, 2, 6, 6}, rng);
  Tensor n = quantize(big, QuantMode::kNoise, &rng);
  for (size_t i = 0; i < big.numel(); ++i)
    CHECK(std::abs(n.data()[i] - big.data()[i]) <= 0.5f);

  CHECK_THROWS_AS(quantize(big, QuantMode::kNoise, nullptr), TensorError);

  // identical seeds give bit-identical noise draws
  Rng r1(99), r2(99);
  Tensor n1 = quantize(big, QuantMode::kNoise, &r1);
  Tensor n2 = quantize(big, QuantMode::kNoise, &r2);
  for (size_t i = 0; i < n1.numel(); ++i) CHECK(n1.data()[i] == n2.data()[i]);
}

TEST_CASE("backward basics") {
  Tensor x = Tensor::from_data({4}, {1.0f, -2.0f, 0.5f, 3.0f}, true);
  Tensor loss = sum(mul(x, x));
  backward(loss);
  for (size_t i = 0; i < 4; ++i)
    CHECK(x.grad()[i] == doctest::Approx(2.0f * x.data()[i]).epsilon(1e-6));

  CHECK_THROWS_AS(backward(loss), TensorError);        // no silent re-run
  CHECK_THROWS_AS(backward(Tensor::zeros({2})), TensorError);  // non-scalar

  // disconnected leaf keeps zero grad
  Tensor y = Tensor::zeros({3}, true);
  Tensor l2 = sum(x.detach());
  backward(l2);
  for (float g : y.grad()) CHECK(g == 0.0f);
}

TEST_CASE("finite differences across composed ops") {
  Rng rng(13);
  Tensor x = randu({1, 2, 6, 6}, rng, -2.0, 2.0, true);
  Tensor k = randu({2, 2, 3, 3}, rng, -1.0, 1.0, true);
  Tensor kt = randu({2, 2, 4, 4}, rng, -0.5, 0.5, true);
  Tensor beta = randu({2}, rng, 0.5, 1.5, true);
  Tensor gamma = randu({2, 2}, rng, 0.01, 0.2, true);
  Tensor b = randu({2}, rng, -0.5, 0.5, true);

  auto loss_fn = [&](const Tensor&) {
    Tensor h = conv2d(x, k, 2, 1);
    h = bias_add(h, b);
    h = gdn(h, beta, gamma, false);
    h = conv2d_transpose(h, kt, 2, 1);
    h = gdn(h, beta, gamma, true);
    Tensor s = softplus(scalar_mul(h, 0.3));
    return scalar_mul(add(mean(mul(h, h)), mean(s)), 0.2);
  };
  Rng probe(17);
  for (Tensor* leaf : {&x, &k, &kt, &beta, &gamma, &b}) {
    double err = finite_diff_max_rel_err(loss_fn, *leaf, 1e-3, 24, &probe);
    CHECK(err <= 1e-3);
  }
}

TEST_CASE("finite differences for piecewise and channel ops") {
  Rng rng(29);
  // keep probes away from the relu/abs kinks at zero
  std::vector<float> v(2 * 4 * 4 * 4);
  for (float& f : v) {
    double m = rng.uniform(0.3, 2.0);
    f = static_cast<float>(rng.uniform() < 0.5 ? -m : m);
  }
  Tensor x = Tensor::from_data({2, 4, 4, 4}, std::move(v), true);
  Tensor loc = randu({4}, rng, -0.5, 0.5, true);
  Tensor scl = randu({4}, rng, 0.3, 1.0, true);
  auto loss_fn = [&](const Tensor&) {
    Tensor a = slice_ch(x, 0, 2);
    Tensor b = slice_ch(x, 2, 4);
    Tensor c = concat_ch(b, a);
    Tensor h = add(relu(c), abs_val(c));
    Tensor p = logistic_likelihood(x, loc, scl);
    return scalar_mul(add(mean(h), mean(log2_floored(p))), 0.25);
  };
  Rng probe(31);
  for (Tensor* leaf : {&x, &loc, &scl}) {
    double err = finite_diff_max_rel_err(loss_fn, *leaf, 1e-3, 20, &probe);
    CHECK(err <= 1e-3);
  }
}

TEST_CASE("finite differences through likelihood graph") {
  Rng rng(19);
  Tensor y = randu({1, 2, 4, 4}, rng, -2.0, 2.0, true);
  Tensor mu = randu({1, 2, 4, 4}, rng, -1.0, 1.0, true);
  Tensor sg = randu({1, 2, 4, 4}, rng, 0.2, 1.5, true);
  // frozen-noise quantization: the same draw on every evaluation keeps the
  // loss differentiable in y, and the identity backprop rule is exact for it
  auto loss_fn = [&](const Tensor&) {
    Rng qr(7);
    Tensor q = quantize(y, QuantMode::kNoise, &qr);
    Tensor p = gaussian_likelihood(q, mu, sg);
    return scalar_mul(sum(log2_floored(p)), -1.0);
  };
  Rng probe(23);
  // y flows through the straight-through quantizer
  for (Tensor* leaf : {&mu, &sg, &y}) {
    double err = finite_diff_max_rel_err(loss_fn, *leaf, 1e-3, 16, &probe);
    CHECK(err <= 1e-3);
  }
}
