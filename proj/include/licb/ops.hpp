#pragma once

#include "licb/tensor.hpp"

namespace licb::diff {

enum class QuantMode { kNoise, kRoundSte };

// elementwise
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);
Tensor scalar_add(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor abs_val(const Tensor& a);

// reductions (double accumulation)
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// structure
Tensor concat_ch(const Tensor& a, const Tensor& b);
Tensor slice_ch(const Tensor& a, int c0, int c1);
// adds a per-channel bias vector b(C) to x(N,C,H,W)
Tensor bias_add(const Tensor& x, const Tensor& b);

// convolution (cross-correlation), kernel (OC, IC, KH, KW)
Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int padding);
// exact adjoint of conv2d with the same geometry, kernel (IC, OC, KH, KW);
// output spatial side = (in - 1) * stride - 2 * padding + ksize
Tensor conv2d_transpose(const Tensor& x, const Tensor& k, int stride, int padding);

// generalized divisive normalization over channels, per pixel:
//   forward:  y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2)
//   inverse:  y_i = x_i * sqrt(beta_i + sum_j gamma_ij x_j^2)
// beta (C) must be positive, gamma (C, C) nonnegative.
Tensor gdn(const Tensor& x, const Tensor& beta, const Tensor& gamma, bool inverse);

// quantizer: kNoise adds seeded iid uniform(-0.5, 0.5); kRoundSte rounds with a
// straight-through gradient. rng required only for kNoise.
Tensor quantize(const Tensor& x, QuantMode mode, Rng* rng = nullptr);

// interval likelihood under an elementwise Gaussian: p = F(y+.5) - F(y-.5).
// mu and sigma share y's shape; sigma must already be lower-bounded.
Tensor gaussian_likelihood(const Tensor& y, const Tensor& mu, const Tensor& sigma);

// interval likelihood under a per-channel logistic; loc and scale have shape (C)
Tensor logistic_likelihood(const Tensor& y, const Tensor& loc, const Tensor& scale);

// log2(max(p, floor)); zero gradient below the floor
Tensor log2_floored(const Tensor& p, double floor = 1e-9);

// finite-difference oracle used by the test suites: max relative error of the
// analytic gradient of loss_fn at leaf, central differences with the given step.
double finite_diff_max_rel_err(
    const std::function<Tensor(const Tensor&)>& loss_fn, Tensor leaf,
    double step = 1e-3, int max_probes = -1, Rng* probe_rng = nullptr);

}  // namespace licb::diff
