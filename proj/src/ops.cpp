#include "licb/ops.hpp"

#include <algorithm>
#include <cmath>

namespace licb::diff {

namespace {

Tensor make_op(const ShapeVec& shape, const char* op,
               std::vector<NodePtr> parents) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(shape_numel(shape), 0.0f);
  n->op = op;
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return Tensor(n);
}

void check_finite(const Tensor& t) {
  for (float v : t.data())
    if (!std::isfinite(v)) throw NonFiniteError(t.node()->op, "");
}

// accumulate into parent grad if it participates in differentiation
inline bool wants_grad(Node* p) { return p->requires_grad; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw TensorError(std::string(op) + ": shape mismatch " +
                      shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline double sigmoid(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = make_op(a.shape(), "add", {a.node_ptr(), b.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i)
    ov->value[i] = static_cast<float>(static_cast<double>(a.data()[i]) +
                                      static_cast<double>(b.data()[i]));
  if (a.numel() == 1 && !std::isnan(a.node()->scalar_acc) &&
      !std::isnan(b.node()->scalar_acc))
    ov->scalar_acc = a.node()->scalar_acc + b.node()->scalar_acc;
  ov->backprop = [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node* p = self.parents[k].get();
      if (!wants_grad(p)) continue;
      p->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  };
  check_finite(out);
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = make_op(a.shape(), "sub", {a.node_ptr(), b.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i)
    ov->value[i] = static_cast<float>(static_cast<double>(a.data()[i]) -
                                      static_cast<double>(b.data()[i]));
  if (a.numel() == 1 && !std::isnan(a.node()->scalar_acc) &&
      !std::isnan(b.node()->scalar_acc))
    ov->scalar_acc = a.node()->scalar_acc - b.node()->scalar_acc;
  ov->backprop = [](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    if (wants_grad(a)) {
      a->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (wants_grad(b)) {
      b->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) b->grad[i] -= self.grad[i];
    }
  };
  check_finite(out);
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = make_op(a.shape(), "mul", {a.node_ptr(), b.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i)
    ov->value[i] = static_cast<float>(static_cast<double>(a.data()[i]) *
                                      static_cast<double>(b.data()[i]));
  ov->backprop = [](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    if (wants_grad(a)) {
      a->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        a->grad[i] += self.grad[i] * b->value[i];
    }
    if (wants_grad(b)) {
      b->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        b->grad[i] += self.grad[i] * a->value[i];
    }
  };
  check_finite(out);
  return out;
}

Tensor scalar_mul(const Tensor& a, double s) {
  Tensor out = make_op(a.shape(), "scalar_mul", {a.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i)
    ov->value[i] = static_cast<float>(static_cast<double>(a.data()[i]) * s);
  if (a.numel() == 1 && !std::isnan(a.node()->scalar_acc))
    ov->scalar_acc = a.node()->scalar_acc * s;
  ov->backprop = [s](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      a->grad[i] += static_cast<float>(self.grad[i] * s);
  };
  check_finite(out);
  return out;
}

Tensor scalar_add(const Tensor& a, double s) {
  Tensor out = make_op(a.shape(), "scalar_add", {a.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i)
    ov->value[i] = static_cast<float>(static_cast<double>(a.data()[i]) + s);
  if (a.numel() == 1 && !std::isnan(a.node()->scalar_acc))
    ov->scalar_acc = a.node()->scalar_acc + s;
  ov->backprop = [](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
  };
  check_finite(out);
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = make_op(a.shape(), "relu", {a.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i)
    ov->value[i] = a.data()[i] > 0.0f ? a.data()[i] : 0.0f;
  ov->backprop = [](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (a->value[i] > 0.0f) a->grad[i] += self.grad[i];
  };
  check_finite(out);
  return out;
}

Tensor softplus(const Tensor& a) {
  Tensor out = make_op(a.shape(), "softplus", {a.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i) {
    double x = a.data()[i];
    double y;
    if (x > 30.0)
      y = x;
    else if (x < -30.0)
      y = std::exp(x);
    else
      y = std::log1p(std::exp(x));
    ov->value[i] = static_cast<float>(y);
  }
  ov->backprop = [](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      a->grad[i] += static_cast<float>(self.grad[i] * sigmoid(a->value[i]));
  };
  check_finite(out);
  return out;
}

Tensor abs_val(const Tensor& a) {
  Tensor out = make_op(a.shape(), "abs", {a.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i)
    ov->value[i] = std::fabs(a.data()[i]);
  ov->backprop = [](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      float s = a->value[i] > 0.0f ? 1.0f : (a->value[i] < 0.0f ? -1.0f : 0.0f);
      a->grad[i] += self.grad[i] * s;
    }
  };
  check_finite(out);
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = make_op({}, "sum", {a.node_ptr()});
  auto* ov = out.node();
  double acc = 0.0;
  for (float v : a.data()) acc += v;
  ov->value[0] = static_cast<float>(acc);
  ov->scalar_acc = acc;
  ov->backprop = [](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    float g = self.grad[0];
    for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
  };
  check_finite(out);
  return out;
}

Tensor mean(const Tensor& a) {
  Tensor out = make_op({}, "mean", {a.node_ptr()});
  auto* ov = out.node();
  double acc = 0.0;
  for (float v : a.data()) acc += v;
  double inv_n = 1.0 / static_cast<double>(a.numel());
  acc *= inv_n;
  ov->value[0] = static_cast<float>(acc);
  ov->scalar_acc = acc;
  ov->backprop = [inv_n](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    float g = static_cast<float>(self.grad[0] * inv_n);
    for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
  };
  check_finite(out);
  return out;
}

namespace {

void require_nchw(const Tensor& t, const char* op) {
  if (t.shape().size() != 4)
    throw TensorError(std::string(op) + ": expected NCHW tensor, got " +
                      shape_str(t.shape()));
}

}  // namespace

Tensor concat_ch(const Tensor& a, const Tensor& b) {
  require_nchw(a, "concat_ch");
  require_nchw(b, "concat_ch");
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as[0] != bs[0] || as[2] != bs[2] || as[3] != bs[3])
    throw TensorError("concat_ch: incompatible shapes");
  int N = as[0], Ca = as[1], Cb = bs[1], H = as[2], W = as[3];
  Tensor out = make_op({N, Ca + Cb, H, W}, "concat_ch",
                       {a.node_ptr(), b.node_ptr()});
  auto* ov = out.node();
  size_t hw = static_cast<size_t>(H) * W;
  for (int n = 0; n < N; ++n) {
    std::copy_n(a.data().data() + n * Ca * hw, Ca * hw,
                ov->value.data() + n * (Ca + Cb) * hw);
    std::copy_n(b.data().data() + n * Cb * hw, Cb * hw,
                ov->value.data() + n * (Ca + Cb) * hw + Ca * hw);
  }
  ov->backprop = [N, Ca, Cb, hw](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    for (int n = 0; n < N; ++n) {
      if (wants_grad(a)) {
        a->ensure_grad();
        const float* g = self.grad.data() + n * (Ca + Cb) * hw;
        float* ga = a->grad.data() + n * Ca * hw;
        for (size_t i = 0; i < Ca * hw; ++i) ga[i] += g[i];
      }
      if (wants_grad(b)) {
        b->ensure_grad();
        const float* g = self.grad.data() + n * (Ca + Cb) * hw + Ca * hw;
        float* gb = b->grad.data() + n * Cb * hw;
        for (size_t i = 0; i < Cb * hw; ++i) gb[i] += g[i];
      }
    }
  };
  return out;
}

Tensor slice_ch(const Tensor& a, int c0, int c1) {
  require_nchw(a, "slice_ch");
  const auto& as = a.shape();
  int N = as[0], C = as[1], H = as[2], W = as[3];
  if (c0 < 0 || c1 > C || c0 >= c1)
    throw TensorError("slice_ch: bad channel range");
  int Cs = c1 - c0;
  Tensor out = make_op({N, Cs, H, W}, "slice_ch", {a.node_ptr()});
  auto* ov = out.node();
  size_t hw = static_cast<size_t>(H) * W;
  for (int n = 0; n < N; ++n)
    std::copy_n(a.data().data() + (n * C + c0) * hw, Cs * hw,
                ov->value.data() + n * Cs * hw);
  ov->backprop = [N, C, c0, Cs, hw](Node& self) {
    Node* a = self.parents[0].get();
    if (!wants_grad(a)) return;
    a->ensure_grad();
    for (int n = 0; n < N; ++n) {
      const float* g = self.grad.data() + n * Cs * hw;
      float* ga = a->grad.data() + (static_cast<size_t>(n) * C + c0) * hw;
      for (size_t i = 0; i < Cs * hw; ++i) ga[i] += g[i];
    }
  };
  return out;
}

Tensor bias_add(const Tensor& x, const Tensor& b) {
  require_nchw(x, "bias_add");
  const auto& xs = x.shape();
  if (b.shape().size() != 1 || b.shape()[0] != xs[1])
    throw TensorError("bias_add: bias shape must be (C)");
  int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  Tensor out = make_op(xs, "bias_add", {x.node_ptr(), b.node_ptr()});
  auto* ov = out.node();
  size_t hw = static_cast<size_t>(H) * W;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* xv = x.data().data() + (n * C + c) * hw;
      float* o = ov->value.data() + (n * C + c) * hw;
      double bv = b.data()[c];
      for (size_t i = 0; i < hw; ++i)
        o[i] = static_cast<float>(xv[i] + bv);
    }
  ov->backprop = [N, C, hw](Node& self) {
    Node* x = self.parents[0].get();
    Node* b = self.parents[1].get();
    if (wants_grad(x)) {
      x->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
    }
    if (wants_grad(b)) {
      b->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
          const float* g = self.grad.data() + (n * C + c) * hw;
          double acc = 0.0;
          for (size_t i = 0; i < hw; ++i) acc += g[i];
          b->grad[c] += static_cast<float>(acc);
        }
    }
  };
  check_finite(out);
  return out;
}

// ---------------------------------------------------------------------------
// convolution kernels: conv_fwd / adjoint-to-input / adjoint-to-kernel.
// The same three routines back conv2d forward+backward and conv2d_transpose
// forward+backward, which makes the adjoint identity exact by construction.

namespace {

struct ConvGeom {
  int N, IC, IH, IW;  // input
  int OC, KH, KW;     // kernel
  int OH, OW;         // output
  int stride, pad;
};

// y[n,oc,oh,ow] = sum_{ic,kh,kw} k[oc,ic,kh,kw] * x[n,ic,oh*s+kh-p,ow*s+kw-p]
void conv_fwd(const float* x, const float* k, float* y, const ConvGeom& g) {
  for (int n = 0; n < g.N; ++n)
    for (int oc = 0; oc < g.OC; ++oc)
      for (int oh = 0; oh < g.OH; ++oh)
        for (int ow = 0; ow < g.OW; ++ow) {
          double acc = 0.0;
          for (int ic = 0; ic < g.IC; ++ic) {
            const float* xp = x + ((static_cast<size_t>(n) * g.IC + ic) * g.IH) * g.IW;
            const float* kp = k + ((static_cast<size_t>(oc) * g.IC + ic) * g.KH) * g.KW;
            for (int kh = 0; kh < g.KH; ++kh) {
              int ih = oh * g.stride + kh - g.pad;
              if (ih < 0 || ih >= g.IH) continue;
              for (int kw = 0; kw < g.KW; ++kw) {
                int iw = ow * g.stride + kw - g.pad;
                if (iw < 0 || iw >= g.IW) continue;
                acc += static_cast<double>(kp[kh * g.KW + kw]) *
                       static_cast<double>(xp[ih * g.IW + iw]);
              }
            }
          }
          y[((static_cast<size_t>(n) * g.OC + oc) * g.OH + oh) * g.OW + ow] +=
              static_cast<float>(acc);
        }
}

// gx[n,ic,ih,iw] = sum over (oc,kh,kw,oh,ow) with ih=oh*s+kh-p, iw=ow*s+kw-p
void conv_adj_input(const float* gy, const float* k, float* gx,
                    const ConvGeom& g) {
  for (int n = 0; n < g.N; ++n)
    for (int ic = 0; ic < g.IC; ++ic)
      for (int ih = 0; ih < g.IH; ++ih)
        for (int iw = 0; iw < g.IW; ++iw) {
          double acc = 0.0;
          for (int kh = 0; kh < g.KH; ++kh) {
            int t = ih + g.pad - kh;
            if (t < 0 || t % g.stride != 0) continue;
            int oh = t / g.stride;
            if (oh >= g.OH) continue;
            for (int kw = 0; kw < g.KW; ++kw) {
              int u = iw + g.pad - kw;
              if (u < 0 || u % g.stride != 0) continue;
              int ow = u / g.stride;
              if (ow >= g.OW) continue;
              for (int oc = 0; oc < g.OC; ++oc) {
                acc += static_cast<double>(
                           k[((static_cast<size_t>(oc) * g.IC + ic) * g.KH + kh) *
                                 g.KW +
                             kw]) *
                       static_cast<double>(
                           gy[((static_cast<size_t>(n) * g.OC + oc) * g.OH + oh) *
                                  g.OW +
                              ow]);
              }
            }
          }
          gx[((static_cast<size_t>(n) * g.IC + ic) * g.IH + ih) * g.IW + iw] +=
              static_cast<float>(acc);
        }
}

// gk[oc,ic,kh,kw] = sum over (n,oh,ow) x[n,ic,oh*s+kh-p,ow*s+kw-p]*gy[n,oc,oh,ow]
void conv_adj_kernel(const float* x, const float* gy, float* gk,
                     const ConvGeom& g) {
  for (int oc = 0; oc < g.OC; ++oc)
    for (int ic = 0; ic < g.IC; ++ic)
      for (int kh = 0; kh < g.KH; ++kh)
        for (int kw = 0; kw < g.KW; ++kw) {
          double acc = 0.0;
          for (int n = 0; n < g.N; ++n) {
            const float* xp = x + ((static_cast<size_t>(n) * g.IC + ic) * g.IH) * g.IW;
            const float* gp = gy + ((static_cast<size_t>(n) * g.OC + oc) * g.OH) * g.OW;
            for (int oh = 0; oh < g.OH; ++oh) {
              int ih = oh * g.stride + kh - g.pad;
              if (ih < 0 || ih >= g.IH) continue;
              for (int ow = 0; ow < g.OW; ++ow) {
                int iw = ow * g.stride + kw - g.pad;
                if (iw < 0 || iw >= g.IW) continue;
                acc += static_cast<double>(xp[ih * g.IW + iw]) *
                       static_cast<double>(gp[oh * g.OW + ow]);
              }
            }
          }
          gk[((static_cast<size_t>(oc) * g.IC + ic) * g.KH + kh) * g.KW + kw] +=
              static_cast<float>(acc);
        }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int padding) {
  require_nchw(x, "conv2d");
  require_nchw(k, "conv2d");
  if (stride < 1) throw TensorError("conv2d: stride must be >= 1");
  const auto& xs = x.shape();
  const auto& ks = k.shape();
  if (ks[1] != xs[1])
    throw TensorError("conv2d: kernel input channels " + std::to_string(ks[1]) +
                      " != input channels " + std::to_string(xs[1]));
  ConvGeom g;
  g.N = xs[0];
  g.IC = xs[1];
  g.IH = xs[2];
  g.IW = xs[3];
  g.OC = ks[0];
  g.KH = ks[2];
  g.KW = ks[3];
  g.stride = stride;
  g.pad = padding;
  g.OH = (g.IH + 2 * padding - g.KH) / stride + 1;
  g.OW = (g.IW + 2 * padding - g.KW) / stride + 1;
  if (g.OH < 1 || g.OW < 1) throw TensorError("conv2d: kernel larger than input");

  Tensor out = make_op({g.N, g.OC, g.OH, g.OW}, "conv2d",
                       {x.node_ptr(), k.node_ptr()});
  conv_fwd(x.data().data(), k.data().data(), out.node()->value.data(), g);
  out.node()->backprop = [g](Node& self) {
    Node* x = self.parents[0].get();
    Node* k = self.parents[1].get();
    if (wants_grad(x)) {
      x->ensure_grad();
      conv_adj_input(self.grad.data(), k->value.data(), x->grad.data(), g);
    }
    if (wants_grad(k)) {
      k->ensure_grad();
      conv_adj_kernel(x->value.data(), self.grad.data(), k->grad.data(), g);
    }
  };
  check_finite(out);
  return out;
}

Tensor conv2d_transpose(const Tensor& x, const Tensor& k, int stride,
                        int padding) {
  require_nchw(x, "conv2d_transpose");
  require_nchw(k, "conv2d_transpose");
  if (stride < 1) throw TensorError("conv2d_transpose: stride must be >= 1");
  const auto& xs = x.shape();
  const auto& ks = k.shape();
  if (ks[0] != xs[1])
    throw TensorError("conv2d_transpose: kernel shape " + shape_str(ks) +
                      " incompatible with input channels " +
                      std::to_string(xs[1]));
  // geometry of the conv this op is adjoint to: its output is our input
  ConvGeom g;
  g.N = xs[0];
  g.OC = xs[1];
  g.OH = xs[2];
  g.OW = xs[3];
  g.IC = ks[1];
  g.KH = ks[2];
  g.KW = ks[3];
  g.stride = stride;
  g.pad = padding;
  g.IH = (g.OH - 1) * stride - 2 * padding + g.KH;
  g.IW = (g.OW - 1) * stride - 2 * padding + g.KW;
  if (g.IH < 1 || g.IW < 1)
    throw TensorError("conv2d_transpose: degenerate output shape");

  Tensor out = make_op({g.N, g.IC, g.IH, g.IW}, "conv2d_transpose",
                       {x.node_ptr(), k.node_ptr()});
  conv_adj_input(x.data().data(), k.data().data(), out.node()->value.data(), g);
  out.node()->backprop = [g](Node& self) {
    Node* x = self.parents[0].get();
    Node* k = self.parents[1].get();
    if (wants_grad(x)) {
      x->ensure_grad();
      conv_fwd(self.grad.data(), k->value.data(), x->grad.data(), g);
    }
    if (wants_grad(k)) {
      k->ensure_grad();
      conv_adj_kernel(self.grad.data(), x->value.data(), k->grad.data(), g);
    }
  };
  check_finite(out);
  return out;
}

Tensor gdn(const Tensor& x, const Tensor& beta, const Tensor& gamma,
           bool inverse) {
  require_nchw(x, "gdn");
  const auto& xs = x.shape();
  int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  if (beta.shape() != ShapeVec{C}) throw TensorError("gdn: beta must be (C)");
  if (gamma.shape() != (ShapeVec{C, C}))
    throw TensorError("gdn: gamma must be (C,C)");
  for (float b : beta.data())
    if (!(b > 0.0f)) throw TensorError("gdn: beta must be positive");

  Tensor out = make_op(xs, "gdn",
                       {x.node_ptr(), beta.node_ptr(), gamma.node_ptr()});
  auto* ov = out.node();
  size_t hw = static_cast<size_t>(H) * W;
  size_t chw = static_cast<size_t>(C) * hw;
  // cache the per-element normalization pool for the backward pass
  auto norms = std::make_shared<std::vector<float>>(x.numel());
  const float* xv = x.data().data();
  const float* bv = beta.data().data();
  const float* gv = gamma.data().data();
  for (int n = 0; n < N; ++n)
    for (size_t p = 0; p < hw; ++p) {
      const float* xp = xv + n * chw + p;
      for (int i = 0; i < C; ++i) {
        double pool = bv[i];
        const float* grow = gv + static_cast<size_t>(i) * C;
        for (int j = 0; j < C; ++j) {
          double xj = xp[j * hw];
          pool += static_cast<double>(grow[j]) * xj * xj;
        }
        size_t idx = n * chw + i * hw + p;
        (*norms)[idx] = static_cast<float>(pool);
        double r = inverse ? std::sqrt(pool) : 1.0 / std::sqrt(pool);
        ov->value[idx] = static_cast<float>(xp[i * hw] * r);
      }
    }
  ov->backprop = [N, C, hw, chw, inverse, norms](Node& self) {
    Node* x = self.parents[0].get();
    Node* beta = self.parents[1].get();
    Node* gamma = self.parents[2].get();
    bool gx = wants_grad(x), gb = wants_grad(beta), gg = wants_grad(gamma);
    if (gx) x->ensure_grad();
    if (gb) beta->ensure_grad();
    if (gg) gamma->ensure_grad();
    const float* gv = gamma->value.data();
    for (int n = 0; n < N; ++n)
      for (size_t p = 0; p < hw; ++p) {
        const float* xp = x->value.data() + n * chw + p;
        const float* gop = self.grad.data() + n * chw + p;
        const float* np = norms->data() + n * chw + p;
        // per-output quantities: s_i = d y_i / d pool_i coefficient
        // forward: y_i = x_i * pool^-1/2, dy/dpool = -1/2 x_i pool^-3/2
        // inverse: y_i = x_i * pool^+1/2, dy/dpool = +1/2 x_i pool^-1/2
        for (int i = 0; i < C; ++i) {
          double pool = np[i * hw];
          double go = gop[i * hw];
          if (go == 0.0) continue;
          double xi = xp[i * hw];
          double root = std::sqrt(pool);
          double dpool = inverse ? 0.5 * xi / root : -0.5 * xi / (root * pool);
          double direct = inverse ? root : 1.0 / root;
          const float* grow = gv + static_cast<size_t>(i) * C;
          if (gx) {
            // direct term
            x->grad[n * chw + i * hw + p] += static_cast<float>(go * direct);
            // pool term: dpool/dx_j = 2 gamma_ij x_j
            for (int j = 0; j < C; ++j) {
              double xj = xp[j * hw];
              x->grad[n * chw + j * hw + p] +=
                  static_cast<float>(go * dpool * 2.0 * grow[j] * xj);
            }
          }
          if (gb) beta->grad[i] += static_cast<float>(go * dpool);
          if (gg) {
            float* growg = gamma->grad.data() + static_cast<size_t>(i) * C;
            for (int j = 0; j < C; ++j) {
              double xj = xp[j * hw];
              growg[j] += static_cast<float>(go * dpool * xj * xj);
            }
          }
        }
      }
  };
  check_finite(out);
  return out;
}

Tensor quantize(const Tensor& x, QuantMode mode, Rng* rng) {
  if (mode == QuantMode::kNoise && rng == nullptr)
    throw TensorError("quantize: noise mode needs a seeded noise source");
  Tensor out = make_op(x.shape(),
                       mode == QuantMode::kNoise ? "quantize_noise" : "quantize_ste",
                       {x.node_ptr()});
  auto* ov = out.node();
  if (mode == QuantMode::kNoise) {
    for (size_t i = 0; i < ov->value.size(); ++i)
      ov->value[i] =
          static_cast<float>(x.data()[i] + rng->uniform(-0.5, 0.5));
  } else {
    for (size_t i = 0; i < ov->value.size(); ++i)
      ov->value[i] = std::round(x.data()[i]);
  }
  // straight-through: gradient passes unchanged in both modes
  ov->backprop = [](Node& self) {
    Node* x = self.parents[0].get();
    if (!wants_grad(x)) return;
    x->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
  };
  check_finite(out);
  return out;
}

Tensor gaussian_likelihood(const Tensor& y, const Tensor& mu,
                           const Tensor& sigma) {
  require_same_shape(y, mu, "gaussian_likelihood");
  require_same_shape(y, sigma, "gaussian_likelihood");
  Tensor out = make_op(y.shape(), "gaussian_likelihood",
                       {y.node_ptr(), mu.node_ptr(), sigma.node_ptr()});
  auto* ov = out.node();
  for (size_t i = 0; i < ov->value.size(); ++i) {
    double s = sigma.data()[i];
    double a = (static_cast<double>(y.data()[i]) + 0.5 - mu.data()[i]) / s;
    double b = (static_cast<double>(y.data()[i]) - 0.5 - mu.data()[i]) / s;
    ov->value[i] = static_cast<float>(norm_cdf(a) - norm_cdf(b));
  }
  ov->backprop = [](Node& self) {
    Node* y = self.parents[0].get();
    Node* mu = self.parents[1].get();
    Node* sg = self.parents[2].get();
    bool gy = wants_grad(y), gm = wants_grad(mu), gs = wants_grad(sg);
    if (gy) y->ensure_grad();
    if (gm) mu->ensure_grad();
    if (gs) sg->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double g = self.grad[i];
      if (g == 0.0) continue;
      double s = sg->value[i];
      double a = (static_cast<double>(y->value[i]) + 0.5 - mu->value[i]) / s;
      double b = (static_cast<double>(y->value[i]) - 0.5 - mu->value[i]) / s;
      double fa = norm_pdf(a), fb = norm_pdf(b);
      if (gy) y->grad[i] += static_cast<float>(g * (fa - fb) / s);
      if (gm) mu->grad[i] += static_cast<float>(-g * (fa - fb) / s);
      if (gs) sg->grad[i] += static_cast<float>(-g * (fa * a - fb * b) / s);
    }
  };
  check_finite(out);
  return out;
}

Tensor logistic_likelihood(const Tensor& y, const Tensor& loc,
                           const Tensor& scale) {
  require_nchw(y, "logistic_likelihood");
  int C = y.shape()[1];
  if (loc.shape() != ShapeVec{C} || scale.shape() != ShapeVec{C})
    throw TensorError("logistic_likelihood: loc/scale must be (C)");
  for (float s : scale.data())
    if (!(s > 0.0f)) throw TensorError("logistic_likelihood: scale must be positive");
  const auto& ys = y.shape();
  int N = ys[0], H = ys[2], W = ys[3];
  size_t hw = static_cast<size_t>(H) * W;
  Tensor out = make_op(ys, "logistic_likelihood",
                       {y.node_ptr(), loc.node_ptr(), scale.node_ptr()});
  auto* ov = out.node();
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      double m = loc.data()[c], s = scale.data()[c];
      const float* yp = y.data().data() + (static_cast<size_t>(n) * C + c) * hw;
      float* op = ov->value.data() + (static_cast<size_t>(n) * C + c) * hw;
      for (size_t i = 0; i < hw; ++i) {
        double fa = sigmoid((yp[i] + 0.5 - m) / s);
        double fb = sigmoid((yp[i] - 0.5 - m) / s);
        op[i] = static_cast<float>(fa - fb);
      }
    }
  ov->backprop = [N, C, hw](Node& self) {
    Node* y = self.parents[0].get();
    Node* loc = self.parents[1].get();
    Node* sc = self.parents[2].get();
    bool gy = wants_grad(y), gm = wants_grad(loc), gs = wants_grad(sc);
    if (gy) y->ensure_grad();
    if (gm) loc->ensure_grad();
    if (gs) sc->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        double m = loc->value[c], s = sc->value[c];
        size_t base = (static_cast<size_t>(n) * C + c) * hw;
        double acc_m = 0.0, acc_s = 0.0;
        for (size_t i = 0; i < hw; ++i) {
          double g = self.grad[base + i];
          if (g == 0.0) continue;
          double ta = static_cast<double>(y->value[base + i]) + 0.5 - m;
          double tb = static_cast<double>(y->value[base + i]) - 0.5 - m;
          double Fa = sigmoid(ta / s), Fb = sigmoid(tb / s);
          double fa = Fa * (1.0 - Fa) / s, fb = Fb * (1.0 - Fb) / s;
          if (gy) y->grad[base + i] += static_cast<float>(g * (fa - fb));
          acc_m += -g * (fa - fb);
          acc_s += -g * (fa * ta - fb * tb) / s;
        }
        if (gm) loc->grad[c] += static_cast<float>(acc_m);
        if (gs) sc->grad[c] += static_cast<float>(acc_s);
      }
  };
  check_finite(out);
  return out;
}

Tensor log2_floored(const Tensor& p, double floor) {
  Tensor out = make_op(p.shape(), "log2_floored", {p.node_ptr()});
  auto* ov = out.node();
  constexpr double kInvLn2 = 1.4426950408889634074;
  for (size_t i = 0; i < ov->value.size(); ++i) {
    double v = std::max(static_cast<double>(p.data()[i]), floor);
    ov->value[i] = static_cast<float>(std::log2(v));
  }
  ov->backprop = [floor, kInvLn2](Node& self) {
    Node* p = self.parents[0].get();
    if (!wants_grad(p)) return;
    p->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double v = p->value[i];
      if (v > floor)
        p->grad[i] += static_cast<float>(self.grad[i] * kInvLn2 / v);
    }
  };
  check_finite(out);
  return out;
}

double finite_diff_max_rel_err(
    const std::function<Tensor(const Tensor&)>& loss_fn, Tensor leaf,
    double step, int max_probes, Rng* probe_rng) {
  leaf.set_requires_grad(true);
  leaf.zero_grad();
  Tensor loss = loss_fn(leaf);
  backward(loss);
  std::vector<float> analytic(leaf.grad().begin(), leaf.grad().end());

  std::vector<size_t> probes;
  size_t n = leaf.numel();
  if (max_probes < 0 || static_cast<size_t>(max_probes) >= n) {
    probes.resize(n);
    for (size_t i = 0; i < n; ++i) probes[i] = i;
  } else {
    Rng local(12345);
    Rng* r = probe_rng ? probe_rng : &local;
    for (int i = 0; i < max_probes; ++i)
      probes.push_back(static_cast<size_t>(r->uniform_int(0, static_cast<int64_t>(n) - 1)));
  }

  double max_rel = 0.0;
  auto vals = leaf.mutable_data();
  for (size_t idx : probes) {
    float orig = vals[idx];
    vals[idx] = static_cast<float>(orig + step);
    double lp = loss_fn(leaf).scalar_value();
    vals[idx] = static_cast<float>(orig - step);
    double lm = loss_fn(leaf).scalar_value();
    vals[idx] = orig;
    double fd = (lp - lm) / (2.0 * step);
    double an = analytic[idx];
    double denom = std::max({std::fabs(an), std::fabs(fd), 1e-2});
    max_rel = std::max(max_rel, std::fabs(an - fd) / denom);
  }
  return max_rel;
}

}  // namespace licb::diff
