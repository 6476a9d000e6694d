#include "licb/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace licb::models {

using namespace licb::diff;

const char* family_name(Family f) {
  switch (f) {
    case Family::kFactorized: return "FACTORIZED";
    case Family::kHyperS: return "HYPER_S";
    case Family::kHyperMc: return "HYPER_MC";
  }
  return "?";
}

Family family_from_name(const std::string& s) {
  if (s == "FACTORIZED") return Family::kFactorized;
  if (s == "HYPER_S") return Family::kHyperS;
  if (s == "HYPER_MC") return Family::kHyperMc;
  throw std::runtime_error("unknown model family: " + s);
}

namespace {

constexpr double kBetaFloor = 1e-6;
constexpr double kLogisticScaleFloor = 0.01;

Tensor init_conv(Rng& rng, int oc, int ic, int kh, int kw, double scale = 1.0) {
  std::vector<float> w(static_cast<size_t>(oc) * ic * kh * kw);
  double std = scale * std::sqrt(2.0 / (static_cast<double>(ic) * kh * kw));
  for (auto& v : w) v = static_cast<float>(rng.normal() * std);
  return Tensor::from_data({oc, ic, kh, kw}, std::move(w), true);
}

Tensor init_bias(int c, float v = 0.0f) {
  return Tensor::full({c}, v, true);
}

}  // namespace

void CompressionModel::build_params(uint64_t seed) {
  Rng rng(seed ^ 0xC0FFEEull);
  auto put = [&](const std::string& name, Tensor t) {
    names_.push_back(name);
    params_.emplace(name, std::move(t));
  };
  const int B = kBaseCh, L = kLatentCh, Hc = kHyperCh;

  put("ga.conv0.w", init_conv(rng, B, 3, 4, 4));
  put("ga.conv0.b", init_bias(B));
  put("ga.gdn0.beta_r", Tensor::full({B}, 1.0f, true));
  put("ga.gdn0.gamma_r", Tensor::zeros({B, B}, true));
  put("ga.conv1.w", init_conv(rng, B, B, 4, 4));
  put("ga.conv1.b", init_bias(B));
  put("ga.gdn1.beta_r", Tensor::full({B}, 1.0f, true));
  put("ga.gdn1.gamma_r", Tensor::zeros({B, B}, true));
  put("ga.conv2.w", init_conv(rng, L, B, 4, 4));
  put("ga.conv2.b", init_bias(L));
  put("ga.gdn2.beta_r", Tensor::full({L}, 1.0f, true));
  put("ga.gdn2.gamma_r", Tensor::zeros({L, L}, true));

  put("gs.tconv0.w", init_conv(rng, L, B, 4, 4));
  put("gs.tconv0.b", init_bias(B));
  put("gs.igdn0.beta_r", Tensor::full({B}, 1.0f, true));
  put("gs.igdn0.gamma_r", Tensor::zeros({B, B}, true));
  put("gs.tconv1.w", init_conv(rng, B, B, 4, 4));
  put("gs.tconv1.b", init_bias(B));
  put("gs.igdn1.beta_r", Tensor::full({B}, 1.0f, true));
  put("gs.igdn1.gamma_r", Tensor::zeros({B, B}, true));
  put("gs.tconv2.w", init_conv(rng, B, B, 4, 4));
  put("gs.tconv2.b", init_bias(B));
  put("gs.conv_out.w", init_conv(rng, 3, B, 3, 3));
  put("gs.conv_out.b", init_bias(3, 0.5f));

  // GDN gamma starts near 0.1 on the diagonal; off-diagonal entries get a
  // small nonzero value so their squared reparameterization can still move
  for (const char* g : {"ga.gdn0.gamma_r", "ga.gdn1.gamma_r", "ga.gdn2.gamma_r",
                        "gs.igdn0.gamma_r", "gs.igdn1.gamma_r"}) {
    Tensor& t = params_.at(g);
    int c = t.shape()[0];
    auto d = t.mutable_data();
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < c; ++j)
        d[static_cast<size_t>(i) * c + j] =
            (i == j) ? 0.31622776601683794f : 1e-3f;
  }

  if (family_ == Family::kFactorized) {
    put("fp_y.loc", Tensor::zeros({L}, true));
    put("fp_y.scale_r", Tensor::full({L}, 0.54f, true));
  } else {
    put("ha.conv0.w", init_conv(rng, B, L, 3, 3));
    put("ha.conv0.b", init_bias(B));
    put("ha.conv1.w", init_conv(rng, Hc, B, 4, 4));
    put("ha.conv1.b", init_bias(Hc));
    put("hs.tconv0.w", init_conv(rng, Hc, B, 4, 4));
    put("hs.tconv0.b", init_bias(B));
    put("hs.conv1.w", init_conv(rng, L, B, 3, 3));
    put("hs.conv1.b", init_bias(L, 0.5f));
    put("fp_z.loc", Tensor::zeros({Hc}, true));
    put("fp_z.scale_r", Tensor::full({Hc}, 0.54f, true));
    if (family_ == Family::kHyperMc) {
      put("ctx.w", init_conv(rng, L, L, 3, 3));
      put("ctx.b", init_bias(L));
      put("ep.conv0.w", init_conv(rng, 2 * L, 2 * L, 1, 1));
      put("ep.conv0.b", init_bias(2 * L));
      put("ep.conv1.w", init_conv(rng, 2 * L, 2 * L, 1, 1, 0.5));
      put("ep.conv1.b", init_bias(2 * L));
    }
  }

  if (family_ == Family::kHyperMc) {
    // strictly raster-causal 3x3 spatial mask, center excluded
    std::vector<float> m(static_cast<size_t>(L) * L * 9, 0.0f);
    for (int oc = 0; oc < L; ++oc)
      for (int ic = 0; ic < L; ++ic)
        for (int kh = 0; kh < 3; ++kh)
          for (int kw = 0; kw < 3; ++kw) {
            bool causal = kh < 1 || (kh == 1 && kw < 1);
            m[((static_cast<size_t>(oc) * L + ic) * 3 + kh) * 3 + kw] =
                causal ? 1.0f : 0.0f;
          }
    ctx_mask_ = Tensor::from_data({L, L, 3, 3}, std::move(m));
  }
}

CompressionModel CompressionModel::create(Family f, double lambda,
                                          uint64_t seed) {
  CompressionModel m;
  m.family_ = f;
  m.lambda_ = lambda;
  m.build_params(seed);
  return m;
}

Tensor& CompressionModel::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::runtime_error("no such parameter: " + name);
  return it->second;
}

const Tensor& CompressionModel::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::runtime_error("no such parameter: " + name);
  return it->second;
}

std::vector<Tensor> CompressionModel::params() {
  std::vector<Tensor> out;
  for (const auto& n : names_) out.push_back(params_.at(n));
  return out;
}

void CompressionModel::set_trainable(bool trainable) {
  for (auto& [k, v] : params_) v.set_requires_grad(trainable);
}

void CompressionModel::zero_grads() {
  for (auto& [k, v] : params_) v.zero_grad();
}

namespace {
Tensor conv_p(const CompressionModel& m, const Tensor& x,
              const std::string& prefix, int stride, int pad) {
  return bias_add(conv2d(x, m.param(prefix + ".w"), stride, pad),
                  m.param(prefix + ".b"));
}
Tensor tconv_p(const CompressionModel& m, const Tensor& x,
               const std::string& prefix, int stride, int pad) {
  return bias_add(conv2d_transpose(x, m.param(prefix + ".w"), stride, pad),
                  m.param(prefix + ".b"));
}
}  // namespace

Tensor CompressionModel::gdn_layer(const Tensor& x, const std::string& prefix,
                                   bool inverse) const {
  const Tensor& br = param(prefix + ".beta_r");
  const Tensor& gr = param(prefix + ".gamma_r");
  Tensor beta = scalar_add(mul(br, br), kBetaFloor);
  Tensor gamma = mul(gr, gr);
  return gdn(x, beta, gamma, inverse);
}

Tensor CompressionModel::apply_layer(const Tensor& x, int i) const {
  try {
    switch (i) {
      case 0: return conv_p(*this, x, "ga.conv0", 2, 1);
      case 1: return gdn_layer(x, "ga.gdn0", false);
      case 2: return conv_p(*this, x, "ga.conv1", 2, 1);
      case 3: return gdn_layer(x, "ga.gdn1", false);
      case 4: return conv_p(*this, x, "ga.conv2", 2, 1);
      case 5: return gdn_layer(x, "ga.gdn2", false);
      case 6: return quantize(x, QuantMode::kRoundSte);
      case 7: return tconv_p(*this, x, "gs.tconv0", 2, 1);
      case 8: return gdn_layer(x, "gs.igdn0", true);
      case 9: return tconv_p(*this, x, "gs.tconv1", 2, 1);
      case 10: return gdn_layer(x, "gs.igdn1", true);
      case 11: return tconv_p(*this, x, "gs.tconv2", 2, 1);
      case 12: return conv_p(*this, x, "gs.conv_out", 1, 1);
      default:
        throw TensorError("apply_layer: index " + std::to_string(i) +
                          " out of range");
    }
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(e.op_name, "layer " + layer_list()[i].name);
  }
}

std::vector<LayerHandle> CompressionModel::layer_list() const {
  static const char* kNames[] = {
      "ga.conv0", "ga.gdn0", "ga.conv1", "ga.gdn1", "ga.conv2", "ga.gdn2",
      "Q",        "gs.tconv0", "gs.igdn0", "gs.tconv1", "gs.igdn1",
      "gs.tconv2", "gs.conv_out"};
  std::vector<LayerHandle> out;
  for (int i = 0; i < 13; ++i) out.push_back({i, kNames[i]});
  return out;
}

Tensor CompressionModel::partial_encode(const Tensor& x, int upto) const {
  int total = static_cast<int>(layer_list().size());
  if (upto < 0 || upto > total)
    throw TensorError("partial_encode: layer index " + std::to_string(upto) +
                      " out of range [0," + std::to_string(total) + "]");
  Tensor h = x;
  for (int i = 0; i < upto; ++i) h = apply_layer(h, i);
  return h;
}

Tensor CompressionModel::analysis(const Tensor& x) const {
  Tensor h = x;
  for (int i = 0; i < 6; ++i) h = apply_layer(h, i);
  return h;
}

Tensor CompressionModel::decode(const Tensor& y_hat) const {
  Tensor h = y_hat;
  for (int i = 7; i <= 12; ++i) h = apply_layer(h, i);
  return h;
}

Tensor CompressionModel::hyper_analysis(const Tensor& y) const {
  Tensor h = relu(conv_p(*this, y, "ha.conv0", 1, 1));
  return conv_p(*this, h, "ha.conv1", 2, 1);
}

Tensor CompressionModel::hyper_synthesis(const Tensor& z_hat) const {
  Tensor h = relu(tconv_p(*this, z_hat, "hs.tconv0", 2, 1));
  return conv_p(*this, h, "hs.conv1", 1, 1);
}

Tensor CompressionModel::context_features(const Tensor& y_hat) const {
  Tensor masked = mul(param("ctx.w"), ctx_mask_);
  return bias_add(conv2d(y_hat, masked, 1, 1), param("ctx.b"));
}

std::pair<Tensor, Tensor> CompressionModel::entropy_params(
    const Tensor& hyper_feat, const std::optional<Tensor>& ctx_feat) const {
  if (family_ == Family::kHyperS) {
    Tensor sigma = scalar_add(softplus(hyper_feat), entropy::kSigmaMin);
    Tensor mu = Tensor::zeros(hyper_feat.shape());
    return {mu, sigma};
  }
  if (family_ != Family::kHyperMc)
    throw TensorError("entropy_params: factorized family has no conditional");
  if (!ctx_feat)
    throw TensorError("entropy_params: HYPER_MC needs context features");
  Tensor h = concat_ch(hyper_feat, *ctx_feat);
  h = relu(conv_p(*this, h, "ep.conv0", 1, 0));
  h = conv_p(*this, h, "ep.conv1", 1, 0);
  Tensor mu = slice_ch(h, 0, kLatentCh);
  Tensor sigma =
      scalar_add(softplus(slice_ch(h, kLatentCh, 2 * kLatentCh)),
                 entropy::kSigmaMin);
  return {mu, sigma};
}

Tensor CompressionModel::likelihood_y_factorized(const Tensor& y_hat) const {
  Tensor scale = scalar_add(softplus(param("fp_y.scale_r")), kLogisticScaleFloor);
  return logistic_likelihood(y_hat, param("fp_y.loc"), scale);
}

Tensor CompressionModel::likelihood_z(const Tensor& z_hat) const {
  Tensor scale = scalar_add(softplus(param("fp_z.scale_r")), kLogisticScaleFloor);
  return logistic_likelihood(z_hat, param("fp_z.loc"), scale);
}

namespace {
double softplus_d(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}
}  // namespace

std::vector<std::pair<double, double>> CompressionModel::z_prior_params() const {
  const Tensor& loc = param("fp_z.loc");
  const Tensor& sr = param("fp_z.scale_r");
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < loc.numel(); ++i)
    out.emplace_back(loc.data()[i],
                     softplus_d(sr.data()[i]) + kLogisticScaleFloor);
  return out;
}

std::vector<std::pair<double, double>> CompressionModel::y_prior_params() const {
  const Tensor& loc = param("fp_y.loc");
  const Tensor& sr = param("fp_y.scale_r");
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < loc.numel(); ++i)
    out.emplace_back(loc.data()[i],
                     softplus_d(sr.data()[i]) + kLogisticScaleFloor);
  return out;
}

LatentBundle CompressionModel::encode(const Tensor& x, QuantMode mode,
                                      Rng* rng) const {
  if (x.shape().size() != 4 || x.shape()[1] != 3)
    throw TensorError("encode: expected (N,3,H,W) image tensor, got " +
                      shape_str(x.shape()));
  if (x.shape()[2] % 8 != 0 || x.shape()[3] % 8 != 0)
    throw TensorError("encode: spatial sides must be divisible by 8, got " +
                      shape_str(x.shape()));
  for (float v : x.data())
    if (!std::isfinite(v)) throw NonFiniteError("input", "encode");

  LatentBundle b;
  b.y = analysis(x);
  b.y_hat = quantize(b.y, mode, rng);

  if (family_ == Family::kFactorized) {
    b.p_y = likelihood_y_factorized(b.y_hat);
    b.bits_y = entropy::bits_from_likelihood(b.p_y);
    return b;
  }

  b.z = hyper_analysis(b.y);
  b.z_hat = quantize(*b.z, mode, rng);
  b.p_z = likelihood_z(*b.z_hat);
  b.bits_z = entropy::bits_from_likelihood(*b.p_z);

  Tensor hyper_feat = hyper_synthesis(*b.z_hat);
  std::optional<Tensor> ctx;
  if (family_ == Family::kHyperMc) ctx = context_features(b.y_hat);
  auto [mu, sigma] = entropy_params(hyper_feat, ctx);
  if (family_ == Family::kHyperMc) b.mu = mu;
  b.sigma = sigma;
  b.p_y = gaussian_likelihood(b.y_hat, mu, sigma);
  b.bits_y = entropy::bits_from_likelihood(b.p_y);
  return b;
}

RdResult CompressionModel::forward_rd(const Tensor& x, QuantMode mode,
                                      Rng* rng) const {
  RdResult r;
  r.bundle = encode(x, mode, rng);
  r.x_hat = decode(r.bundle.y_hat);
  const auto& xs = x.shape();
  double npix = static_cast<double>(xs[0]) * xs[2] * xs[3];
  Tensor rate = scalar_mul(r.bundle.bits_y, 1.0 / npix);
  r.bpp_y = r.bundle.bits_y_value() / npix;
  if (r.bundle.bits_z) {
    rate = add(rate, scalar_mul(*r.bundle.bits_z, 1.0 / npix));
    r.bpp_z = r.bundle.bits_z_value() / npix;
  }
  r.rate_bpp = rate;
  Tensor err = sub(r.x_hat, x);
  r.distortion = scalar_mul(mean(mul(err, err)), 255.0 * 255.0);
  return r;
}

// --- checkpoint io ----------------------------------------------------------

std::vector<uint8_t> CompressionModel::serialize() const {
  std::vector<uint8_t> out;
  out.push_back('L');
  out.push_back('I');
  out.push_back('C');
  out.push_back('M');
  out.push_back(1);  // version
  out.push_back(static_cast<uint8_t>(family_));
  put_f64(out, lambda_);
  for (const auto& name : names_) {
    const Tensor& t = params_.at(name);
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<uint32_t>(t.shape().size()));
    for (int d : t.shape()) put_u32(out, static_cast<uint32_t>(d));
    for (float v : t.data()) put_f32(out, v);
  }
  return out;
}

CompressionModel CompressionModel::deserialize(std::span<const uint8_t> b) {
  if (b.size() < 14 || std::memcmp(b.data(), "LICM", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  if (b[4] != 1) throw std::runtime_error("checkpoint: unsupported version");
  Family f = static_cast<Family>(b[5]);
  double lambda = get_f64(b.data() + 6);
  CompressionModel m = create(f, lambda, 0);
  size_t pos = 14;
  while (pos < b.size()) {
    if (pos + 4 > b.size()) throw std::runtime_error("checkpoint: truncated");
    uint32_t nlen = get_u32(b.data() + pos);
    pos += 4;
    if (pos + nlen + 4 > b.size()) throw std::runtime_error("checkpoint: truncated");
    std::string name(reinterpret_cast<const char*>(b.data() + pos), nlen);
    pos += nlen;
    uint32_t rank = get_u32(b.data() + pos);
    pos += 4;
    ShapeVec shape;
    size_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      if (pos + 4 > b.size()) throw std::runtime_error("checkpoint: truncated");
      uint32_t d = get_u32(b.data() + pos);
      pos += 4;
      shape.push_back(static_cast<int>(d));
      n *= d;
    }
    if (pos + 4 * n > b.size()) throw std::runtime_error("checkpoint: truncated");
    Tensor& t = m.param(name);
    if (t.shape() != shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    auto d = t.mutable_data();
    for (size_t i = 0; i < n; ++i) d[i] = get_f32(b.data() + pos + 4 * i);
    pos += 4 * n;
  }
  return m;
}

void CompressionModel::save(const std::string& path) const {
  auto bytes = serialize();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

CompressionModel CompressionModel::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

CompressionModel CompressionModel::clone() const {
  return deserialize(serialize());
}

}  // namespace licb::models
