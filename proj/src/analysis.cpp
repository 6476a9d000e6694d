#include "licb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace licb::analysis {

using namespace licb::diff;
using namespace licb::models;

double safe_mse255(const Tensor& ref, const Tensor& recon) {
  if (ref.shape() != recon.shape())
    throw AnalysisError("distortion: shape mismatch " + shape_str(ref.shape()) +
                        " vs " + shape_str(recon.shape()));
  auto a = ref.data();
  auto b = recon.data();
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double r = static_cast<double>(a[i]) * 255.0;
    double v = static_cast<double>(b[i]);
    double p = (!std::isfinite(v) || v < 0.0 || v > 1.0) ? 255.0 : v * 255.0;
    acc += (p - r) * (p - r);
  }
  return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double mse255) {
  if (mse255 <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse255);
}

RDReport perf_variation(const CompressionModel& model, const Tensor& x,
                        const Tensor& x_a) {
  if (x.shape() != x_a.shape())
    throw AnalysisError("perf_variation: shape mismatch");
  RdResult pre = model.forward_rd(x, QuantMode::kRoundSte);
  RdResult post = model.forward_rd(x_a, QuantMode::kRoundSte);
  RDReport r;
  r.family = model.family();
  r.r_pre = pre.rate_bpp.scalar_value();
  r.r_post = post.rate_bpp.scalar_value();
  r.d_pre = safe_mse255(x, pre.x_hat);
  r.d_post = safe_mse255(x_a, post.x_hat);
  r.delta_r = r.r_post - r.r_pre;
  r.delta_d = r.d_post - r.d_pre;
  r.psnr_pre = psnr_from_mse(r.d_pre);
  r.psnr_post = psnr_from_mse(r.d_post);
  return r;
}

namespace {

void push_group(std::vector<AggRow>& rows,
                const std::map<std::string, std::vector<const RDReport*>>& g) {
  for (const auto& [name, reps] : g) {
    AggRow row;
    row.group = name;
    row.n = static_cast<int>(reps.size());
    for (const RDReport* r : reps) {
      row.mu_dr += r->delta_r;
      row.mu_dd += r->delta_d;
    }
    row.mu_dr /= row.n;
    row.mu_dd /= row.n;
    for (const RDReport* r : reps) {
      row.sd_dr += (r->delta_r - row.mu_dr) * (r->delta_r - row.mu_dr);
      row.sd_dd += (r->delta_d - row.mu_dd) * (r->delta_d - row.mu_dd);
    }
    row.sd_dr = std::sqrt(row.sd_dr / row.n);
    row.sd_dd = std::sqrt(row.sd_dd / row.n);
    rows.push_back(std::move(row));
  }
}

}  // namespace

std::vector<AggRow> aggregate(std::span<const RDReport> reports) {
  if (reports.empty()) throw AnalysisError("aggregate: empty report set");
  std::map<std::string, std::vector<const RDReport*>> all, by_dir, by_sub;
  for (const RDReport& r : reports) {
    all["all"].push_back(&r);
    by_dir["direction:" + r.direction].push_back(&r);
    by_sub["submodel:" + std::string(family_name(r.family)) + "/" +
           std::to_string(r.lambda_index)]
        .push_back(&r);
  }
  std::vector<AggRow> rows;
  push_group(rows, all);
  push_group(rows, by_dir);
  push_group(rows, by_sub);
  return rows;
}

namespace {

// per-latent-cell bits: y bits at the cell plus each z cell's bits spread
// evenly over the 2x2 latent cells it covers
std::vector<double> cell_bits(const CompressionModel& model,
                              const LatentBundle& b, int gh, int gw) {
  std::vector<double> cells(static_cast<size_t>(gh) * gw, 0.0);
  Tensor ly = log2_floored(b.p_y);
  const auto& ys = b.y_hat.shape();
  int C = ys[1];
  auto lv = ly.data();
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < gh * gw; ++i)
      cells[i] -= static_cast<double>(lv[static_cast<size_t>(c) * gh * gw + i]);
  if (b.p_z) {
    Tensor lz = log2_floored(*b.p_z);
    const auto& zs = b.z_hat->shape();
    int ZC = zs[1], ZH = zs[2], ZW = zs[3];
    auto zv = lz.data();
    for (int c = 0; c < ZC; ++c)
      for (int h = 0; h < ZH; ++h)
        for (int w = 0; w < ZW; ++w) {
          double bits =
              -static_cast<double>(
                  zv[(static_cast<size_t>(c) * ZH + h) * ZW + w]) /
              4.0;
          for (int dh = 0; dh < 2; ++dh)
            for (int dw = 0; dw < 2; ++dw)
              cells[static_cast<size_t>(2 * h + dh) * gw + 2 * w + dw] += bits;
        }
  }
  (void)model;
  return cells;
}

}  // namespace

LocalMaps local_maps(const CompressionModel& model, const Tensor& x,
                     const Tensor& x_a) {
  if (x.shape() != x_a.shape())
    throw AnalysisError("local_maps: shape mismatch");
  RdResult pre = model.forward_rd(x, QuantMode::kRoundSte);
  RdResult post = model.forward_rd(x_a, QuantMode::kRoundSte);

  LocalMaps m;
  m.img_h = x.shape()[2];
  m.img_w = x.shape()[3];
  m.grid_h = m.img_h / 8;
  m.grid_w = m.img_w / 8;

  std::vector<double> cpre = cell_bits(model, pre.bundle, m.grid_h, m.grid_w);
  std::vector<double> cpost = cell_bits(model, post.bundle, m.grid_h, m.grid_w);
  m.rate_cells.resize(cpre.size());
  double bits = 0.0;
  for (size_t i = 0; i < cpre.size(); ++i) {
    m.rate_cells[i] = cpost[i] - cpre[i];
    bits += m.rate_cells[i];
  }
  double npix = static_cast<double>(m.img_h) * m.img_w;
  m.delta_r_bpp = bits / npix;

  auto xd = x.data();
  auto ad = x_a.data();
  auto hpre = pre.x_hat.data();
  auto hpost = post.x_hat.data();
  size_t plane = static_cast<size_t>(m.img_h) * m.img_w;
  m.dist_pixels.assign(plane, 0.0);
  auto sq255 = [](float ref, float rec) {
    double r = static_cast<double>(ref) * 255.0;
    double v = static_cast<double>(rec);
    double p = (!std::isfinite(v) || v < 0.0 || v > 1.0) ? 255.0 : v * 255.0;
    return (p - r) * (p - r);
  };
  double acc = 0.0;
  for (size_t i = 0; i < plane; ++i) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) {
      size_t idx = static_cast<size_t>(c) * plane + i;
      d += sq255(ad[idx], hpost[idx]) - sq255(xd[idx], hpre[idx]);
    }
    m.dist_pixels[i] = d / 3.0;
    acc += m.dist_pixels[i];
  }
  m.delta_d = acc / static_cast<double>(plane);
  return m;
}

EciReport eci(const CompressionModel& model, const Tensor& x, const Tensor& x_a,
              const DoSet& do_set) {
  Family f = model.family();
  if (do_set.y_c && f != Family::kHyperMc)
    throw AnalysisError("eci: do(y_c) requires the HYPER_MC family");
  if (do_set.y_h && f == Family::kFactorized)
    throw AnalysisError("eci: do(y_h) requires a hyper branch");

  LatentBundle ben = model.encode(x, QuantMode::kRoundSte);
  LatentBundle adv = model.encode(x_a, QuantMode::kRoundSte);
  double npix = static_cast<double>(x.shape()[0]) * x.shape()[2] * x.shape()[3];

  EciReport rep;
  rep.do_set = do_set;

  const Tensor& y_coded = do_set.y_s ? ben.y_hat : adv.y_hat;

  if (f == Family::kFactorized) {
    Tensor p_y = model.likelihood_y_factorized(y_coded);
    rep.bpp_y = entropy::bits_from_likelihood(p_y).scalar_value() / npix;
    rep.bpp_total = rep.bpp_y;
    auto priors = model.y_prior_params();
    double s = 0.0;
    for (auto& pr : priors) s += pr.second;
    rep.scale = s / priors.size();
    return rep;
  }

  const Tensor& z_used = do_set.y_h ? *ben.z_hat : *adv.z_hat;
  Tensor p_z = model.likelihood_z(z_used);
  rep.bpp_z = entropy::bits_from_likelihood(p_z).scalar_value() / npix;

  Tensor hyper_feat = model.hyper_synthesis(z_used);
  std::optional<Tensor> ctx;
  if (f == Family::kHyperMc)
    ctx = model.context_features(do_set.y_c ? ben.y_hat : adv.y_hat);
  auto [mu, sigma] = model.entropy_params(hyper_feat, ctx);
  Tensor p_y = gaussian_likelihood(y_coded, mu, sigma);
  rep.bpp_y = entropy::bits_from_likelihood(p_y).scalar_value() / npix;
  rep.bpp_total = rep.bpp_y + rep.bpp_z;

  double s = 0.0;
  for (float v : sigma.data()) s += v;
  rep.scale = s / static_cast<double>(sigma.numel());

  if (f == Family::kHyperMc) {
    auto mb = ben.mu->data();
    auto mh = mu.data();
    double d = 0.0;
    for (size_t i = 0; i < mh.size(); ++i)
      d += std::abs(static_cast<double>(mh[i]) - mb[i]);
    rep.delta_mean = d / static_cast<double>(mh.size());
  }
  return rep;
}

namespace {

double l1_dist(const Tensor& a, const Tensor& b) {
  auto av = a.data();
  auto bv = b.data();
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i)
    acc += std::abs(static_cast<double>(av[i]) - bv[i]);
  return acc / static_cast<double>(av.size());
}

}  // namespace

MagnifyProfile ldmr_cdmr(const CompressionModel& model, const Tensor& x,
                         const Tensor& x_a) {
  if (x.shape() != x_a.shape())
    throw AnalysisError("ldmr: shape mismatch");
  auto layers = model.layer_list();
  int I = static_cast<int>(layers.size()) - 1;

  // full distortion path, then its re-encoding prefixes
  RdResult rb = model.forward_rd(x, QuantMode::kRoundSte);
  RdResult ra = model.forward_rd(x_a, QuantMode::kRoundSte);

  std::vector<double> interval(I + 1);
  Tensor pb = x.detach(), pa = x_a.detach();
  Tensor qb = rb.x_hat.detach(), qa = ra.x_hat.detach();
  for (int i = 0; i <= I; ++i) {
    if (i > 0) {
      pb = model.apply_layer(pb, i - 1);
      pa = model.apply_layer(pa, i - 1);
      qb = model.apply_layer(qb, i - 1);
      qa = model.apply_layer(qa, i - 1);
    }
    double den = l1_dist(pa, pb);
    if (den == 0.0)
      throw AnalysisError("ldmr: zero distance entering layer '" +
                          layers[i].name + "'");
    interval[i] = l1_dist(qa, qb) / den;
  }

  MagnifyProfile prof;
  prof.rows.resize(I + 1);
  double cum = 1.0;
  for (int i = 0; i <= I; ++i) {
    double next = (i == I) ? 1.0 : interval[i + 1];
    prof.rows[i].layer = layers[i].name;
    prof.rows[i].ldmr_interval = interval[i];
    prof.rows[i].ldmr = interval[i] / next;
    cum *= prof.rows[i].ldmr;
    prof.rows[i].cdmr = cum;
  }
  return prof;
}

}  // namespace licb::analysis
