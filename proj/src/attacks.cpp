#include "licb/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace licb::attacks {

using namespace licb::diff;
using namespace licb::models;

double rms(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * x;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

bool project_to_ball(Tensor& delta, double epsilon) {
  double r = rms(delta.data());
  if (r <= epsilon) return false;
  double scale = epsilon / r;
  for (float& v : delta.mutable_data()) v = static_cast<float>(v * scale);
  return true;
}

std::vector<double> arda_weights(const std::vector<double>& l_init,
                                 const std::vector<double>& l_cur, double tau,
                                 bool* clamped) {
  if (l_init.size() != l_cur.size() || l_init.empty())
    throw std::invalid_argument("arda_weights: size mismatch");
  if (tau <= 0.0) throw std::invalid_argument("arda_weights: tau must be > 0");
  size_t n = l_init.size();
  std::vector<double> wp(n);
  for (size_t i = 0; i < n; ++i) {
    double r = l_init[i] / l_cur[i];
    if (!std::isfinite(r)) {
      r = 1e3;
      if (clamped) *clamped = true;
    } else if (r < 1e-3 || r > 1e3) {
      if (clamped) *clamped = true;
    }
    wp[i] = std::clamp(r, 1e-3, 1e3) / tau;
  }
  double mx = *std::max_element(wp.begin(), wp.end());
  double denom = 0.0;
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) {
    w[i] = std::exp(wp[i] - mx);
    denom += w[i];
  }
  for (double& v : w) v /= denom;
  return w;
}

namespace {

struct EvalOut {
  double loss = 0.0;
  double rate = 0.0;
  double dist = 0.0;
  std::vector<double> weights;
};

// one objective evaluation on x0 + delta; must leave the combined gradient
// in delta's grad buffer
using EvalFn = std::function<EvalOut(const Tensor& x0, Tensor& delta)>;

AttackResult drive(const Tensor& x, const AttackConfig& cfg, const EvalFn& eval) {
  if (cfg.surface_steps < 1)
    throw std::invalid_argument("attack: surface_steps must be >= 1");
  if (cfg.epsilon < 0.0)
    throw std::invalid_argument("attack: epsilon must be >= 0");

  Tensor x0 = x.detach();
  Tensor delta = Tensor::zeros(x.shape(), true);
  optim::Adam adam({delta});

  AttackResult res;
  const int T = cfg.surface_steps;
  const int cap = cfg.max_iter_factor * T;
  bool reached = false;
  std::vector<float> last_finite(delta.data().begin(), delta.data().end());

  for (int iter = 0; iter < cap && res.surface_step_count < T; ++iter) {
    reached = project_to_ball(delta, cfg.epsilon) || reached;
    int sidx = reached ? res.surface_step_count : -1;
    double lr = (reached && sidx >= T / 2) ? cfg.lr_lo : cfg.lr_hi;

    delta.zero_grad();
    EvalOut out;
    try {
      out = eval(x0, delta);
    } catch (const NonFiniteError&) {
      res.instability = true;
      std::copy(last_finite.begin(), last_finite.end(),
                delta.mutable_data().begin());
      break;
    }
    last_finite.assign(delta.data().begin(), delta.data().end());

    StepLog log;
    log.iter = iter;
    log.surface_index = sidx;
    log.lr = lr;
    log.loss = out.loss;
    log.rate_bpp = out.rate;
    log.distortion = out.dist;
    log.weights = std::move(out.weights);
    res.trace.push_back(std::move(log));

    adam.step(lr);
    ++res.total_iters;
    if (reached) ++res.surface_step_count;
  }

  project_to_ball(delta, cfg.epsilon);
  std::vector<float> xa(x0.numel());
  auto xd = x0.data();
  auto dd = delta.data();
  for (size_t i = 0; i < xa.size(); ++i)
    xa[i] = std::clamp(xd[i] + dd[i], 0.0f, 1.0f);
  res.x_adv = Tensor::from_data(x.shape(), std::move(xa));
  return res;
}

Tensor surface_loss(const RdResult& rd, const AttackConfig& cfg) {
  return add(scalar_mul(rd.rate_bpp, -cfg.gamma_r),
             scalar_mul(rd.distortion, -cfg.gamma_d));
}

}  // namespace

AttackResult srda(const CompressionModel& model, const Tensor& x,
                  const AttackConfig& cfg) {
  EvalFn eval = [&](const Tensor& x0, Tensor& delta) {
    Tensor x_a = add(x0, delta);
    RdResult rd = model.forward_rd(x_a, QuantMode::kRoundSte);
    Tensor loss = surface_loss(rd, cfg);
    backward(loss);
    EvalOut o;
    o.loss = loss.scalar_value();
    o.rate = rd.rate_bpp.scalar_value();
    o.dist = rd.distortion.scalar_value();
    return o;
  };
  return drive(x, cfg, eval);
}

AttackResult arda(std::span<const CompressionModel> submodels, const Tensor& x,
                  const AttackConfig& cfg) {
  if (submodels.empty())
    throw std::invalid_argument("arda: need at least one submodel");
  const size_t n = submodels.size();

  std::vector<double> l_init;
  std::vector<double> last_l(n, 0.0);
  std::vector<bool> have_last(n, false);
  AttackResult* res_out = nullptr;  // set below to surface per-submodel flags

  AttackResult res;
  EvalFn eval = [&](const Tensor& x0, Tensor& delta) {
    std::vector<Tensor> losses(n);
    std::vector<double> l_cur(n), rates(n), dists(n);
    std::vector<bool> ok(n, false);
    size_t n_ok = 0;
    for (size_t k = 0; k < n; ++k) {
      try {
        Tensor x_a = add(x0, delta);
        RdResult rd = submodels[k].forward_rd(x_a, QuantMode::kRoundSte);
        losses[k] = surface_loss(rd, cfg);
        l_cur[k] = losses[k].scalar_value();
        rates[k] = rd.rate_bpp.scalar_value();
        dists[k] = rd.distortion.scalar_value();
        last_l[k] = l_cur[k];
        have_last[k] = true;
        ok[k] = true;
        ++n_ok;
      } catch (const NonFiniteError&) {
        if (res_out) res_out->instability = true;
        if (!have_last[k]) throw;
        l_cur[k] = last_l[k];
      }
    }
    if (n_ok == 0) throw NonFiniteError("arda", "all submodels");
    if (l_init.empty()) l_init = l_cur;

    bool clamped = false;
    std::vector<double> w = arda_weights(l_init, l_cur, cfg.tau, &clamped);
    if (clamped && res_out) res_out->weight_clamped = true;

    std::vector<double> combined(delta.numel(), 0.0);
    EvalOut o;
    for (size_t k = 0; k < n; ++k) {
      if (!ok[k]) continue;
      delta.zero_grad();
      backward(losses[k]);
      auto g = delta.grad();
      for (size_t i = 0; i < combined.size(); ++i)
        combined[i] += w[k] * static_cast<double>(g[i]);
      o.loss += w[k] * l_cur[k];
      o.rate += w[k] * rates[k];
      o.dist += w[k] * dists[k];
    }
    auto& gbuf = delta.node()->grad;
    for (size_t i = 0; i < combined.size(); ++i)
      gbuf[i] = static_cast<float>(combined[i]);
    o.weights = std::move(w);
    return o;
  };

  res_out = &res;
  AttackResult driven = drive(x, cfg, eval);
  driven.instability = driven.instability || res.instability;
  driven.weight_clamped = res.weight_clamped;
  return driven;
}

}  // namespace licb::attacks
