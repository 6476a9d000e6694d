#include "licb/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace licb::optim {

using namespace licb::diff;
using namespace licb::models;

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].numel(), 0.0);
    v_[i].assign(params_[i].numel(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    auto g = params_[i].grad();
    if (g.empty()) continue;
    auto val = params_[i].mutable_data();
    for (size_t j = 0; j < val.size(); ++j) {
      double gj = g[j];
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * gj;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * gj * gj;
      double mhat = m_[i][j] / bc1;
      double vhat = v_[i][j] / bc2;
      val[j] = static_cast<float>(val[j] - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

namespace {

Tensor sample_batch(std::span<const Tensor> images, int batch, int crop,
                    Rng& rng) {
  if (images.empty())
    throw std::invalid_argument("train: empty image set");
  std::vector<float> data(static_cast<size_t>(batch) * 3 * crop * crop);
  size_t pos = 0;
  for (int b = 0; b < batch; ++b) {
    const Tensor& img =
        images[rng.uniform_int(0, static_cast<int>(images.size()) - 1)];
    const auto& s = img.shape();
    size_t off = s.size() == 4 ? 1 : 0;
    if (s.size() < 3 || s[off] != 3)
      throw std::invalid_argument("train: images must be 3-channel");
    int H = s[off + 1], W = s[off + 2];
    if (H < crop || W < crop)
      throw std::invalid_argument("train: image smaller than crop");
    int top = rng.uniform_int(0, H - crop);
    int left = rng.uniform_int(0, W - crop);
    const float* src = img.data().data();
    for (int c = 0; c < 3; ++c)
      for (int h = 0; h < crop; ++h) {
        const float* row = src + (static_cast<size_t>(c) * H + top + h) * W + left;
        std::copy(row, row + crop, data.data() + pos);
        pos += crop;
      }
  }
  return Tensor::from_data({batch, 3, crop, crop}, std::move(data));
}

double sched(double lr, double lr_final, double frac, int step, int steps) {
  return step < frac * steps ? lr : lr_final;
}

}  // namespace

std::vector<LossPoint> train_rd(CompressionModel& model,
                                std::span<const Tensor> images,
                                const TrainConfig& cfg) {
  if (cfg.crop % 8 != 0)
    throw std::invalid_argument("train: crop must be a multiple of 8");
  model.set_trainable(true);
  Adam adam(model.params());
  Rng rng(cfg.seed);
  std::vector<LossPoint> trace;
  trace.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    Tensor batch = sample_batch(images, cfg.batch, cfg.crop, rng);
    RdResult rd;
    Tensor loss;
    try {
      rd = model.forward_rd(batch, QuantMode::kNoise, &rng);
      loss = add(rd.rate_bpp, scalar_mul(rd.distortion, model.lambda()));
    } catch (const NonFiniteError& e) {
      model.set_trainable(false);
      throw TrainError(e.what(), step);
    }
    double lv = loss.scalar_value();
    if (!std::isfinite(lv)) {
      model.set_trainable(false);
      throw TrainError("non-finite loss", step);
    }
    model.zero_grads();
    backward(loss);
    adam.step(sched(cfg.lr, cfg.lr_final, cfg.lr_drop_frac, step, cfg.steps));
    trace.push_back({step, rd.rate_bpp.scalar_value(),
                     rd.distortion.scalar_value(), lv});
  }
  model.set_trainable(false);
  return trace;
}

DirectionSampler default_direction_sampler() {
  return [](Rng& rng) -> std::pair<double, double> {
    double p = rng.uniform();
    if (p < 0.2) return {1.0, 0.0};
    if (p < 0.4) return {0.0, 1.0};
    double lg = rng.uniform(std::log(2e-4), std::log(0.2));
    return {1.0, std::exp(lg)};
  };
}

std::vector<LossPoint> adversarial_finetune(CompressionModel& model,
                                            std::span<const Tensor> images,
                                            const FinetuneConfig& cfg,
                                            const DirectionSampler& sampler) {
  if (cfg.crop % 8 != 0)
    throw std::invalid_argument("finetune: crop must be a multiple of 8");
  DirectionSampler sample = sampler ? sampler : default_direction_sampler();
  Adam adam(model.params());
  Rng rng(cfg.seed);
  std::vector<LossPoint> trace;
  trace.reserve(cfg.iters);
  for (int it = 0; it < cfg.iters; ++it) {
    Tensor x = sample_batch(images, 1, cfg.crop, rng);
    auto [gr, gd] = sample(rng);

    attacks::AttackConfig ac;
    ac.gamma_r = gr;
    ac.gamma_d = gd;
    ac.epsilon = cfg.attack_epsilon;
    ac.surface_steps = cfg.attack_surface_steps;
    model.set_trainable(false);
    attacks::AttackResult ar = attacks::srda(model, x, ac);
    model.set_trainable(true);

    // one RD step on the benign and perturbed samples together
    std::vector<float> pair(2 * x.numel());
    std::copy(x.data().begin(), x.data().end(), pair.begin());
    std::copy(ar.x_adv.data().begin(), ar.x_adv.data().end(),
              pair.begin() + x.numel());
    Tensor batch = Tensor::from_data({2, 3, cfg.crop, cfg.crop}, std::move(pair));

    RdResult rd;
    Tensor loss;
    try {
      rd = model.forward_rd(batch, QuantMode::kNoise, &rng);
      loss = add(rd.rate_bpp, scalar_mul(rd.distortion, model.lambda()));
    } catch (const NonFiniteError& e) {
      model.set_trainable(false);
      throw TrainError(e.what(), it);
    }
    double lv = loss.scalar_value();
    if (!std::isfinite(lv)) {
      model.set_trainable(false);
      throw TrainError("non-finite loss", it);
    }
    model.zero_grads();
    backward(loss);
    adam.step(sched(cfg.lr, cfg.lr_final, cfg.lr_drop_frac, it, cfg.iters));
    trace.push_back({it, rd.rate_bpp.scalar_value(),
                     rd.distortion.scalar_value(), lv});
  }
  model.set_trainable(false);
  return trace;
}

OnlineResult online_update(const CompressionModel& model, const Tensor& x_a,
                           const OnlineConfig& cfg) {
  Tensor x = Tensor::from_data(
      x_a.shape(), std::vector<float>(x_a.data().begin(), x_a.data().end()),
      true);
  Adam adam({x});

  OnlineResult r;
  double best = std::numeric_limits<double>::infinity();
  std::vector<float> best_x(x_a.data().begin(), x_a.data().end());

  for (int it = 0;; ++it) {
    Tensor loss;
    double lv;
    try {
      RdResult rd = model.forward_rd(x, QuantMode::kRoundSte);
      loss = add(rd.rate_bpp, scalar_mul(rd.distortion, model.lambda()));
      lv = loss.scalar_value();
    } catch (const NonFiniteError&) {
      break;
    }
    if (it == 0) r.initial_loss = lv;
    if (lv < best) {
      best = lv;
      best_x.assign(x.data().begin(), x.data().end());
    }
    r.best_trace.push_back(best);
    if (it == cfg.iters) break;
    x.zero_grad();
    backward(loss);
    adam.step(cfg.lr);
    for (float& v : x.mutable_data()) v = std::clamp(v, 0.0f, 1.0f);
  }

  r.x_u = Tensor::from_data(x_a.shape(), std::move(best_x));
  r.final_loss = std::isfinite(best) ? best : r.initial_loss;
  return r;
}

}  // namespace licb::optim
