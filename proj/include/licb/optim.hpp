#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "licb/adam.hpp"
#include "licb/attacks.hpp"
#include "licb/model.hpp"

namespace licb::optim {

class TrainError : public std::runtime_error {
 public:
  TrainError(const std::string& m, int step)
      : std::runtime_error(m + " at step " + std::to_string(step)), step(step) {}
  int step;
};

struct TrainConfig {
  int steps = 500;
  int batch = 2;
  int crop = 48;       // must be a multiple of 8
  double lr = 1e-3;
  double lr_final = 1e-4;
  double lr_drop_frac = 0.9;  // switch to lr_final in the last fraction
  uint64_t seed = 1;
};

struct LossPoint {
  int step = 0;
  double rate_bpp = 0.0;
  double distortion = 0.0;
  double total = 0.0;
};

// RD training with uniform-noise quantization. Aborts with TrainError naming
// the step on a non-finite loss.
std::vector<LossPoint> train_rd(models::CompressionModel& model,
                                std::span<const diff::Tensor> images,
                                const TrainConfig& cfg);

// (gamma_r, gamma_d) for one adversarial-training iteration
using DirectionSampler = std::function<std::pair<double, double>(Rng&)>;
DirectionSampler default_direction_sampler();

struct FinetuneConfig {
  int iters = 1000;
  int crop = 32;
  double lr = 1e-4;
  double lr_final = 1e-5;
  double lr_drop_frac = 0.9;
  int attack_surface_steps = 16;  // reduced inner attack budget
  double attack_epsilon = 1e-3;
  uint64_t seed = 7;
};

std::vector<LossPoint> adversarial_finetune(
    models::CompressionModel& model, std::span<const diff::Tensor> images,
    const FinetuneConfig& cfg, const DirectionSampler& sampler = {});

struct OnlineConfig {
  int iters = 30;
  double lr = 1e-2;
};

struct OnlineResult {
  diff::Tensor x_u;
  double initial_loss = 0.0;  // RD loss of the input
  double final_loss = 0.0;    // RD loss of the returned iterate
  std::vector<double> best_trace;  // best-so-far loss, nonincreasing
};

// Gradient descent on the input pixels only; the model is left untouched.
// Returns the best iterate, so final_loss <= initial_loss always holds.
OnlineResult online_update(const models::CompressionModel& model,
                           const diff::Tensor& x_a, const OnlineConfig& cfg);

}  // namespace licb::optim
