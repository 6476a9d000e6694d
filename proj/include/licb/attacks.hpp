#pragma once

#include <span>
#include <vector>

#include "licb/adam.hpp"
#include "licb/model.hpp"

namespace licb::attacks {

struct AttackConfig {
  double gamma_r = 1.0;
  double gamma_d = 0.0;
  double epsilon = 1e-3;     // RMS radius of the perturbation ball
  int surface_steps = 64;    // T
  double lr_hi = 1e-2;
  double lr_lo = 1e-3;
  double tau = 1.0;          // ARDA softmax temperature
  // hard cap on total iterations, as a multiple of surface_steps
  int max_iter_factor = 16;
};

struct StepLog {
  int iter = 0;
  int surface_index = -1;  // -1 while still inside the ball
  double lr = 0.0;
  double loss = 0.0;
  double rate_bpp = 0.0;   // weighted mean across submodels for ARDA
  double distortion = 0.0;
  std::vector<double> weights;  // ARDA only
};

struct AttackResult {
  diff::Tensor x_adv;
  std::vector<StepLog> trace;
  int surface_step_count = 0;
  int total_iters = 0;
  bool instability = false;
  bool weight_clamped = false;  // ARDA ratio hit its clamp bounds
};

double rms(std::span<const float> v);

// Rescale delta onto the epsilon ball if its RMS exceeds epsilon. Returns
// true when the rescale fired (the iterate touched the surface).
bool project_to_ball(diff::Tensor& delta, double epsilon);

AttackResult srda(const models::CompressionModel& model, const diff::Tensor& x,
                  const AttackConfig& cfg);

// w'_k = L_init_k / L_cur_k clamped into [1e-3, 1e3], then softmax(w'/tau)
std::vector<double> arda_weights(const std::vector<double>& l_init,
                                 const std::vector<double>& l_cur, double tau,
                                 bool* clamped = nullptr);

AttackResult arda(std::span<const models::CompressionModel> submodels,
                  const diff::Tensor& x, const AttackConfig& cfg);

}  // namespace licb::attacks
