#pragma once

#include <cstdint>
#include <vector>

#include "licb/tensor.hpp"

namespace licb::optim {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// bias-corrected Adam; moments kept in double
class Adam {
 public:
  explicit Adam(std::vector<diff::Tensor> params, AdamConfig cfg = {});
  void step(double lr);
  int64_t step_count() const { return t_; }

 private:
  std::vector<diff::Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
  AdamConfig cfg_;
};

}  // namespace licb::optim
