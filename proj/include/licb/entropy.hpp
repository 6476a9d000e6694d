#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "licb/ops.hpp"
#include "licb/tensor.hpp"

namespace licb::entropy {

constexpr double kSigmaMin = 0.04;
constexpr double kLikelihoodFloor = 1e-9;
// symbol range used by the file codec; outliers escape to raw bytes
constexpr int kSymMin = -128;
constexpr int kSymMax = 127;

// Integer-quantized CDF with total 2^16. Symbols cover [smin, smax]; when
// has_escape is set one extra slot follows smax. Every slot keeps mass >= 1.
struct CdfTable {
  int smin = 0;
  int smax = 0;
  bool has_escape = false;
  std::vector<uint32_t> cum;  // size nsym+1, cum[0]=0, cum.back()=65536

  int num_symbols() const { return smax - smin + 1 + (has_escape ? 1 : 0); }
  int escape_slot() const { return smax - smin + 1; }
  uint32_t freq(int slot) const { return cum[slot + 1] - cum[slot]; }
  bool in_range(int sym) const { return sym >= smin && sym <= smax; }
};

// Quantize a pmf over [smin, smin+pmf.size()-1] to a CdfTable. Every symbol
// keeps nonzero mass; with escape an extra outlier slot is appended.
CdfTable build_cdf(std::span<const double> pmf, int smin, bool with_escape);

// interval pmf helpers (double precision, matching the graph ops' math)
double gaussian_interval(double sym, double mu, double sigma);
double logistic_interval(double sym, double loc, double scale);

CdfTable gaussian_cdf_table(double mu, double sigma, int smin, int smax,
                            bool with_escape);
CdfTable logistic_cdf_table(double loc, double scale, int smin, int smax,
                            bool with_escape);

// differentiable bit estimate: -sum log2(max(p, floor)) over a likelihood map
diff::Tensor bits_from_likelihood(const diff::Tensor& p);

}  // namespace licb::entropy
