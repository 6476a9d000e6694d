#include "licb/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace licb::entropy {

namespace {

constexpr uint32_t kTotal = 1u << 16;

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

}  // namespace

double gaussian_interval(double sym, double mu, double sigma) {
  return norm_cdf((sym + 0.5 - mu) / sigma) - norm_cdf((sym - 0.5 - mu) / sigma);
}

double logistic_interval(double sym, double loc, double scale) {
  return sigmoid((sym + 0.5 - loc) / scale) - sigmoid((sym - 0.5 - loc) / scale);
}

CdfTable build_cdf(std::span<const double> pmf, int smin, bool with_escape) {
  size_t n = pmf.size() + (with_escape ? 1 : 0);
  if (n == 0) throw std::runtime_error("build_cdf: empty pmf");
  if (n > kTotal) throw std::runtime_error("build_cdf: too many symbols");

  std::vector<double> p(pmf.begin(), pmf.end());
  if (with_escape) p.push_back(0.0);
  double total = 0.0;
  for (double& v : p) {
    if (!(v >= 0.0)) v = 0.0;
    total += v;
  }
  if (total <= 0.0) {
    // degenerate input: fall back to uniform
    std::fill(p.begin(), p.end(), 1.0);
    total = static_cast<double>(n);
  }

  std::vector<uint32_t> counts(n);
  uint64_t sum = 0;
  for (size_t i = 0; i < n; ++i) {
    uint32_t c = static_cast<uint32_t>(
        std::lround(p[i] / total * static_cast<double>(kTotal)));
    counts[i] = std::max(1u, c);
    sum += counts[i];
  }
  // settle the rounding residue on the largest buckets, never below mass 1
  while (sum != kTotal) {
    if (sum < kTotal) {
      size_t best = 0;
      for (size_t i = 1; i < n; ++i)
        if (counts[i] > counts[best]) best = i;
      uint32_t d = static_cast<uint32_t>(std::min<uint64_t>(kTotal - sum, counts[best]));
      counts[best] += d;
      sum += d;
    } else {
      size_t best = 0;
      for (size_t i = 1; i < n; ++i)
        if (counts[i] > counts[best]) best = i;
      uint32_t d = static_cast<uint32_t>(
          std::min<uint64_t>(sum - kTotal, counts[best] - 1));
      if (d == 0) throw std::runtime_error("build_cdf: cannot normalize");
      counts[best] -= d;
      sum -= d;
    }
  }

  CdfTable t;
  t.smin = smin;
  t.smax = smin + static_cast<int>(pmf.size()) - 1;
  t.has_escape = with_escape;
  t.cum.resize(n + 1);
  t.cum[0] = 0;
  for (size_t i = 0; i < n; ++i) t.cum[i + 1] = t.cum[i] + counts[i];
  return t;
}

CdfTable gaussian_cdf_table(double mu, double sigma, int smin, int smax,
                            bool with_escape) {
  std::vector<double> pmf(static_cast<size_t>(smax - smin + 1));
  for (int s = smin; s <= smax; ++s)
    pmf[static_cast<size_t>(s - smin)] = gaussian_interval(s, mu, sigma);
  return build_cdf(pmf, smin, with_escape);
}

CdfTable logistic_cdf_table(double loc, double scale, int smin, int smax,
                            bool with_escape) {
  std::vector<double> pmf(static_cast<size_t>(smax - smin + 1));
  for (int s = smin; s <= smax; ++s)
    pmf[static_cast<size_t>(s - smin)] = logistic_interval(s, loc, scale);
  return build_cdf(pmf, smin, with_escape);
}

diff::Tensor bits_from_likelihood(const diff::Tensor& p) {
  using namespace diff;
  return scalar_mul(sum(log2_floored(p, kLikelihoodFloor)), -1.0);
}

}  // namespace licb::entropy
