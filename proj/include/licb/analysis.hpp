#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "licb/model.hpp"

namespace licb::analysis {

class AnalysisError : public std::runtime_error {
 public:
  explicit AnalysisError(const std::string& m) : std::runtime_error(m) {}
};

struct RDReport {
  models::Family family = models::Family::kFactorized;
  int lambda_index = 0;
  std::string direction;  // "gr=..,gd=.." or a named direction
  std::string image_id;
  double r_pre = 0, r_post = 0;  // bpp
  double d_pre = 0, d_post = 0;  // MSE on the 0-255 scale
  double delta_r = 0, delta_d = 0;
  double psnr_pre = 0, psnr_post = 0;
};

// Decoded values that are non-finite or outside [0,1] count as 255 on the
// pixel scale before distortion is computed.
double safe_mse255(const diff::Tensor& ref, const diff::Tensor& recon);
double psnr_from_mse(double mse255);

RDReport perf_variation(const models::CompressionModel& model,
                        const diff::Tensor& x, const diff::Tensor& x_a);

struct AggRow {
  std::string group;  // "all", "direction:<d>", "submodel:<family>/<idx>"
  int n = 0;
  double mu_dr = 0, mu_dd = 0;
  double sd_dr = 0, sd_dd = 0;  // population standard deviation
};

std::vector<AggRow> aggregate(std::span<const RDReport> reports);

struct LocalMaps {
  int grid_h = 0, grid_w = 0;      // latent grid
  std::vector<double> rate_cells;  // bit delta per latent cell, row-major
  int img_h = 0, img_w = 0;
  std::vector<double> dist_pixels;  // squared-error delta per pixel, 255 scale
  double delta_r_bpp = 0;           // sum(rate_cells)/npix
  double delta_d = 0;               // mean(dist_pixels)
};

LocalMaps local_maps(const models::CompressionModel& model,
                     const diff::Tensor& x, const diff::Tensor& x_a);

struct DoSet {
  bool y_s = false;  // coded latent samples
  bool y_c = false;  // context-transform input (HYPER_MC)
  bool y_h = false;  // hyper latent and its downstream features
};

struct EciReport {
  DoSet do_set;
  double bpp_total = 0, bpp_y = 0, bpp_z = 0;
  std::optional<double> delta_mean;  // mean |mu - mu_benign|, HYPER_MC only
  double scale = 0;                  // mean sigma on the evaluated path
};

EciReport eci(const models::CompressionModel& model, const diff::Tensor& x,
              const diff::Tensor& x_a, const DoSet& do_set);

struct MagnifyRow {
  std::string layer;
  double ldmr_interval = 0;  // LDMR_[i,I]
  double ldmr = 0;           // per-layer ratio
  double cdmr = 0;           // cumulative product up to this layer
};

struct MagnifyProfile {
  std::vector<MagnifyRow> rows;  // one per layer in registry order
};

MagnifyProfile ldmr_cdmr(const models::CompressionModel& model,
                         const diff::Tensor& x, const diff::Tensor& x_a);

}  // namespace licb::analysis
