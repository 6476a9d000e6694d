#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "licb/entropy.hpp"
#include "licb/ops.hpp"
#include "licb/tensor.hpp"

namespace licb::models {

enum class Family : uint8_t { kFactorized = 0, kHyperS = 1, kHyperMc = 2 };

const char* family_name(Family f);
Family family_from_name(const std::string& s);

struct LayerHandle {
  int index;
  std::string name;
};

struct LatentBundle {
  diff::Tensor y;
  diff::Tensor y_hat;
  std::optional<diff::Tensor> z, z_hat;
  std::optional<diff::Tensor> mu;     // HYPER_MC only
  std::optional<diff::Tensor> sigma;  // hyper families
  diff::Tensor p_y;                   // per-element likelihoods of y_hat
  std::optional<diff::Tensor> p_z;
  diff::Tensor bits_y;                // scalar graph nodes
  std::optional<diff::Tensor> bits_z;

  double bits_y_value() const { return bits_y.scalar_value(); }
  double bits_z_value() const { return bits_z ? bits_z->scalar_value() : 0.0; }
};

struct RdResult {
  diff::Tensor rate_bpp;     // scalar
  diff::Tensor distortion;   // scalar, MSE on the 0-255 scale
  diff::Tensor x_hat;
  LatentBundle bundle;
  double bpp_y = 0.0, bpp_z = 0.0;
};

// Toy convolutional GDN autoencoder with three entropy-model families.
// Latent grid is input/8; hyper latent is input/16.
class CompressionModel {
 public:
  static constexpr int kBaseCh = 32;
  static constexpr int kLatentCh = 48;
  static constexpr int kHyperCh = 16;

  static CompressionModel create(Family f, double lambda, uint64_t seed);

  Family family() const { return family_; }
  double lambda() const { return lambda_; }
  void set_lambda(double l) { lambda_ = l; }

  LatentBundle encode(const diff::Tensor& x, diff::QuantMode mode,
                      Rng* rng = nullptr) const;
  diff::Tensor decode(const diff::Tensor& y_hat) const;
  RdResult forward_rd(const diff::Tensor& x, diff::QuantMode mode,
                      Rng* rng = nullptr) const;

  // distortion path f = g_s . Q . g_a as an ordered layer registry
  std::vector<LayerHandle> layer_list() const;
  // feature map after layers 0..upto-1; upto == 0 is the identity
  diff::Tensor partial_encode(const diff::Tensor& x, int upto) const;
  diff::Tensor apply_layer(const diff::Tensor& x, int layer_index) const;

  // entropy pipeline pieces, exposed for causal interventions and the codec
  diff::Tensor analysis(const diff::Tensor& x) const;                // g_a
  diff::Tensor hyper_analysis(const diff::Tensor& y) const;          // h_a
  diff::Tensor hyper_synthesis(const diff::Tensor& z_hat) const;     // h_s
  diff::Tensor context_features(const diff::Tensor& y_hat) const;    // masked conv
  // (mu, sigma) on the latent grid; ctx required iff family is HYPER_MC
  std::pair<diff::Tensor, diff::Tensor> entropy_params(
      const diff::Tensor& hyper_feat,
      const std::optional<diff::Tensor>& ctx_feat) const;
  diff::Tensor likelihood_y_factorized(const diff::Tensor& y_hat) const;
  diff::Tensor likelihood_z(const diff::Tensor& z_hat) const;
  // z prior parameters as plain doubles (loc, scale) per channel
  std::vector<std::pair<double, double>> z_prior_params() const;
  std::vector<std::pair<double, double>> y_prior_params() const;

  const std::vector<std::string>& param_names() const { return names_; }
  diff::Tensor& param(const std::string& name);
  const diff::Tensor& param(const std::string& name) const;
  std::vector<diff::Tensor> params();
  void set_trainable(bool trainable);
  void zero_grads();

  std::vector<uint8_t> serialize() const;
  static CompressionModel deserialize(std::span<const uint8_t> bytes);
  void save(const std::string& path) const;
  static CompressionModel load(const std::string& path);

  CompressionModel clone() const;

 private:
  CompressionModel() = default;
  void build_params(uint64_t seed);
  diff::Tensor gdn_layer(const diff::Tensor& x, const std::string& prefix,
                         bool inverse) const;

  Family family_ = Family::kFactorized;
  double lambda_ = 0.01;
  std::vector<std::string> names_;
  std::map<std::string, diff::Tensor> params_;
  diff::Tensor ctx_mask_;  // constant raster-causal spatial mask (HYPER_MC)
};

}  // namespace licb::models
