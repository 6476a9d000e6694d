#pragma once

#include <map>
#include <string>
#include <vector>

#include "licb/analysis.hpp"
#include "licb/attacks.hpp"
#include "licb/image_io.hpp"
#include "licb/model.hpp"
#include "licb/optim.hpp"

namespace licb::suite {

class SuiteError : public std::runtime_error {
 public:
  explicit SuiteError(const std::string& m) : std::runtime_error(m) {}
};

struct Direction {
  std::string name;
  double gamma_r = 1.0;
  double gamma_d = 0.0;
};

// the six standard attack directions, pure rate through pure distortion
std::vector<Direction> default_directions();

struct SuiteConfig {
  std::vector<std::string> image_paths;  // empty: synthetic textures
  int synthetic_count = 2;
  int synthetic_size = 64;

  std::vector<models::Family> families;
  std::vector<double> lambdas;
  std::vector<Direction> directions;

  double epsilon = 1e-3;
  int surface_steps = 64;
  double tau = 1.0;

  int train_steps = 400;
  int ladder_steps = 120;  // extra steps when warm-starting the next lambda
  int train_batch = 2;
  int train_crop = 48;
  double train_lr = 1e-3;

  bool run_eci = false;
  bool run_ldmr = false;
  bool defend_at = false;
  int at_iters = 200;
  bool defend_online = false;
  int online_iters = 30;

  uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = "out";

  static SuiteConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct SuiteResult {
  int total_tasks = 0;
  int completed = 0;
  int skipped = 0;  // already in the manifest
  int failed = 0;
  std::vector<std::string> failures;
};

// Trains (or loads) the model grid, runs every attack task, writes reports,
// manifests, and plot data under config.out_dir. Resumable: tasks with a
// completed manifest entry are skipped.
SuiteResult run_suite(const SuiteConfig& cfg);

// Rebuilds the CSV plot files from the task artifacts in out_dir.
void emit_plotdata(const SuiteConfig& cfg);

// fixed-precision float formatting so reports are byte-stable
std::string fmt(double v);

}  // namespace licb::suite
