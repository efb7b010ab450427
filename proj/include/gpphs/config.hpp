#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpphs/plant.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

struct ExcitationConfig {
  double amplitude = 1.0;
  double frequency = 1.0;  // u(t) = amplitude * sin(frequency * t)
};

struct SamplingConfig {
  double t_end = 20.0;
  int N = 300;
  double noise_var = 1e-3;
  double dt_target = 1e-3;  // integration step; snapped so samples hit grid nodes
  Vec x0 = Vec{{0.0, 0.0, 1.0}};
};

struct FilterConfig {
  int window = 9;
  int poly_order = 3;
};

struct TrainingConfig {
  int restarts = 4;
  int max_iters = 800;
  double init_step = 0.3;
  double restart_jitter = 0.5;
};

struct DesignConfig {
  double r_d = 2.0 / 3.0;
  double x1_target = 0.5;
  Vec beta = Vec{{2.0, 2.0, 2.0}};
  Box domain = Box::cube(3, 2.0);
  std::vector<int> grid_counts = {21, 21, 21};
  double tol_match = 1e-6;
  std::vector<double> x3_starts = {0.5, 1.0, 1.5, 2.0};
};

struct ClosedLoopConfig {
  double t_end = 13.0;
  double dt = 1e-3;
};

struct SweepConfig {
  bool enabled = true;
  std::vector<int> sizes = {100, 300, 600};
  int restarts = 2;
  int max_iters = 400;
};

struct ExperimentConfig {
  MicroactuatorParams plant;
  ExcitationConfig excitation;
  SamplingConfig sampling;
  FilterConfig filter;
  TrainingConfig training;
  DesignConfig design;
  ClosedLoopConfig closed_loop;
  SweepConfig sweep;
  std::uint64_t seed = 0;

  // Canonical serialized form (sorted keys, full precision); its hash tags
  // every artifact the run produces.
  std::string canonical_json() const;
  std::string digest() const;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  void to_file(const std::string& path) const;
  void validate() const;
};

}  // namespace gpphs
