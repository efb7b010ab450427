#pragma once

#include <vector>

#include "gpphs/integrate.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

// Noisy sampled observations of a plant: times, states (n x N), inputs (m x N).
struct TrajectoryDataset {
  std::vector<double> times;
  Mat X;
  Mat U;

  int n() const { return static_cast<int>(X.rows()); }
  int N() const { return static_cast<int>(X.cols()); }

  static TrajectoryDataset from_trajectory(const Trajectory& traj);
};

// Filtered states with estimated derivatives, aligned column-wise.
struct RegressionDataset {
  std::vector<double> times;
  Mat X;     // n x N smoothed states
  Mat Xdot;  // n x N derivative estimates
  Mat U;     // m x N inputs

  int n() const { return static_cast<int>(X.rows()); }
  int N() const { return static_cast<int>(X.cols()); }
};

// Savitzky-Golay smoothing and differentiation on a uniform time grid.
// Boundary samples whose centered window does not fit are dropped; the
// retained X columns are the smoothed states, not the raw ones. Requires
// window odd, window >= poly_order + 2, and N > window. Times that deviate
// from uniform spacing by more than 1e-9 relative jitter are rejected.
RegressionDataset estimate_derivatives(const TrajectoryDataset& data, int window,
                                       int poly_order);

}  // namespace gpphs
