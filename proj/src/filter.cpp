#include "gpphs/filter.hpp"

#include <cmath>

#include "gpphs/errors.hpp"

namespace gpphs {

TrajectoryDataset TrajectoryDataset::from_trajectory(const Trajectory& traj) {
  TrajectoryDataset d;
  d.times = traj.times;
  const auto N = static_cast<Eigen::Index>(traj.size());
  if (N == 0) return d;
  const auto n = traj.states[0].size();
  const auto m = traj.inputs[0].size();
  d.X.resize(n, N);
  d.U.resize(m, N);
  for (Eigen::Index k = 0; k < N; ++k) {
    d.X.col(k) = traj.states[k];
    d.U.col(k) = traj.inputs[k];
  }
  return d;
}

namespace {

double uniform_spacing(const std::vector<double>& t) {
  const auto N = t.size();
  const double dt = (t.back() - t.front()) / static_cast<double>(N - 1);
  if (!(dt > 0.0)) throw UnsupportedGrid("times are not increasing");
  for (std::size_t k = 0; k + 1 < N; ++k) {
    const double step = t[k + 1] - t[k];
    if (std::abs(step - dt) > 1e-9 * dt)
      throw UnsupportedGrid("non-uniform time spacing at index " + std::to_string(k));
  }
  return dt;
}

}  // namespace

RegressionDataset estimate_derivatives(const TrajectoryDataset& data, int window,
                                       int poly_order) {
  const int N = data.N();
  if (window % 2 == 0 || window < poly_order + 2 || N <= window)
    throw ContractViolation("estimate_derivatives: need odd window >= poly_order+2 and N > window");
  const double dt = uniform_spacing(data.times);
  const int h = window / 2;

  // Least-squares polynomial fit over integer offsets -h..h; rows 0 and 1 of
  // the pseudo-inverse give the smoothed value and the derivative at the
  // window center.
  Mat A(window, poly_order + 1);
  for (int r = 0; r < window; ++r) {
    double p = 1.0;
    for (int c = 0; c <= poly_order; ++c) {
      A(r, c) = p;
      p *= static_cast<double>(r - h);
    }
  }
  const Mat pinv = (A.transpose() * A).ldlt().solve(A.transpose());
  const Vec w_val = pinv.row(0);
  const Vec w_der = pinv.row(1) / dt;

  const int keep = N - 2 * h;
  RegressionDataset reg;
  reg.times.assign(data.times.begin() + h, data.times.begin() + h + keep);
  reg.X.resize(data.n(), keep);
  reg.Xdot.resize(data.n(), keep);
  reg.U = data.U.middleCols(h, keep);
  for (int k = 0; k < keep; ++k) {
    const auto win = data.X.middleCols(k, window);
    reg.X.col(k) = win * w_val;
    reg.Xdot.col(k) = win * w_der;
  }
  if (!reg.X.allFinite() || !reg.Xdot.allFinite())
    throw Error("estimate_derivatives: non-finite filter output");
  return reg;
}

}  // namespace gpphs
