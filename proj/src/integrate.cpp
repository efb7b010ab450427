#include "gpphs/integrate.hpp"

#include <cmath>

#include "gpphs/errors.hpp"

namespace gpphs {

std::vector<Vec> integrate_rk4(const Field& f, const Vec& x0, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw ContractViolation("integrate_rk4: dt and t_end must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<Vec> xs;
  xs.reserve(steps + 1);
  xs.push_back(x0);
  Vec x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Vec k1 = f(x, t);
    const Vec k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt);
    const Vec k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt);
    const Vec k4 = f(x + dt * k3, t + dt);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw IntegrationBlowup(static_cast<double>(k + 1) * dt);
    xs.push_back(x);
  }
  return xs;
}

Trajectory simulate(const PlantModel& sys, const Vec& x0, const InputFn& input_fn,
                    double t_end, double dt) {
  Field f = [&](const Vec& x, double t) { return eval_dynamics(sys, x, input_fn(t)); };
  std::vector<Vec> xs = integrate_rk4(f, x0, t_end, dt);
  Trajectory traj;
  traj.times.reserve(xs.size());
  traj.inputs.reserve(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    traj.times.push_back(t);
    traj.inputs.push_back(input_fn(t));
  }
  traj.states = std::move(xs);
  return traj;
}

Trajectory simulate_field(const Field& f, const Vec& x0, double t_end, double dt) {
  std::vector<Vec> xs = integrate_rk4(f, x0, t_end, dt);
  Trajectory traj;
  traj.times.reserve(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k)
    traj.times.push_back(static_cast<double>(k) * dt);
  traj.states = std::move(xs);
  traj.inputs.assign(traj.times.size(), Vec::Zero(0));
  return traj;
}

}  // namespace gpphs
