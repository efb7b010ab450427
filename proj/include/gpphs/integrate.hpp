#pragma once

#include <functional>
#include <vector>

#include "gpphs/plant.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

// Sampled trajectory. Times are in milliseconds; states and inputs are
// aligned row-for-row with times.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> inputs;

  std::size_t size() const { return times.size(); }
};

using InputFn = std::function<Vec(double)>;
using Field = std::function<Vec(const Vec&, double)>;

// Classic fixed-step fourth-order Runge-Kutta on a generic vector field.
// Takes round(t_end/dt) steps of exactly dt, so the final time lands within
// dt of t_end. Throws IntegrationBlowup on non-finite states.
std::vector<Vec> integrate_rk4(const Field& f, const Vec& x0, double t_end, double dt);

// Simulate a plant under a time-dependent input. The returned trajectory
// records the state and the input at every RK4 grid point.
Trajectory simulate(const PlantModel& sys, const Vec& x0, const InputFn& input_fn,
                    double t_end, double dt);

// Same integrator for a bare vector field (no input bookkeeping).
Trajectory simulate_field(const Field& f, const Vec& x0, double t_end, double dt);

}  // namespace gpphs
