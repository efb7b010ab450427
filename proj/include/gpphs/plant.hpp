#pragma once

#include <functional>
#include <vector>

#include "gpphs/types.hpp"

namespace gpphs {

// Input-state-output port-Hamiltonian system
//   xdot = [J(x) - R(x)] grad_H(x) + G(x) u,    y = G(x)^T grad_H(x)
// with J skew-symmetric, R symmetric PSD. Immutable after construction and
// safe to share across threads.
struct PlantModel {
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  std::function<Mat(const Vec&)> J;
  std::function<Mat(const Vec&)> R;
  std::function<Mat(const Vec&)> G;
  std::function<double(const Vec&)> H;
  std::function<Vec(const Vec&)> grad_H;
};

Vec eval_dynamics(const PlantModel& sys, const Vec& x, const Vec& u);
Vec output_port(const PlantModel& sys, const Vec& x);

// Electrostatic microactuator benchmark. State: air gap, momentum, charge.
//   H(x) = (k/4)(x1 - x1*)^4 + x2^2/(2m) + x1 x3^2 / (2 A eps)
//   J - R = [[0,1,0],[-1,-b,0],[0,0,-1/r]],  G = [0,0,1/r]^T
struct MicroactuatorParams {
  double plate_area = 1.0;
  double mass = 1.0;
  double permittivity = 1.0;
  double rest_gap = 1.0;      // spring rest position of the air gap
  double damping = 0.5;       // b
  double resistance = 1.0;    // r
  double spring_coeff = 10.0; // quartic spring coefficient

  void validate() const;  // throws ContractViolation unless all positive
};

PlantModel microactuator(const MicroactuatorParams& params = {});

// Structural diagnostics over a set of probe states.
struct StructureReport {
  double max_skew_violation = 0.0;   // max ||J + J^T||_inf
  double min_r_eigenvalue = 0.0;     // min eigenvalue of R over probes
  double max_grad_mismatch = 0.0;    // max relative |grad_H - FD(H)|
};

StructureReport check_structure(const PlantModel& sys, const std::vector<Vec>& probes);

}  // namespace gpphs
