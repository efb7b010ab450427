#pragma once

#include <string>
#include <vector>

#include "gpphs/dynamics_model.hpp"
#include "gpphs/integrate.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

// Full-rank left annihilator of a constant input matrix: Gperp G = 0.
struct Annihilator {
  Mat Gperp;  // (n-m) x n
};

// Orthonormal left-null-space basis via QR, with rows snapped to {-1,0,1}
// when the snapped rows still annihilate exactly, then sign-normalized and
// ordered by leading nonzero column. For G = [0,0,g]^T this reproduces
// [[1,0,0],[0,1,0]] bit for bit.
Annihilator left_annihilator(const Mat& Gmat);

// Inputs of the energy-shaping design.
struct DesignTemplate {
  double r_d = 2.0 / 3.0;  // assigned damping on the actuated coordinate
  double x1_target = 0.5;  // desired air gap
  Box domain = Box::cube(3, 2.0);
  std::vector<double> x3_starts = {0.5, 1.0, 1.5, 2.0};
};

// Closed-loop target: xdot = (Jd - Rd) grad Hd with
// Hd(x) = (posterior Hamiltonian mean)(x) + (x3 - c)^2.
struct DesiredDesign {
  Mat Jd;  // constant skew-symmetric
  Mat Rd;  // constant PSD diagonal
  double c = 0.0;
  Vec x_d;
  Box domain;

  Mat JdRd() const { return Jd - Rd; }
  void validate() const;
};

// Copies the unactuated rows of the learned drift matrix, assigns -1/r_d on
// the actuated diagonal, and solves the equilibrium shift: find (c, x2, x3)
// with grad Hd = 0 at x_d = [x1_target, x2, x3] by damped Newton over
// (x2, x3) with multi-start in x3, then verify the finite-difference Hessian
// of Hd at x_d is positive definite.
DesiredDesign solve_equilibrium_shift(const DynamicsModel& model, const DesignTemplate& tpl);

// Hd value and gradient at x.
std::pair<double, Vec> desired_hamiltonian(const DesiredDesign& design,
                                           const DynamicsModel& model, const Vec& x);

// Mismatch in the unactuated directions: Gperp [drift_mean(x) - (Jd-Rd) grad Hd(x)].
Vec matching_residual(const DynamicsModel& model, const DesiredDesign& design, const Vec& x);

// grad Hd^T Rd grad Hd minus the worst case of grad Hd^T eta over the box
// |eta_i| <= beta_i var_i; nonnegative means the decrease condition holds at x.
double robustness_margin(const DynamicsModel& model, const DesiredDesign& design,
                         const Vec& beta, const Vec& x);

struct Certificate {
  std::vector<int> grid_counts;
  Vec beta;
  double tol_match = 1e-6;
  double max_matching_residual = 0.0;
  double min_robustness_margin = 0.0;
  Vec worst_residual_point;
  Vec worst_margin_point;
  bool passed = false;
};

// Evaluates residual (infinity norm) and margin at every node of the
// rectangular grid over design.domain, in lexicographic node order; first
// encountered extremum keeps the witness.
Certificate certify(const DynamicsModel& model, const DesiredDesign& design, const Vec& beta,
                    const std::vector<int>& grid_counts, double tol_match = 1e-6);

// u = (G^T G)^-1 G^T [ (Jd - Rd) grad Hd - drift_mean(x) ].
Vec control_input(const DynamicsModel& model, const DesiredDesign& design, const Vec& x);

// Plant under state feedback, as an integrable field.
Field closed_loop(const PlantModel& plant, const DynamicsModel& model,
                  const DesiredDesign& design);

// The target dynamics (Jd - Rd) grad Hd as a field, for reference runs.
Field desired_field(const DynamicsModel& model, const DesiredDesign& design);

void save_design(const DesiredDesign& design, const std::string& path,
                 const std::string& config_digest);
DesiredDesign load_design(const std::string& path);
void save_certificate(const Certificate& cert, const std::string& path,
                      const std::string& config_digest, const std::string& model_digest);
Certificate load_certificate(const std::string& path);
std::string json_config_digest(const std::string& path);  // "" if unreadable

}  // namespace gpphs
