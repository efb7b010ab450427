#pragma once

#include "gpphs/structure.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

// Kernel hyperparameters in plain (not log) values.
struct Hyperparameters {
  double sigma_f = 1.0;
  Vec lengthscales;  // l_i; the SE exponent uses Lambda = diag(l_i^2)
  Vec phi;           // structural parameters, interpreted by the parametrization
  Vec noise;         // per-dimension observation noise variances

  // Flat log-space vector [log sf, log l, log phi, log noise] for the optimizer.
  Vec to_log() const;
  static Hyperparameters from_log(const Vec& theta, int n, int phi_dim);

  void validate(const StructureParametrization& st) const;
};

// Squared-exponential kernel value exp(-(x-x')^T Lambda (x-x')) with
// Lambda = diag(l_i^2); note the lengthscales multiply the squared
// separation, so larger l_i means faster decay along axis i.
double se_kernel(const Vec& x, const Vec& x2, const Vec& lengthscales);

// Mixed second derivative Pi_{ij} = d^2/dx_i dx'_j of the SE kernel:
//   Pi_{ij} = [2 L_j delta_ij - 4 L_i L_j (x_i-x'_i)(x_j-x'_j)] * e(x,x')
// where L = diag entries of Lambda. This placement (one derivative per
// argument) is the gradient-observation cross-covariance and keeps the
// induced kernel positive semidefinite.
Mat se_hessian(const Vec& x, const Vec& x2, const Vec& lengthscales);

// Covariance block Cov(xdot(x), xdot(x')) of the structured prior:
//   sigma_f^2 * JR(x) * Pi(x,x') * JR(x')^T.
Mat phs_kernel_block(const Vec& x, const Vec& x2, const Hyperparameters& hyper,
                     const StructureParametrization& st);

}  // namespace gpphs
