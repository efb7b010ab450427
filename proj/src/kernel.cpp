#include "gpphs/kernel.hpp"

#include <cmath>

#include "gpphs/errors.hpp"

namespace gpphs {

Vec Hyperparameters::to_log() const {
  Vec theta(1 + lengthscales.size() + phi.size() + noise.size());
  theta[0] = std::log(sigma_f);
  Eigen::Index at = 1;
  theta.segment(at, lengthscales.size()) = lengthscales.array().log();
  at += lengthscales.size();
  theta.segment(at, phi.size()) = phi.array().log();
  at += phi.size();
  theta.segment(at, noise.size()) = noise.array().log();
  return theta;
}

Hyperparameters Hyperparameters::from_log(const Vec& theta, int n, int phi_dim) {
  if (theta.size() != 1 + 2 * n + phi_dim)
    throw ContractViolation("Hyperparameters::from_log: bad vector length");
  Hyperparameters h;
  h.sigma_f = std::exp(theta[0]);
  h.lengthscales = theta.segment(1, n).array().exp();
  h.phi = theta.segment(1 + n, phi_dim).array().exp();
  h.noise = theta.segment(1 + n + phi_dim, n).array().exp();
  return h;
}

void Hyperparameters::validate(const StructureParametrization& st) const {
  const int n = st.state_dim();
  if (!(sigma_f > 0.0) || lengthscales.size() != n || noise.size() != n ||
      phi.size() != st.phi_dim())
    throw ContractViolation("Hyperparameters: inconsistent with parametrization");
  if ((lengthscales.array() <= 0.0).any() || (noise.array() < 0.0).any() ||
      (phi.size() > 0 && (phi.array() <= 0.0).any()))
    throw ContractViolation("Hyperparameters: nonpositive entries");
}

double se_kernel(const Vec& x, const Vec& x2, const Vec& lengthscales) {
  const Vec d = x - x2;
  return std::exp(-(lengthscales.array().square() * d.array().square()).sum());
}

Mat se_hessian(const Vec& x, const Vec& x2, const Vec& lengthscales) {
  const Vec L = lengthscales.array().square();
  const Vec d = x - x2;
  const double e = std::exp(-(L.array() * d.array().square()).sum());
  const Vec ld = L.array() * d.array();
  Mat pi = -4.0 * e * ld * ld.transpose();
  pi.diagonal().array() += 2.0 * e * L.array();
  return pi;
}

Mat phs_kernel_block(const Vec& x, const Vec& x2, const Hyperparameters& hyper,
                     const StructureParametrization& st) {
  const Mat jr_x = st.JR(x, hyper.phi);
  const Mat jr_x2 = st.JR(x2, hyper.phi);
  return hyper.sigma_f * hyper.sigma_f * jr_x *
         se_hessian(x, x2, hyper.lengthscales) * jr_x2.transpose();
}

}  // namespace gpphs
