#include "gpphs/plant.hpp"

#include <cmath>
#include <limits>

#include "gpphs/errors.hpp"

namespace gpphs {

Vec eval_dynamics(const PlantModel& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.n || u.size() != sys.m)
    throw ContractViolation("eval_dynamics: dimension mismatch");
  return (sys.J(x) - sys.R(x)) * sys.grad_H(x) + sys.G(x) * u;
}

Vec output_port(const PlantModel& sys, const Vec& x) {
  if (x.size() != sys.n) throw ContractViolation("output_port: dimension mismatch");
  return sys.G(x).transpose() * sys.grad_H(x);
}

void MicroactuatorParams::validate() const {
  const double vals[] = {plate_area, mass,      permittivity, rest_gap,
                         damping,    resistance, spring_coeff};
  for (double v : vals)
    if (!(v > 0.0)) throw ContractViolation("microactuator parameters must be positive");
}

PlantModel microactuator(const MicroactuatorParams& params) {
  params.validate();
  const double A = params.plate_area;
  const double m = params.mass;
  const double eps = params.permittivity;
  const double x1s = params.rest_gap;
  const double b = params.damping;
  const double r = params.resistance;
  const double k = params.spring_coeff;

  PlantModel sys;
  sys.n = 3;
  sys.m = 1;
  Mat J0(3, 3), R0(3, 3), G0(3, 1);
  J0 << 0, 1, 0, -1, 0, 0, 0, 0, 0;
  R0 = Vec{{0.0, b, 1.0 / r}}.asDiagonal();
  G0 << 0, 0, 1.0 / r;
  sys.J = [J0](const Vec&) { return J0; };
  sys.R = [R0](const Vec&) { return R0; };
  sys.G = [G0](const Vec&) { return G0; };
  sys.H = [=](const Vec& x) {
    const double d = x[0] - x1s;
    return 0.25 * k * d * d * d * d + x[1] * x[1] / (2.0 * m) +
           x[0] * x[2] * x[2] / (2.0 * A * eps);
  };
  sys.grad_H = [=](const Vec& x) {
    const double d = x[0] - x1s;
    Vec g(3);
    g << k * d * d * d + x[2] * x[2] / (2.0 * A * eps), x[1] / m, x[0] * x[2] / (A * eps);
    return g;
  };
  return sys;
}

StructureReport check_structure(const PlantModel& sys, const std::vector<Vec>& probes) {
  if (probes.empty()) throw ContractViolation("check_structure: no probes");
  StructureReport rep;
  rep.min_r_eigenvalue = std::numeric_limits<double>::infinity();
  for (const Vec& x : probes) {
    const Mat J = sys.J(x);
    rep.max_skew_violation =
        std::max(rep.max_skew_violation, (J + J.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> es(sys.R(x));
    rep.min_r_eigenvalue = std::min(rep.min_r_eigenvalue, es.eigenvalues().minCoeff());

    const Vec g = sys.grad_H(x);
    for (int i = 0; i < sys.n; ++i) {
      const double h = 1e-5 * (1.0 + std::abs(x[i]));
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (sys.H(xp) - sys.H(xm)) / (2.0 * h);
      const double mismatch = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
      rep.max_grad_mismatch = std::max(rep.max_grad_mismatch, mismatch);
    }
  }
  return rep;
}

}  // namespace gpphs
