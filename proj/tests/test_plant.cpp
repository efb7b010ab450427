#include <doctest.h>

#include <random>

#include "gpphs/errors.hpp"
#include "gpphs/plant.hpp"

using namespace gpphs;

namespace {

Vec v3(double a, double b, double c) { return Vec{{a, b, c}}; }

}  // namespace

TEST_CASE("dynamics vanish at the unforced equilibrium") {
  const PlantModel sys = microactuator();
  const Vec f = eval_dynamics(sys, v3(1, 0, 0), Vec::Zero(1));
  CHECK(f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dynamics at a charged state") {
  const PlantModel sys = microactuator();
  const Vec f = eval_dynamics(sys, v3(1, 0, 1), Vec::Zero(1));
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(f[1] == doctest::Approx(-0.5));
  CHECK(f[2] == doctest::Approx(-1.0));
}

TEST_CASE("input enters through G only when the gradient vanishes") {
  const PlantModel sys = microactuator();
  const Vec f = eval_dynamics(sys, v3(1, 0, 0), Vec::Constant(1, 1.0));
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(1.0));
}

TEST_CASE("dynamics are linear in the input") {
  const PlantModel sys = microactuator();
  const Vec x = v3(0.3, -0.7, 1.4);
  const Vec u1 = Vec::Constant(1, 0.8);
  const Vec u2 = Vec::Constant(1, -1.7);
  const Vec lhs = eval_dynamics(sys, x, u1 + u2) - eval_dynamics(sys, x, u2);
  const Vec rhs = eval_dynamics(sys, x, u1) - eval_dynamics(sys, x, Vec::Zero(1));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("output port values") {
  const PlantModel sys = microactuator();
  CHECK(output_port(sys, v3(1, 0, 0))[0] == doctest::Approx(0.0));
  CHECK(output_port(sys, v3(1, 0, 1))[0] == doctest::Approx(1.0));
  CHECK(output_port(sys, v3(0.5, 0, 1))[0] == doctest::Approx(0.5));
}

TEST_CASE("microactuator Hamiltonian and gradient") {
  const PlantModel sys = microactuator();
  const Vec g = sys.grad_H(v3(0.5, 0, 1));
  CHECK(g[0] == doctest::Approx(-0.75));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(g[2] == doctest::Approx(0.5));
  CHECK(sys.H(v3(1, 0, 0)) == doctest::Approx(0.0));

  const Mat R = sys.R(v3(0, 0, 0));
  CHECK(R(0, 0) == 0.0);
  CHECK(R(1, 1) == doctest::Approx(0.5));
  CHECK(R(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("dimension mismatches are rejected") {
  const PlantModel sys = microactuator();
  CHECK_THROWS_AS(eval_dynamics(sys, Vec::Zero(2), Vec::Zero(1)), ContractViolation);
  CHECK_THROWS_AS(eval_dynamics(sys, Vec::Zero(3), Vec::Zero(2)), ContractViolation);
  CHECK_THROWS_AS(output_port(sys, Vec::Zero(4)), ContractViolation);
}

TEST_CASE("parameters must be positive") {
  MicroactuatorParams p;
  p.damping = 0.0;
  CHECK_THROWS_AS(microactuator(p), ContractViolation);
  p.damping = 0.5;
  p.resistance = -1.0;
  CHECK_THROWS_AS(microactuator(p), ContractViolation);
}

TEST_CASE("structure report on random probes") {
  const PlantModel sys = microactuator();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  std::vector<Vec> probes;
  for (int i = 0; i < 100; ++i) probes.push_back(v3(box(rng), box(rng), box(rng)));
  const StructureReport rep = check_structure(sys, probes);
  CHECK(rep.max_skew_violation <= 1e-12);
  CHECK(rep.min_r_eigenvalue >= -1e-10);
  CHECK(rep.max_grad_mismatch <= 1e-5);
}

TEST_CASE("structure report flags injected violations") {
  PlantModel sys = microactuator();
  sys.R = [](const Vec&) { return -Mat::Identity(3, 3); };
  const StructureReport rep = check_structure(sys, {v3(0.2, 0.1, 0.4)});
  CHECK(rep.min_r_eigenvalue == doctest::Approx(-1.0));

  PlantModel sys2 = microactuator();
  sys2.J = [](const Vec&) { return Mat::Zero(3, 3); };
  const StructureReport rep2 = check_structure(sys2, {v3(0.2, 0.1, 0.4)});
  CHECK(rep2.max_skew_violation == 0.0);
}

TEST_CASE("check_structure requires probes") {
  CHECK_THROWS_AS(check_structure(microactuator(), {}), ContractViolation);
}
