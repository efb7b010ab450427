#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "gpphs/digest.hpp"
#include "gpphs/errors.hpp"
#include "gpphs/gp.hpp"
#include "gpphs/ida_pbc.hpp"
#include "gpphs/integrate.hpp"
#include "gpphs/plant.hpp"

using namespace gpphs;

namespace {

Vec rand_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Small GP posterior fit to exact microactuator samples; gives the design
// code a model with genuinely nonzero predictive variance.
GpPhsModel small_gp_model(int N, std::uint64_t seed) {
  const PlantModel sys = microactuator();
  std::mt19937_64 rng(seed);
  RegressionDataset reg;
  reg.times.resize(N);
  reg.X.resize(3, N);
  reg.Xdot.resize(3, N);
  reg.U = Mat::Zero(1, N);
  for (int k = 0; k < N; ++k) {
    reg.times[static_cast<std::size_t>(k)] = k;
    const Vec x = rand_vec(rng, 3, -1.5, 1.5);
    reg.X.col(k) = x;
    reg.Xdot.col(k) = eval_dynamics(sys, x, Vec::Zero(1));
  }
  Hyperparameters hp;
  hp.sigma_f = 1.0;
  hp.lengthscales = Vec::Ones(3);
  hp.phi = Vec{{0.5, 1.0}};
  hp.noise = Vec::Constant(3, 1e-3);

  GpPhsModel m;
  m.structure = structure_by_name("microactuator");
  m.hyper = hp;
  m.X = reg.X;
  const FactoredGram fg = factor_gram(reg.X, hp, *m.structure);
  const Vec y = mean_adjusted_outputs(reg, hp, *m.structure);
  m.chol_L = fg.L;
  m.jitter = fg.jitter;
  m.alpha = fg.L.triangularView<Eigen::Lower>().transpose().solve(
      fg.L.triangularView<Eigen::Lower>().solve(y));
  m.gram_digest = Fnv1a().update(fg.K).hex();
  m.finalize();
  return m;
}

PlantModel crafted_plant(std::function<double(const Vec&)> H,
                         std::function<Vec(const Vec&)> grad) {
  PlantModel p = microactuator();
  p.H = std::move(H);
  p.grad_H = std::move(grad);
  return p;
}

}  // namespace

TEST_CASE("annihilator of a vertical input column is the coordinate projector") {
  for (double g : {1.0, 1.5, 0.25}) {
    Mat G(3, 1);
    G << 0.0, 0.0, g;
    const Annihilator ann = left_annihilator(G);
    REQUIRE(ann.Gperp.rows() == 2);
    CHECK(ann.Gperp(0, 0) == 1.0);
    CHECK(ann.Gperp(0, 1) == 0.0);
    CHECK(ann.Gperp(0, 2) == 0.0);
    CHECK(ann.Gperp(1, 0) == 0.0);
    CHECK(ann.Gperp(1, 1) == 1.0);
    CHECK(ann.Gperp(1, 2) == 0.0);
  }
}

TEST_CASE("annihilator of a generic column spans the orthogonal complement") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Mat G(4, 2);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) G(i, j) = rand_vec(rng, 1, -2, 2)[0];
    const Annihilator ann = left_annihilator(G);
    REQUIRE(ann.Gperp.rows() == 2);
    CHECK((ann.Gperp * G).cwiseAbs().maxCoeff() <= 1e-13);
    const Mat gram = ann.Gperp * ann.Gperp.transpose();
    CHECK((gram - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("rank-deficient input maps are rejected") {
  CHECK_THROWS_AS(left_annihilator(Mat::Zero(3, 1)), AnnihilatorRank);
  Mat G(3, 2);
  G.col(0) = Vec{{0.0, 0.0, 1.0}};
  G.col(1) = Vec{{0.0, 0.0, 2.0}};
  CHECK_THROWS_AS(left_annihilator(G), AnnihilatorRank);
}

TEST_CASE("equilibrium shift on the exact plant hits the analytic solution") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  // grad H1 = 10(x1-1)^3 + x3^2/2 = 0 at x1 = 0.5 gives x3 = sqrt(2.5);
  // c then cancels the third gradient component.
  CHECK(d.x_d[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(d.x_d[1]) <= 1e-9);
  CHECK(d.x_d[2] == doctest::Approx(std::sqrt(2.5)).epsilon(1e-7));
  CHECK(d.c == doctest::Approx(1.9764235376052372).epsilon(1e-7));

  CHECK(d.Rd(0, 0) == 0.0);
  CHECK(d.Rd(1, 1) == doctest::Approx(0.5));
  CHECK(d.Rd(2, 2) == doctest::Approx(1.5));
  CHECK((d.Jd + d.Jd.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  const Vec g = desired_hamiltonian(d, oracle, d.x_d).second;
  CHECK(g.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("the shifted energy has a strict local minimum at the equilibrium") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const double h0 = desired_hamiltonian(d, oracle, d.x_d).first;
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec delta(3);
    for (int i = 0; i < 3; ++i) delta[i] = gauss(rng);
    delta *= 0.05 / delta.norm();
    CHECK(desired_hamiltonian(d, oracle, d.x_d + delta).first > h0);
  }
}

TEST_CASE("desired Hamiltonian gradient matches finite differences") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = rand_vec(rng, 3, -1.5, 1.5);
    const Vec grad = desired_hamiltonian(d, oracle, x).second;
    for (int i = 0; i < 3; ++i) {
      Vec xp = x, xm = x;
      xp[i] += 1e-5;
      xm[i] -= 1e-5;
      const double fd = (desired_hamiltonian(d, oracle, xp).first -
                         desired_hamiltonian(d, oracle, xm).first) /
                        2e-5;
      CHECK(std::abs(grad[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("a saddle stationary point is rejected, an empty search is infeasible") {
  // H = -x1 x3^2/2 + x2^2/2 has its stationary point at (x2,x3)=(0,0) where
  // the shifted energy is only positive semidefinite.
  const PlantDynamics saddle(crafted_plant(
      [](const Vec& x) { return -0.5 * x[0] * x[2] * x[2] + 0.5 * x[1] * x[1]; },
      [](const Vec& x) {
        return Vec{{-0.5 * x[2] * x[2], x[1], -x[0] * x[2]}};
      }));
  CHECK_THROWS_AS(solve_equilibrium_shift(saddle, DesignTemplate{}), SaddleRejected);

  // H = x1 + x2^2/2 has grad H1 = 1 everywhere: no stationary point exists.
  const PlantDynamics infeasible(crafted_plant(
      [](const Vec& x) { return x[0] + 0.5 * x[1] * x[1]; },
      [](const Vec& x) {
        return Vec{{1.0, x[1], 0.0}};
      }));
  CHECK_THROWS_AS(solve_equilibrium_shift(infeasible, DesignTemplate{}), DesignInfeasible);
}

TEST_CASE("the oracle design satisfies the matching equation identically") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = rand_vec(rng, 3, -2, 2);
    CHECK(matching_residual(oracle, d, x).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("perturbing the assigned damping shows up as the expected residual") {
  const PlantDynamics oracle(microactuator());
  DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  d.Rd(1, 1) += 1.0;
  const Vec x = Vec{{0.3, 0.7, 1.1}};
  const Vec res = matching_residual(oracle, d, x);
  const Vec grad_hd = desired_hamiltonian(d, oracle, x).second;
  REQUIRE(res.size() == 2);
  CHECK(std::abs(res[0]) <= 1e-12);
  CHECK(res[1] == doctest::Approx(grad_hd[1]).epsilon(1e-10));
}

TEST_CASE("robustness margin oracle properties") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const Vec beta = Vec::Constant(3, 2.0);
  // Zero model variance: the margin is the pure dissipation quadratic.
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = rand_vec(rng, 3, -2, 2);
    CHECK(robustness_margin(oracle, d, beta, x) >= -1e-15);
  }
  CHECK(std::abs(robustness_margin(oracle, d, beta, d.x_d)) <= 1e-12);
  CHECK_THROWS_AS(robustness_margin(oracle, d, Vec::Constant(3, -1.0), d.x_d),
                  ContractViolation);
}

TEST_CASE("closed-form margin equals the worst disturbance corner") {
  const GpDynamics model(small_gp_model(10, 37));
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const Vec beta = Vec{{2.0, 1.5, 3.0}};
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = rand_vec(rng, 3, -2, 2);
    const double closed = robustness_margin(model, d, beta, x);
    const Vec var = model.drift_variance(x);
    const Vec grad_hd = desired_hamiltonian(d, model, x).second;
    const double quad = grad_hd.dot(d.Rd * grad_hd);
    double worst = std::numeric_limits<double>::infinity();
    for (int corner = 0; corner < 8; ++corner) {
      double lin = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double eta = ((corner >> i) & 1 ? 1.0 : -1.0) * beta[i] * var[i];
        lin += grad_hd[i] * eta;
      }
      worst = std::min(worst, quad - lin);
    }
    CHECK(std::abs(closed - worst) <= 1e-12 * std::max(1.0, std::abs(worst)));
  }
}

TEST_CASE("certification over a grid: oracle design passes with zero uncertainty") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const Certificate cert = certify(oracle, d, Vec::Constant(3, 2.0), {7, 7, 7});
  CHECK(cert.passed);
  CHECK(cert.max_matching_residual <= 1e-8);
  CHECK(cert.min_robustness_margin >= -1e-15);
  CHECK(d.domain.contains(cert.worst_margin_point));
  CHECK(d.domain.contains(cert.worst_residual_point));
}

TEST_CASE("grid refinement only tightens the certified extrema") {
  // A 9-per-axis grid contains every node of the 5-per-axis grid, so the
  // refined minimum margin cannot rise and the maximum residual cannot drop.
  const GpDynamics model(small_gp_model(10, 43));
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const Vec beta = Vec::Constant(3, 2.0);
  const Certificate coarse = certify(model, d, beta, {5, 5, 5});
  const Certificate fine = certify(model, d, beta, {9, 9, 9});
  CHECK(fine.min_robustness_margin <= coarse.min_robustness_margin + 1e-12);
  CHECK(fine.max_matching_residual >= coarse.max_matching_residual - 1e-12);
}

TEST_CASE("certify validates its grid argument") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  CHECK_THROWS_AS(certify(oracle, d, Vec::Constant(3, 2.0), {7, 7}), ContractViolation);
  CHECK_THROWS_AS(certify(oracle, d, Vec::Constant(3, 2.0), {7, 1, 7}), ContractViolation);
}

TEST_CASE("feedback law reduces to the single-column closed form") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = rand_vec(rng, 3, -1.5, 1.5);
    const Vec u = control_input(oracle, d, x);
    REQUIRE(u.size() == 1);
    const Vec mismatch =
        d.JdRd() * desired_hamiltonian(d, oracle, x).second - oracle.drift_mean(x);
    // G = [0,0,1]^T for the unit-resistance plant, so u is the third row.
    CHECK(u[0] == doctest::Approx(mismatch[2]).epsilon(1e-12));
  }
  // Where both the third energy gradient component and the shift vanish the
  // plant already behaves as desired and the input is zero.
  const Vec quiet = Vec{{0.0, -0.4, d.c}};
  CHECK(std::abs(control_input(oracle, d, quiet)[0]) <= 1e-12);
}

TEST_CASE("a singular input map raises RankLoss") {
  GpPhsModel empty;
  empty.structure = std::make_shared<ConstantStructure>(
      Mat::Zero(3, 3), Mat::Identity(3, 3), Mat::Zero(3, 1));
  empty.hyper.sigma_f = 1.0;
  empty.hyper.lengthscales = Vec::Ones(3);
  empty.hyper.phi = Vec::Zero(0);
  empty.hyper.noise = Vec::Constant(3, 1e-3);
  empty.X = Mat::Zero(3, 0);
  empty.alpha = Vec::Zero(0);
  empty.finalize();
  const GpDynamics model(std::move(empty));
  DesiredDesign d;
  d.Jd = Mat::Zero(3, 3);
  d.Rd = Mat::Identity(3, 3);
  d.c = 0.0;
  d.x_d = Vec::Zero(3);
  d.domain = Box::cube(3, 2.0);
  CHECK_THROWS_AS(control_input(model, d, Vec::Zero(3)), RankLoss);
}

TEST_CASE("with the exact model the closed loop realizes the target dynamics") {
  const PlantModel plant = microactuator();
  const PlantDynamics oracle(plant);
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const Vec x0 = Vec{{0.0, 0.0, 1.0}};
  const double dt = 1e-3;
  const Trajectory actual = simulate_field(closed_loop(plant, oracle, d), x0, 13.0, dt);
  const Trajectory target = simulate_field(desired_field(oracle, d), x0, 13.0, dt);
  double max_gap = 0.0;
  for (std::size_t k = 0; k < actual.size(); ++k)
    max_gap = std::max(max_gap, (actual.states[k] - target.states[k]).cwiseAbs().maxCoeff());
  CHECK(max_gap <= 1e-6);
  // Over the full horizon the distance to the target equilibrium shrinks by 10x
  // (the transient first swings away before the shaped damping pulls it in).
  CHECK((actual.states.back() - d.x_d).norm() < 0.1 * (x0 - d.x_d).norm());
}

TEST_CASE("the shaped energy decreases along the oracle closed loop") {
  const PlantModel plant = microactuator();
  const PlantDynamics oracle(plant);
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const Trajectory tr = simulate_field(closed_loop(plant, oracle, d), Vec{{0.0, 0.0, 1.0}},
                                       5.0, 1e-3);
  double prev = desired_hamiltonian(d, oracle, tr.states.front()).first;
  for (std::size_t k = 1; k < tr.states.size(); ++k) {
    const double h = desired_hamiltonian(d, oracle, tr.states[k]).first;
    CHECK(h <= prev + 1e-9);
    prev = h;
  }
}

TEST_CASE("design documents round trip and are validated on load") {
  const PlantDynamics oracle(microactuator());
  const DesiredDesign d = solve_equilibrium_shift(oracle, DesignTemplate{});
  const std::string path = "test_design_roundtrip.json";
  save_design(d, path, "0123456789abcdef");
  CHECK(json_config_digest(path) == "0123456789abcdef");
  const DesiredDesign back = load_design(path);
  CHECK((back.Jd - d.Jd).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.Rd - d.Rd).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.c == d.c);
  CHECK((back.x_d - d.x_d).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());

  DesiredDesign bad = d;
  bad.Rd(0, 1) = 0.1;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = d;
  bad.Jd(0, 1) += 1.0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = d;
  bad.x_d = Vec{{5.0, 0.0, 0.0}};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("certificate documents round trip") {
  Certificate cert;
  cert.grid_counts = {5, 5, 5};
  cert.beta = Vec::Constant(3, 2.0);
  cert.tol_match = 1e-6;
  cert.max_matching_residual = 3.2e-9;
  cert.min_robustness_margin = -0.25;
  cert.worst_residual_point = Vec{{1.0, -2.0, 0.5}};
  cert.worst_margin_point = Vec{{0.5, 0.0, 1.5}};
  cert.passed = false;
  const std::string path = "test_cert_roundtrip.json";
  save_certificate(cert, path, "cfg", "mdl");
  const Certificate back = load_certificate(path);
  CHECK(back.grid_counts == cert.grid_counts);
  CHECK(back.max_matching_residual == cert.max_matching_residual);
  CHECK(back.min_robustness_margin == cert.min_robustness_margin);
  CHECK((back.worst_margin_point - cert.worst_margin_point).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.passed == cert.passed);
  std::remove(path.c_str());
}
