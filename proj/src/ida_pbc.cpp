#include "gpphs/ida_pbc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gpphs/errors.hpp"

namespace gpphs {

Annihilator left_annihilator(const Mat& Gmat) {
  const auto n = Gmat.rows();
  const auto m = Gmat.cols();
  Eigen::ColPivHouseholderQR<Mat> qr(Gmat);
  if (qr.rank() != m) throw AnnihilatorRank("input matrix is column-rank deficient");
  const Mat q = qr.householderQ();
  Mat gperp = q.rightCols(n - m).transpose();

  Mat snapped = gperp;
  for (Eigen::Index i = 0; i < snapped.size(); ++i) {
    double& v = *(snapped.data() + i);
    for (double target : {-1.0, 0.0, 1.0})
      if (std::abs(v - target) <= 1e-12) v = target;
  }
  if ((snapped * Gmat).cwiseAbs().maxCoeff() == 0.0) gperp = snapped;

  // Canonical presentation: leading nonzero of each row positive, rows
  // ordered by leading-nonzero column.
  std::vector<Eigen::Index> lead(gperp.rows());
  for (Eigen::Index r = 0; r < gperp.rows(); ++r) {
    Eigen::Index first = n;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(gperp(r, j)) > 1e-12) {
        first = j;
        break;
      }
    if (first < n && gperp(r, first) < 0.0) gperp.row(r) = -gperp.row(r);
    lead[r] = first;
  }
  std::vector<Eigen::Index> order(gperp.rows());
  for (Eigen::Index r = 0; r < gperp.rows(); ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return lead[a] < lead[b]; });
  Mat out(gperp.rows(), n);
  for (Eigen::Index r = 0; r < gperp.rows(); ++r) out.row(r) = gperp.row(order[r]);

  Eigen::ColPivHouseholderQR<Mat> rank_check(out.transpose());
  if (rank_check.rank() != n - m)
    throw AnnihilatorRank("annihilator does not have full row rank");
  return Annihilator{std::move(out)};
}

void DesiredDesign::validate() const {
  if ((Jd + Jd.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ContractViolation("DesiredDesign: Jd not skew-symmetric");
  for (Eigen::Index i = 0; i < Rd.rows(); ++i)
    for (Eigen::Index j = 0; j < Rd.cols(); ++j) {
      if (i == j && Rd(i, j) < 0.0)
        throw ContractViolation("DesiredDesign: Rd has negative diagonal entry");
      if (i != j && Rd(i, j) != 0.0)
        throw ContractViolation("DesiredDesign: Rd not diagonal");
    }
  if (!domain.contains(x_d))
    throw ContractViolation("DesiredDesign: equilibrium outside the domain");
}

std::pair<double, Vec> desired_hamiltonian(const DesiredDesign& design,
                                           const DynamicsModel& model, const Vec& x) {
  double value = model.hamiltonian(x);
  Vec grad = model.hamiltonian_gradient(x);
  const double shift = x[2] - design.c;
  value += shift * shift;
  grad[2] += 2.0 * shift;
  return {value, std::move(grad)};
}

DesiredDesign solve_equilibrium_shift(const DynamicsModel& model, const DesignTemplate& tpl) {
  const int n = model.state_dim();
  if (n != 3) throw ContractViolation("solve_equilibrium_shift: expects a 3-state design");
  DesiredDesign design;
  design.domain = tpl.domain;
  Mat m_jr = model.drift_matrix(tpl.domain.center());
  m_jr.row(2) = Eigen::RowVector3d(0.0, 0.0, -1.0 / tpl.r_d);
  design.Jd = 0.5 * (m_jr - m_jr.transpose());
  design.Rd = -0.5 * (m_jr + m_jr.transpose());

  auto grad_h = [&](double x2, double x3) {
    Vec x(3);
    x << tpl.x1_target, x2, x3;
    return model.hamiltonian_gradient(x);
  };

  bool saw_saddle = false;
  for (double x3_start : tpl.x3_starts) {
    Eigen::Vector2d y(0.0, x3_start);
    auto residual = [&](const Eigen::Vector2d& yv) {
      return Eigen::Vector2d(grad_h(yv[0], yv[1]).head<2>());
    };
    bool converged = false;
    for (int it = 0; it < 80; ++it) {
      const Eigen::Vector2d f = residual(y);
      if (f.cwiseAbs().maxCoeff() < 1e-12) {
        converged = true;
        break;
      }
      Eigen::Matrix2d jac;
      const double h = 1e-6;
      for (int j = 0; j < 2; ++j) {
        Eigen::Vector2d yp = y, ym = y;
        yp[j] += h;
        ym[j] -= h;
        jac.col(j) = (residual(yp) - residual(ym)) / (2.0 * h);
      }
      Eigen::FullPivLU<Eigen::Matrix2d> lu(jac);
      if (!lu.isInvertible()) break;
      const Eigen::Vector2d step = lu.solve(f);
      double t = 1.0;
      while (t > 1e-6 &&
             residual(y - t * step).norm() > (1.0 - 0.5 * t) * f.norm())
        t *= 0.5;
      y -= t * step;
    }
    if (!converged && residual(y).cwiseAbs().maxCoeff() >= 1e-8) continue;

    Vec x_d(3);
    x_d << tpl.x1_target, y[0], y[1];
    if (!tpl.domain.contains(x_d)) continue;
    design.c = y[1] + model.hamiltonian_gradient(x_d)[2] / 2.0;
    design.x_d = x_d;

    // Accept only a strict local minimum of Hd.
    Mat hess(3, 3);
    const double h = 1e-4;
    for (int j = 0; j < 3; ++j) {
      Vec xp = x_d, xm = x_d;
      xp[j] += h;
      xm[j] -= h;
      hess.col(j) = (desired_hamiltonian(design, model, xp).second -
                     desired_hamiltonian(design, model, xm).second) /
                    (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(hess);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      saw_saddle = true;
      continue;
    }
    design.validate();
    return design;
  }
  if (saw_saddle) throw SaddleRejected("stationary point of Hd is not a local minimum");
  throw DesignInfeasible("no stationary point of Hd found from any start");
}

namespace {

Vec residual_at(const Mat& gperp, const Vec& mu, const Mat& jd_rd, const Vec& grad_hd) {
  return gperp * (mu - jd_rd * grad_hd);
}

double margin_at(const Mat& rd, const Vec& beta, const Vec& var, const Vec& grad_hd) {
  return grad_hd.dot(rd * grad_hd) -
         (beta.array() * var.array() * grad_hd.array().abs()).sum();
}

}  // namespace

Vec matching_residual(const DynamicsModel& model, const DesiredDesign& design, const Vec& x) {
  const Annihilator ann = left_annihilator(model.input_map(x));
  return residual_at(ann.Gperp, model.drift_mean(x), design.JdRd(),
                     desired_hamiltonian(design, model, x).second);
}

double robustness_margin(const DynamicsModel& model, const DesiredDesign& design,
                         const Vec& beta, const Vec& x) {
  if ((beta.array() < 0.0).any())
    throw ContractViolation("robustness_margin: beta must be nonnegative");
  return margin_at(design.Rd, beta, model.drift_variance(x),
                   desired_hamiltonian(design, model, x).second);
}

Certificate certify(const DynamicsModel& model, const DesiredDesign& design, const Vec& beta,
                    const std::vector<int>& grid_counts, double tol_match) {
  const int n = model.state_dim();
  if (static_cast<int>(grid_counts.size()) != n)
    throw ContractViolation("certify: one grid count per axis required");
  for (int c : grid_counts)
    if (c < 2) throw ContractViolation("certify: grid counts must be >= 2");

  Certificate cert;
  cert.grid_counts = grid_counts;
  cert.beta = beta;
  cert.tol_match = tol_match;
  cert.max_matching_residual = -std::numeric_limits<double>::infinity();
  cert.min_robustness_margin = std::numeric_limits<double>::infinity();

  const Annihilator ann = left_annihilator(model.input_map(design.domain.center()));
  const Mat jd_rd = design.JdRd();

  std::vector<int> idx(n, 0);
  Vec x(n);
  // For a GP model a single cross-covariance pass serves drift mean,
  // variance, and Hd gradient at once.
  const GpDynamics* gp = dynamic_cast<const GpDynamics*>(&model);
  Mat kx, grad_block;
  Vec h_block;
  while (true) {
    for (int a = 0; a < n; ++a) {
      const double lo = design.domain.lo[a];
      const double hi = design.domain.hi[a];
      x[a] = lo + (hi - lo) * idx[a] / (grid_counts[a] - 1);
    }
    Vec mu, var, grad_hd;
    if (gp != nullptr && gp->model().N() > 0) {
      const GpPhsModel& gm = gp->model();
      gm.cross_covariances(x, kx, grad_block, h_block);
      mu = kx * gm.alpha;
      grad_hd = grad_block * gm.alpha;
      const Mat jr_x = gm.structure->JR(x, gm.hyper.phi);
      const Vec L = gm.hyper.lengthscales.array().square();
      const Mat prior = gm.hyper.sigma_f * gm.hyper.sigma_f * jr_x *
                        (2.0 * L).asDiagonal() * jr_x.transpose();
      const Mat v = gm.chol_L.triangularView<Eigen::Lower>().solve(kx.transpose());
      var.resize(n);
      for (int i = 0; i < n; ++i)
        var[i] = std::max(0.0, prior(i, i) - v.col(i).squaredNorm());
    } else {
      mu = model.drift_mean(x);
      var = model.drift_variance(x);
      grad_hd = model.hamiltonian_gradient(x);
    }
    grad_hd[2] += 2.0 * (x[2] - design.c);

    const double res = residual_at(ann.Gperp, mu, jd_rd, grad_hd).cwiseAbs().maxCoeff();
    const double marg = margin_at(design.Rd, beta, var, grad_hd);
    if (res > cert.max_matching_residual) {
      cert.max_matching_residual = res;
      cert.worst_residual_point = x;
    }
    if (marg < cert.min_robustness_margin) {
      cert.min_robustness_margin = marg;
      cert.worst_margin_point = x;
    }

    int a = n - 1;
    while (a >= 0 && ++idx[a] == grid_counts[a]) idx[a--] = 0;
    if (a < 0) break;
  }
  cert.passed = cert.max_matching_residual <= tol_match && cert.min_robustness_margin >= 0.0;
  return cert;
}

Vec control_input(const DynamicsModel& model, const DesiredDesign& design, const Vec& x) {
  const Mat g = model.input_map(x);
  const Mat gtg = g.transpose() * g;
  Eigen::FullPivLU<Mat> lu(gtg);
  if (!lu.isInvertible()) throw RankLoss("G(x)^T G(x) is singular");
  const Vec mismatch =
      design.JdRd() * desired_hamiltonian(design, model, x).second - model.drift_mean(x);
  return lu.solve(g.transpose() * mismatch);
}

Field closed_loop(const PlantModel& plant, const DynamicsModel& model,
                  const DesiredDesign& design) {
  return [&plant, &model, design](const Vec& x, double) {
    return eval_dynamics(plant, x, control_input(model, design, x));
  };
}

Field desired_field(const DynamicsModel& model, const DesiredDesign& design) {
  return [&model, design](const Vec& x, double) -> Vec {
    return design.JdRd() * desired_hamiltonian(design, model, x).second;
  };
}

namespace {

nlohmann::json mat_rows(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_rows(const nlohmann::json& rows) {
  const auto r = rows.size();
  const auto c = rows.empty() ? 0 : rows[0].size();
  Mat m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from(const nlohmann::json& arr) {
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i];
  return v;
}

}  // namespace

void save_design(const DesiredDesign& design, const std::string& path,
                 const std::string& config_digest) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "desired-design";
  j["config_digest"] = config_digest;
  j["Jd"] = mat_rows(design.Jd);
  j["Rd"] = mat_rows(design.Rd);
  j["c"] = design.c;
  j["x_d"] = vec_json(design.x_d);
  j["domain"] = {{"lo", vec_json(design.domain.lo)}, {"hi", vec_json(design.domain.hi)}};
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

DesiredDesign load_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("kind", "") != "desired-design")
    throw Error("unrecognized design document: " + path);
  DesiredDesign d;
  d.Jd = mat_from_rows(j.at("Jd"));
  d.Rd = mat_from_rows(j.at("Rd"));
  d.c = j.at("c");
  d.x_d = vec_from(j.at("x_d"));
  d.domain.lo = vec_from(j.at("domain").at("lo"));
  d.domain.hi = vec_from(j.at("domain").at("hi"));
  d.validate();
  return d;
}

void save_certificate(const Certificate& cert, const std::string& path,
                      const std::string& config_digest, const std::string& model_digest) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "certificate";
  j["config_digest"] = config_digest;
  j["model_digest"] = model_digest;
  j["grid_counts"] = cert.grid_counts;
  j["beta"] = vec_json(cert.beta);
  j["tol_match"] = cert.tol_match;
  j["max_matching_residual"] = cert.max_matching_residual;
  j["min_robustness_margin"] = cert.min_robustness_margin;
  j["worst_residual_point"] = vec_json(cert.worst_residual_point);
  j["worst_margin_point"] = vec_json(cert.worst_margin_point);
  j["passed"] = cert.passed;
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

Certificate load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("kind", "") != "certificate")
    throw Error("unrecognized certificate document: " + path);
  Certificate c;
  c.grid_counts = j.at("grid_counts").get<std::vector<int>>();
  c.beta = vec_from(j.at("beta"));
  c.tol_match = j.at("tol_match");
  c.max_matching_residual = j.at("max_matching_residual");
  c.min_robustness_margin = j.at("min_robustness_margin");
  c.worst_residual_point = vec_from(j.at("worst_residual_point"));
  c.worst_margin_point = vec_from(j.at("worst_margin_point"));
  c.passed = j.at("passed");
  return c;
}

std::string json_config_digest(const std::string& path) {
  std::ifstream in(path);
  if (!in) return "";
  try {
    nlohmann::json j;
    in >> j;
    return j.value("config_digest", "");
  } catch (...) {
    return "";
  }
}

}  // namespace gpphs
