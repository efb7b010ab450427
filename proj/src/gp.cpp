#include "gpphs/gp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "gpphs/digest.hpp"
#include "gpphs/errors.hpp"
#include "gpphs/nelder_mead.hpp"

namespace gpphs {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<Mat> jr_at_points(const Mat& X, const Hyperparameters& hyper,
                              const StructureParametrization& st) {
  std::vector<Mat> jr;
  jr.reserve(X.cols());
  for (Eigen::Index q = 0; q < X.cols(); ++q) jr.push_back(st.JR(X.col(q), hyper.phi));
  return jr;
}

// Noise-replicated Gram without jitter.
Mat assemble_gram(const Mat& X, const Hyperparameters& hyper,
                  const StructureParametrization& st) {
  const int n = static_cast<int>(X.rows());
  const auto N = X.cols();
  const double sf2 = hyper.sigma_f * hyper.sigma_f;
  const Vec L = hyper.lengthscales.array().square();
  const std::vector<Mat> jr = jr_at_points(X, hyper, st);

  Mat K(n * N, n * N);
  Mat pi(n, n), gc(n, n), block(n, n);
  for (Eigen::Index p = 0; p < N; ++p) {
    for (Eigen::Index q = p; q < N; ++q) {
      const Vec d = X.col(p) - X.col(q);
      const double e = std::exp(-(L.array() * d.array().square()).sum());
      const Vec ld = L.array() * d.array();
      pi.noalias() = (-4.0 * e) * ld * ld.transpose();
      pi.diagonal().array() += 2.0 * e * L.array();
      gc.noalias() = pi * jr[q].transpose();
      block.noalias() = sf2 * jr[p] * gc;
      K.block(n * p, n * q, n, n) = block;
      if (q != p) K.block(n * q, n * p, n, n) = block.transpose();
    }
  }
  for (Eigen::Index i = 0; i < N; ++i)
    K.diagonal().segment(n * i, n) += hyper.noise;
  return K;
}

}  // namespace

FactoredGram factor_gram(const Mat& X, const Hyperparameters& hyper,
                         const StructureParametrization& st) {
  const double sf2 = hyper.sigma_f * hyper.sigma_f;
  Mat K = assemble_gram(X, hyper, st);
  double applied = 0.0;
  for (double j = 1e-8 * sf2; j <= 1e-4 * sf2 * (1.0 + 1e-12); j *= 10.0) {
    K.diagonal().array() += j - applied;
    applied = j;
    Eigen::LLT<Mat> llt(K);
    if (llt.info() == Eigen::Success)
      return FactoredGram{std::move(K), llt.matrixL(), j};
  }
  throw IndefiniteGram("Gram matrix not positive definite after jitter escalation");
}

Mat gram_matrix(const Mat& X, const Hyperparameters& hyper,
                const StructureParametrization& st) {
  return factor_gram(X, hyper, st).K;
}

Vec mean_adjusted_outputs(const RegressionDataset& reg, const Hyperparameters& hyper,
                          const StructureParametrization& st) {
  const int n = reg.n();
  const int N = reg.N();
  if (reg.Xdot.rows() != n || reg.Xdot.cols() != N || reg.U.cols() != N)
    throw ContractViolation("mean_adjusted_outputs: dimension mismatch");
  Vec y(n * N);
  for (int i = 0; i < N; ++i)
    y.segment(n * i, n) = reg.Xdot.col(i) - st.G(reg.X.col(i), hyper.phi) * reg.U.col(i);
  return y;
}

double nlml(const Hyperparameters& hyper, const RegressionDataset& reg,
            const StructureParametrization& st) {
  const FactoredGram fg = factor_gram(reg.X, hyper, st);
  const Vec y = mean_adjusted_outputs(reg, hyper, st);
  const Vec a = fg.L.triangularView<Eigen::Lower>().solve(y);
  return 0.5 * a.squaredNorm() + fg.L.diagonal().array().log().sum() +
         0.5 * static_cast<double>(y.size()) * std::log(kTwoPi);
}

void GpPhsModel::finalize() {
  jr_cache = jr_at_points(X, hyper, *structure);
}

void GpPhsModel::cross_covariances(const Vec& x, Mat& kx, Mat& grad_block,
                                   Vec& h_block) const {
  const int nn = n();
  const auto N = X.cols();
  const double sf2 = hyper.sigma_f * hyper.sigma_f;
  const Vec L = hyper.lengthscales.array().square();
  const Mat jr_x = structure->JR(x, hyper.phi);

  kx.resize(nn, nn * N);
  grad_block.resize(nn, nn * N);
  h_block.resize(nn * N);
  Mat pi(nn, nn), gc(nn, nn);
  for (Eigen::Index q = 0; q < N; ++q) {
    const Vec d = x - X.col(q);
    const double e = std::exp(-(L.array() * d.array().square()).sum());
    const Vec ld = L.array() * d.array();
    pi.noalias() = (-4.0 * e) * ld * ld.transpose();
    pi.diagonal().array() += 2.0 * e * L.array();
    gc.noalias() = sf2 * pi * jr_cache[q].transpose();
    grad_block.middleCols(nn * q, nn) = gc;
    kx.middleCols(nn * q, nn).noalias() = jr_x * gc;
    h_block.segment(nn * q, nn) = jr_cache[q] * (2.0 * sf2 * e * ld);
  }
}

Hyperparameters default_init(const RegressionDataset& reg,
                             const StructureParametrization& st) {
  Hyperparameters h;
  h.sigma_f = 1.0;
  const int n = reg.n();
  h.lengthscales = Vec::Ones(n);
  for (int i = 0; i < n; ++i) {
    const double mean = reg.X.row(i).mean();
    const double sd =
        std::sqrt((reg.X.row(i).array() - mean).square().sum() / reg.N());
    if (sd > 1e-12) h.lengthscales[i] = 1.0 / sd;
  }
  h.phi = st.phi_init();
  h.noise = Vec::Constant(n, 1e-3);
  return h;
}

TrainedModel train(const RegressionDataset& reg, const Hyperparameters& init,
                   StructurePtr st, const TrainOptions& opts) {
  if (opts.restarts < 1) throw ContractViolation("train: restarts must be >= 1");
  init.validate(*st);
  const int n = st->state_dim();
  const int phi_dim = st->phi_dim();
  const Vec theta0 = init.to_log();

  auto objective = [&](const Vec& theta) {
    const Hyperparameters h = Hyperparameters::from_log(theta, n, phi_dim);
    try {
      return nlml(h, reg, *st);
    } catch (const IndefiniteGram&) {
      return 1e12;
    }
  };

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> jitter(0.0, opts.restart_jitter);
  NelderMeadOptions nm;
  nm.max_iters = opts.max_iters;
  nm.init_step = opts.init_step;

  NelderMeadResult best;
  best.fval = std::numeric_limits<double>::infinity();
  int best_start = -1;
  for (int s = 0; s < opts.restarts; ++s) {
    Vec start = theta0;
    if (s > 0)
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += jitter(rng);
    NelderMeadResult r = nelder_mead(objective, start, nm);
    if (r.fval < best.fval) {
      best = std::move(r);
      best_start = s;
    }
  }
  if (!(best.fval < 1e12))
    throw TrainingFailed("no optimizer start produced a factorizable Gram matrix");

  TrainedModel out;
  out.nlml = best.fval;
  out.best_start = best_start;
  out.best_trace = best.best_trace;
  out.model.structure = std::move(st);
  out.model.hyper = Hyperparameters::from_log(best.x, n, phi_dim);
  out.model.X = reg.X;
  const FactoredGram fg = factor_gram(reg.X, out.model.hyper, *out.model.structure);
  const Vec y = mean_adjusted_outputs(reg, out.model.hyper, *out.model.structure);
  out.model.chol_L = fg.L;
  out.model.jitter = fg.jitter;
  out.model.alpha = fg.L.triangularView<Eigen::Lower>().transpose().solve(
      fg.L.triangularView<Eigen::Lower>().solve(y));
  out.model.gram_digest = Fnv1a().update(fg.K).hex();
  out.model.finalize();
  return out;
}

std::pair<Vec, Vec> posterior_dynamics(const GpPhsModel& model, const Vec& x, const Vec& u) {
  const auto& st = *model.structure;
  const int n = model.n();
  const double sf2 = model.hyper.sigma_f * model.hyper.sigma_f;
  const Mat jr_x = st.JR(x, model.hyper.phi);
  const Vec L = model.hyper.lengthscales.array().square();
  const Mat prior = sf2 * jr_x * (2.0 * L).asDiagonal() * jr_x.transpose();
  const Vec gu = st.G(x, model.hyper.phi) * u;
  if (model.N() == 0) return {gu, prior.diagonal()};

  Mat kx, grad_block;
  Vec h_block;
  model.cross_covariances(x, kx, grad_block, h_block);
  Vec mean = kx * model.alpha + gu;
  const Mat v = model.chol_L.triangularView<Eigen::Lower>().solve(kx.transpose());
  Vec var(n);
  for (int i = 0; i < n; ++i)
    var[i] = std::max(0.0, prior(i, i) - v.col(i).squaredNorm());
  return {std::move(mean), std::move(var)};
}

std::pair<double, Vec> posterior_hamiltonian(const GpPhsModel& model, const Vec& x) {
  if (model.N() == 0) return {0.0, Vec::Zero(model.n())};
  Mat kx, grad_block;
  Vec h_block;
  model.cross_covariances(x, kx, grad_block, h_block);
  return {h_block.dot(model.alpha), grad_block * model.alpha};
}

namespace {

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const nlohmann::json& arr) {
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i];
  return v;
}

}  // namespace

void save_model(const GpPhsModel& model, const std::string& path,
                const std::string& config_digest) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "gp-phs-model";
  j["config_digest"] = config_digest;
  j["structure"] = model.structure->name();
  j["hyperparameters"] = {{"sigma_f", model.hyper.sigma_f},
                          {"lengthscales", vec_to_json(model.hyper.lengthscales)},
                          {"phi", vec_to_json(model.hyper.phi)},
                          {"noise", vec_to_json(model.hyper.noise)}};
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index q = 0; q < model.X.cols(); ++q) cols.push_back(vec_to_json(model.X.col(q)));
  j["X"] = cols;
  j["alpha"] = vec_to_json(model.alpha);
  j["gram_digest"] = model.gram_digest;
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

GpPhsModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("schema_version", 0) != 1 || j.value("kind", "") != "gp-phs-model")
    throw Error("unrecognized model document: " + path);

  GpPhsModel model;
  model.structure = structure_by_name(j.at("structure"));
  const auto& h = j.at("hyperparameters");
  model.hyper.sigma_f = h.at("sigma_f");
  model.hyper.lengthscales = vec_from_json(h.at("lengthscales"));
  model.hyper.phi = vec_from_json(h.at("phi"));
  model.hyper.noise = vec_from_json(h.at("noise"));
  model.hyper.validate(*model.structure);

  const auto& cols = j.at("X");
  const int n = model.structure->state_dim();
  model.X.resize(n, cols.size());
  for (std::size_t q = 0; q < cols.size(); ++q)
    model.X.col(static_cast<Eigen::Index>(q)) = vec_from_json(cols[q]);
  model.alpha = vec_from_json(j.at("alpha"));
  if (model.alpha.size() != model.X.cols() * n)
    throw Error("model alpha length inconsistent with X: " + path);

  if (model.X.cols() > 0) {
    const FactoredGram fg = factor_gram(model.X, model.hyper, *model.structure);
    const std::string digest = Fnv1a().update(fg.K).hex();
    if (digest != j.at("gram_digest").get<std::string>())
      throw Error("model integrity check failed (Gram digest mismatch): " + path);
    model.chol_L = fg.L;
    model.jitter = fg.jitter;
    model.gram_digest = digest;
  }
  model.finalize();
  return model;
}

std::string model_config_digest(const std::string& path) {
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
