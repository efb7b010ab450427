#include "gpphs/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "gpphs/csv.hpp"
#include "gpphs/digest.hpp"
#include "gpphs/dynamics_model.hpp"
#include "gpphs/errors.hpp"

namespace gpphs {

namespace {

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

void RunReport::save(const std::string& path) const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "run-report";
  j["config_digest"] = config_digest;
  j["training"] = {{"nlml", nlml},
                   {"sigma_f", sigma_f},
                   {"lengthscales", vec_json(lengthscales)},
                   {"phi", vec_json(phi)},
                   {"noise", vec_json(noise)}};
  j["open_loop"] = {{"rmse", vec_json(openloop_rmse)}};
  j["certificate"] = {{"max_matching_residual", max_matching_residual},
                      {"min_robustness_margin", min_robustness_margin},
                      {"passed", cert_passed}};
  j["closed_loop"] = {{"terminal_state", vec_json(terminal_state)},
                      {"x1_error", x1_error},
                      {"grad_hd_norm", grad_hd_norm},
                      {"max_hd_step_increase", max_hd_step_increase}};
  j["sweep"] = nlohmann::json::object();
  j["sweep"]["enabled"] = sweep_enabled;
  if (sweep_enabled) {
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepRow& r : sweep) {
      nlohmann::json row = {{"N", r.N}, {"ok", r.ok}};
      if (r.ok)
        row["mse_avg"] = r.mse_avg;
      else
        row["error"] = r.error;
      rows.push_back(row);
    }
    j["sweep"]["rows"] = rows;
    j["sweep"]["mse_decreasing"] = sweep_mse_decreasing;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

Pipeline::Pipeline(ExperimentConfig cfg, std::string out_dir, bool quiet)
    : cfg_(std::move(cfg)), out_(std::move(out_dir)), quiet_(quiet) {
  cfg_.validate();
  digest_ = cfg_.digest();
  std::filesystem::create_directories(out_);
}

std::string Pipeline::artifact_path(const std::string& name) const {
  return (std::filesystem::path(out_) / name).string();
}

void Pipeline::note(const std::string& msg) const {
  if (!quiet_) {
    std::fputs((msg + "\n").c_str(), stdout);
    std::fflush(stdout);
  }
}

Pipeline::SampledGrid Pipeline::sample_grid(int N) const {
  const double spacing = cfg_.sampling.t_end / (N - 1);
  const int stride =
      std::max(1, static_cast<int>(std::llround(spacing / cfg_.sampling.dt_target)));
  return SampledGrid{spacing / stride, stride};
}

TrajectoryDataset Pipeline::generate_data(int N, const std::string& file_tag) {
  const std::string path = artifact_path("data" + file_tag + ".csv");
  const int n = 3, m = 1;
  if (std::filesystem::exists(path)) {
    const CsvTable t = read_csv(path);
    if (t.comment_value("config_digest") == digest_ &&
        static_cast<int>(t.rows.size()) == N) {
      TrajectoryDataset d;
      d.X.resize(n, N);
      d.U.resize(m, N);
      for (int i = 0; i < N; ++i) {
        d.times.push_back(t.rows[i][0]);
        for (int k = 0; k < n; ++k) d.X(k, i) = t.rows[i][1 + k];
        for (int k = 0; k < m; ++k) d.U(k, i) = t.rows[i][1 + n + k];
      }
      note("[data" + file_tag + "] cached (" + std::to_string(N) + " samples)");
      return d;
    }
  }

  const PlantModel plant = microactuator(cfg_.plant);
  const double amp = cfg_.excitation.amplitude;
  const double freq = cfg_.excitation.frequency;
  InputFn input = [amp, freq](double t) { return Vec::Constant(1, amp * std::sin(freq * t)); };
  const SampledGrid grid = sample_grid(N);
  const Trajectory traj = simulate(plant, cfg_.sampling.x0, input, cfg_.sampling.t_end, grid.dt);
  if (static_cast<int>(traj.size()) < (N - 1) * grid.stride + 1)
    throw Error("generated trajectory too short for requested sample count");

  TrajectoryDataset d;
  d.X.resize(n, N);
  d.U.resize(m, N);
  for (int i = 0; i < N; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) * grid.stride;
    d.times.push_back(traj.times[k]);
    d.X.col(i) = traj.states[k];
    d.U.col(i) = traj.inputs[k];
  }
  if (cfg_.sampling.noise_var > 0.0) {
    std::mt19937_64 rng(derive_seed(cfg_.seed, "data", static_cast<std::uint64_t>(N)));
    std::normal_distribution<double> gauss(0.0, std::sqrt(cfg_.sampling.noise_var));
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < n; ++k) d.X(k, i) += gauss(rng);
  }

  CsvTable t;
  t.comments = {"config_digest=" + digest_};
  t.header = {"t", "x1", "x2", "x3", "u1"};
  for (int i = 0; i < N; ++i)
    t.rows.push_back({d.times[i], d.X(0, i), d.X(1, i), d.X(2, i), d.U(0, i)});
  write_csv(path, t);
  ++recomputed_;
  note("[data" + file_tag + "] " + std::to_string(N) + " samples written");
  return d;
}

RegressionDataset Pipeline::filter_data(const TrajectoryDataset& data,
                                        const std::string& file_tag) {
  const std::string path = artifact_path("regression" + file_tag + ".csv");
  const int n = 3, m = 1;
  if (std::filesystem::exists(path)) {
    const CsvTable t = read_csv(path);
    if (t.comment_value("config_digest") == digest_) {
      RegressionDataset reg;
      const int N = static_cast<int>(t.rows.size());
      reg.X.resize(n, N);
      reg.Xdot.resize(n, N);
      reg.U.resize(m, N);
      for (int i = 0; i < N; ++i) {
        reg.times.push_back(t.rows[i][0]);
        for (int k = 0; k < n; ++k) reg.X(k, i) = t.rows[i][1 + k];
        for (int k = 0; k < n; ++k) reg.Xdot(k, i) = t.rows[i][1 + n + k];
        for (int k = 0; k < m; ++k) reg.U(k, i) = t.rows[i][1 + 2 * n + k];
      }
      note("[filter" + file_tag + "] cached (" + std::to_string(N) + " pairs)");
      return reg;
    }
  }

  RegressionDataset reg = estimate_derivatives(data, cfg_.filter.window, cfg_.filter.poly_order);
  CsvTable t;
  t.comments = {"config_digest=" + digest_};
  t.header = {"t", "x1", "x2", "x3", "xdot1", "xdot2", "xdot3", "u1"};
  for (int i = 0; i < reg.N(); ++i)
    t.rows.push_back({reg.times[i], reg.X(0, i), reg.X(1, i), reg.X(2, i), reg.Xdot(0, i),
                      reg.Xdot(1, i), reg.Xdot(2, i), reg.U(0, i)});
  write_csv(path, t);
  ++recomputed_;
  note("[filter" + file_tag + "] " + std::to_string(reg.N()) + " regression pairs");
  return reg;
}

namespace {

double nlml_of_model(const GpPhsModel& model, const RegressionDataset& reg) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  const Vec y = mean_adjusted_outputs(reg, model.hyper, *model.structure);
  return 0.5 * y.dot(model.alpha) +
         model.chol_L.diagonal().array().log().sum() +
         0.5 * static_cast<double>(y.size()) * std::log(two_pi);
}

}  // namespace

GpPhsModel Pipeline::train_model(const RegressionDataset& reg, int N,
                                 const std::string& file_tag,
                                 const std::optional<Hyperparameters>& warm, int restarts,
                                 int max_iters) {
  const std::string path = artifact_path("model" + file_tag + ".json");
  if (std::filesystem::exists(path) && model_config_digest(path) == digest_) {
    GpPhsModel m = load_model(path);
    note("[train" + file_tag + "] cached");
    return m;
  }
  StructurePtr st = std::make_shared<MicroactuatorStructure>();
  const Hyperparameters init = warm ? *warm : default_init(reg, *st);
  TrainOptions opts;
  opts.restarts = restarts;
  opts.max_iters = max_iters;
  opts.seed = derive_seed(cfg_.seed, "train", static_cast<std::uint64_t>(N));
  opts.init_step = cfg_.training.init_step;
  opts.restart_jitter = cfg_.training.restart_jitter;
  TrainedModel trained = train(reg, init, std::move(st), opts);
  save_model(trained.model, path, digest_);
  ++recomputed_;
  char buf[160];
  std::snprintf(buf, sizeof buf, "[train%s] nlml=%.3f b=%.4f r=%.4f", file_tag.c_str(),
                trained.nlml, trained.model.hyper.phi[0], trained.model.hyper.phi[1]);
  note(buf);
  return std::move(trained.model);
}

const TrajectoryDataset& Pipeline::data() {
  if (!data_) data_ = generate_data(cfg_.sampling.N, "");
  return *data_;
}

const RegressionDataset& Pipeline::regression() {
  if (!regression_) regression_ = filter_data(data(), "");
  return *regression_;
}

const GpPhsModel& Pipeline::model() {
  if (!model_)
    model_ = train_model(regression(), cfg_.sampling.N, "", std::nullopt,
                         cfg_.training.restarts, cfg_.training.max_iters);
  return *model_;
}

const Vec& Pipeline::openloop_rmse() {
  if (openloop_rmse_) return *openloop_rmse_;
  const std::string path = artifact_path("openloop.csv");
  const int n = 3;
  CsvTable t;
  bool cached = false;
  if (std::filesystem::exists(path)) {
    t = read_csv(path);
    cached = t.comment_value("config_digest") == digest_;
  }
  if (!cached) {
    const GpPhsModel& mdl = model();
    const PlantModel plant = microactuator(cfg_.plant);
    const double amp = cfg_.excitation.amplitude;
    const double freq = cfg_.excitation.frequency;
    InputFn input = [amp, freq](double tt) {
      return Vec::Constant(1, amp * std::sin(freq * tt));
    };
    const SampledGrid grid = sample_grid(cfg_.sampling.N);
    const Trajectory truth =
        simulate(plant, cfg_.sampling.x0, input, cfg_.sampling.t_end, grid.dt);
    Field predicted = [&](const Vec& x, double tt) {
      return posterior_dynamics(mdl, x, input(tt)).first;
    };
    const Trajectory rollout =
        simulate_field(predicted, cfg_.sampling.x0, cfg_.sampling.t_end, grid.dt);

    t = CsvTable{};
    t.comments = {"config_digest=" + digest_, "sample_stride=" + std::to_string(grid.stride)};
    t.header = {"t", "x1_true", "x2_true", "x3_true", "x1_pred", "x2_pred", "x3_pred"};
    for (std::size_t k = 0; k < truth.size(); ++k) {
      std::vector<double> row{truth.times[k]};
      for (int d = 0; d < n; ++d) row.push_back(truth.states[k][d]);
      for (int d = 0; d < n; ++d) row.push_back(rollout.states[k][d]);
      t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
    ++recomputed_;
  }

  // Score only between the training sample instants, so the comparison is
  // prediction rather than recall.
  const int stride = [&] {
    const std::string s = t.comment_value("sample_stride");
    return s.empty() ? sample_grid(cfg_.sampling.N).stride : std::stoi(s);
  }();
  Vec sq = Vec::Zero(n);
  std::size_t count = 0;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    if (stride > 0 && k % static_cast<std::size_t>(stride) == 0) continue;
    for (int d = 0; d < n; ++d) {
      const double diff = t.rows[k][1 + n + d] - t.rows[k][1 + d];
      sq[d] += diff * diff;
    }
    ++count;
  }
  openloop_rmse_ = (sq / static_cast<double>(count)).cwiseSqrt();
  char buf[120];
  std::snprintf(buf, sizeof buf, "[openloop] rmse=[%.4g, %.4g, %.4g]%s", (*openloop_rmse_)[0],
                (*openloop_rmse_)[1], (*openloop_rmse_)[2], cached ? " (cached)" : "");
  note(buf);
  return *openloop_rmse_;
}

DesiredDesign Pipeline::synthesize(const GpPhsModel& mdl, const std::string& file_tag) {
  const std::string path = artifact_path("design" + file_tag + ".json");
  if (std::filesystem::exists(path) && json_config_digest(path) == digest_) {
    DesiredDesign d = load_design(path);
    note("[design" + file_tag + "] cached");
    return d;
  }
  DesignTemplate tpl;
  tpl.r_d = cfg_.design.r_d;
  tpl.x1_target = cfg_.design.x1_target;
  tpl.domain = cfg_.design.domain;
  tpl.x3_starts = cfg_.design.x3_starts;
  GpDynamics dyn(mdl);
  DesiredDesign d = solve_equilibrium_shift(dyn, tpl);
  save_design(d, path, digest_);
  ++recomputed_;
  char buf[160];
  std::snprintf(buf, sizeof buf, "[design%s] x_d=[%.4f, %.4f, %.4f] c=%.4f", file_tag.c_str(),
                d.x_d[0], d.x_d[1], d.x_d[2], d.c);
  note(buf);
  return d;
}

const DesiredDesign& Pipeline::design() {
  if (!design_) design_ = synthesize(model(), "");
  return *design_;
}

const Certificate& Pipeline::certificate() {
  if (certificate_) return *certificate_;
  const std::string path = artifact_path("certificate.json");
  if (std::filesystem::exists(path) && json_config_digest(path) == digest_) {
    certificate_ = load_certificate(path);
    note("[certify] cached");
    return *certificate_;
  }
  GpDynamics dyn(model());
  certificate_ = certify(dyn, design(), cfg_.design.beta, cfg_.design.grid_counts,
                         cfg_.design.tol_match);
  save_certificate(*certificate_, path, digest_, model().gram_digest);
  ++recomputed_;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "[certify] max_residual=%.3g min_margin=%.3g -> %s",
                certificate_->max_matching_residual, certificate_->min_robustness_margin,
                certificate_->passed ? "PASS" : "FAIL");
  note(buf);
  return *certificate_;
}

void Pipeline::closed_loop_run(RunReport& rep) {
  const std::string path = artifact_path("closedloop.csv");
  const int n = 3;
  CsvTable t;
  bool cached = false;
  if (std::filesystem::exists(path)) {
    t = read_csv(path);
    cached = t.comment_value("config_digest") == digest_;
  }
  const GpPhsModel& mdl = model();
  const DesiredDesign& dsg = design();
  GpDynamics dyn(mdl);
  if (!cached) {
    const PlantModel plant = microactuator(cfg_.plant);
    const Field loop = closed_loop(plant, dyn, dsg);
    const Trajectory closed =
        simulate_field(loop, cfg_.sampling.x0, cfg_.closed_loop.t_end, cfg_.closed_loop.dt);
    const Trajectory target = simulate_field(desired_field(dyn, dsg), cfg_.sampling.x0,
                                             cfg_.closed_loop.t_end, cfg_.closed_loop.dt);
    t = CsvTable{};
    t.comments = {"config_digest=" + digest_};
    t.header = {"t", "x1", "x2", "x3", "u1", "Hd", "xd1", "xd2", "xd3"};
    for (std::size_t k = 0; k < closed.size(); ++k) {
      const Vec& x = closed.states[k];
      std::vector<double> row{closed.times[k], x[0], x[1], x[2],
                              control_input(dyn, dsg, x)[0],
                              desired_hamiltonian(dsg, dyn, x).first};
      for (int d = 0; d < n; ++d) row.push_back(target.states[k][d]);
      t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
    ++recomputed_;
  }

  const auto& last = t.rows.back();
  rep.terminal_state = Vec{{last[1], last[2], last[3]}};
  rep.x1_error = std::abs(last[1] - cfg_.design.x1_target);
  rep.grad_hd_norm = desired_hamiltonian(dsg, dyn, rep.terminal_state).second.norm();
  double max_inc = 0.0;
  for (std::size_t k = 1; k < t.rows.size(); ++k)
    max_inc = std::max(max_inc, t.rows[k][5] - t.rows[k - 1][5]);
  rep.max_hd_step_increase = max_inc;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "[closedloop] x(%g)=[%.4f, %.4f, %.4f] |x1-%.2g|=%.4f%s",
                cfg_.closed_loop.t_end, last[1], last[2], last[3], cfg_.design.x1_target,
                rep.x1_error, cached ? " (cached)" : "");
  note(buf);
}

SweepRow Pipeline::sweep_entry(int N) {
  SweepRow row;
  row.N = N;
  const std::string tag = "_" + std::to_string(N);
  const std::string path = artifact_path("closedloop" + tag + ".csv");
  CsvTable t;
  bool cached = false;
  if (std::filesystem::exists(path)) {
    t = read_csv(path);
    cached = t.comment_value("config_digest") == digest_;
  }
  if (!cached) {
    const TrajectoryDataset d = generate_data(N, tag);
    const RegressionDataset reg = filter_data(d, tag);
    const GpPhsModel mdl = train_model(reg, N, tag, model().hyper, cfg_.sweep.restarts,
                                       cfg_.sweep.max_iters);
    const DesiredDesign dsg = synthesize(mdl, tag);
    GpDynamics dyn(mdl);
    const PlantModel plant = microactuator(cfg_.plant);
    const Trajectory closed = simulate_field(closed_loop(plant, dyn, dsg), cfg_.sampling.x0,
                                             cfg_.closed_loop.t_end, cfg_.closed_loop.dt);
    const Trajectory target = simulate_field(desired_field(dyn, dsg), cfg_.sampling.x0,
                                             cfg_.closed_loop.t_end, cfg_.closed_loop.dt);
    t = CsvTable{};
    t.comments = {"config_digest=" + digest_};
    t.header = {"t", "x1", "x2", "x3", "xd1", "xd2", "xd3", "mse"};
    for (std::size_t k = 0; k < closed.size(); ++k) {
      const Vec& x = closed.states[k];
      const Vec& xd = target.states[k];
      const double mse = (x - xd).squaredNorm() / 3.0;
      t.rows.push_back({closed.times[k], x[0], x[1], x[2], xd[0], xd[1], xd[2], mse});
    }
    write_csv(path, t);
    ++recomputed_;
  }
  double acc = 0.0;
  for (const auto& r : t.rows) acc += r.back();
  row.mse_avg = acc / static_cast<double>(t.rows.size());
  row.ok = true;
  char buf[120];
  std::snprintf(buf, sizeof buf, "[sweep N=%d] time-avg mse=%.6g%s", N, row.mse_avg,
                cached ? " (cached)" : "");
  note(buf);
  return row;
}

void Pipeline::sweep_run(RunReport& rep) {
  rep.sweep_enabled = cfg_.sweep.enabled;
  if (!cfg_.sweep.enabled) return;
  rep.sweep.clear();
  for (int N : cfg_.sweep.sizes) {
    try {
      rep.sweep.push_back(sweep_entry(N));
    } catch (const std::exception& e) {
      SweepRow row;
      row.N = N;
      row.ok = false;
      row.error = e.what();
      rep.sweep.push_back(row);
      note("[sweep N=" + std::to_string(N) + "] failed: " + row.error);
    }
  }

  CsvTable t;
  t.comments = {"config_digest=" + digest_};
  t.header = {"N", "t", "mse"};
  for (const SweepRow& row : rep.sweep) {
    if (!row.ok) continue;
    const CsvTable per =
        read_csv(artifact_path("closedloop_" + std::to_string(row.N) + ".csv"));
    for (const auto& r : per.rows)
      t.rows.push_back({static_cast<double>(row.N), r.front(), r.back()});
  }
  write_csv(artifact_path("sweep.csv"), t);

  rep.sweep_mse_decreasing = !rep.sweep.empty();
  for (std::size_t i = 0; i < rep.sweep.size(); ++i) {
    if (!rep.sweep[i].ok ||
        (i > 0 && !(rep.sweep[i].mse_avg < rep.sweep[i - 1].mse_avg))) {
      rep.sweep_mse_decreasing = false;
      break;
    }
  }
}

RunReport Pipeline::run_all() {
  RunReport rep;
  rep.config_digest = digest_;
  const GpPhsModel& mdl = model();
  rep.nlml = nlml_of_model(mdl, regression());
  rep.sigma_f = mdl.hyper.sigma_f;
  rep.lengthscales = mdl.hyper.lengthscales;
  rep.phi = mdl.hyper.phi;
  rep.noise = mdl.hyper.noise;
  rep.openloop_rmse = openloop_rmse();
  const Certificate& cert = certificate();
  rep.max_matching_residual = cert.max_matching_residual;
  rep.min_robustness_margin = cert.min_robustness_margin;
  rep.cert_passed = cert.passed;
  closed_loop_run(rep);
  sweep_run(rep);
  rep.save(artifact_path("report.json"));
  note("[report] " + artifact_path("report.json"));
  return rep;
}

}  // namespace gpphs
