#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpphs/config.hpp"
#include "gpphs/filter.hpp"
#include "gpphs/gp.hpp"
#include "gpphs/ida_pbc.hpp"
#include "gpphs/integrate.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

struct SweepRow {
  int N = 0;
  double mse_avg = 0.0;
  bool ok = false;
  std::string error;
};

struct RunReport {
  std::string config_digest;
  // training
  double nlml = 0.0;
  double sigma_f = 0.0;
  Vec lengthscales;
  Vec phi;
  Vec noise;
  // open-loop validation
  Vec openloop_rmse;
  // certificate
  double max_matching_residual = 0.0;
  double min_robustness_margin = 0.0;
  bool cert_passed = false;
  // closed loop
  Vec terminal_state;
  double x1_error = 0.0;
  double grad_hd_norm = 0.0;
  double max_hd_step_increase = 0.0;
  // sweep
  bool sweep_enabled = false;
  std::vector<SweepRow> sweep;
  bool sweep_mse_decreasing = false;

  void save(const std::string& path) const;
};

// Stage runner over one output directory. Each stage writes its artifact
// tagged with the config digest; a rerun loads any artifact whose tag
// matches instead of recomputing, so interrupted runs resume where they
// stopped. Stages chain lazily: asking for the certificate pulls data,
// filter, training and design first.
class Pipeline {
 public:
  Pipeline(ExperimentConfig cfg, std::string out_dir, bool quiet = false);

  const ExperimentConfig& config() const { return cfg_; }
  std::string artifact_path(const std::string& name) const;

  const TrajectoryDataset& data();
  const RegressionDataset& regression();
  const GpPhsModel& model();
  const Vec& openloop_rmse();
  const DesiredDesign& design();
  const Certificate& certificate();
  void closed_loop_run(RunReport& rep);
  void sweep_run(RunReport& rep);

  RunReport run_all();  // every stage plus report.json

  // Number of stages actually recomputed (not loaded) so far.
  int recomputed() const { return recomputed_; }

 private:
  struct SampledGrid {
    double dt = 0.0;
    int stride = 0;  // grid steps between samples
  };
  SampledGrid sample_grid(int N) const;

  TrajectoryDataset generate_data(int N, const std::string& file_tag);
  RegressionDataset filter_data(const TrajectoryDataset& data, const std::string& file_tag);
  GpPhsModel train_model(const RegressionDataset& reg, int N, const std::string& file_tag,
                         const std::optional<Hyperparameters>& warm, int restarts,
                         int max_iters);
  DesiredDesign synthesize(const GpPhsModel& mdl, const std::string& file_tag);
  SweepRow sweep_entry(int N);

  void note(const std::string& msg) const;

  ExperimentConfig cfg_;
  std::string out_;
  bool quiet_;
  std::string digest_;
  int recomputed_ = 0;

  std::optional<TrajectoryDataset> data_;
  std::optional<RegressionDataset> regression_;
  std::optional<GpPhsModel> model_;
  std::optional<Vec> openloop_rmse_;
  std::optional<DesiredDesign> design_;
  std::optional<Certificate> certificate_;
};

}  // namespace gpphs
