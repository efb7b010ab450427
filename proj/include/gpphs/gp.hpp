#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gpphs/filter.hpp"
#include "gpphs/kernel.hpp"
#include "gpphs/structure.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

// Regularized Gram matrix over the training states: block (p,q) is
// phs_kernel_block(X_p, X_q), with per-dimension noise variances replicated
// per point plus jitter added on the diagonal. The jitter starts at
// 1e-8*sigma_f^2 and escalates tenfold until the matrix factors, up to
// 1e-4*sigma_f^2; beyond that IndefiniteGram is thrown.
Mat gram_matrix(const Mat& X, const Hyperparameters& hyper,
                const StructureParametrization& st);

struct FactoredGram {
  Mat K;          // regularized Gram including noise and the jitter that worked
  Mat L;          // lower Cholesky factor of K
  double jitter;  // absolute diagonal shift used
};

FactoredGram factor_gram(const Mat& X, const Hyperparameters& hyper,
                         const StructureParametrization& st);

// Stacks xdot_i - Ghat(x_i) u_i point-major (all n dims of point 1, then
// point 2, ...) into one nN-vector.
Vec mean_adjusted_outputs(const RegressionDataset& reg, const Hyperparameters& hyper,
                          const StructureParametrization& st);

// Full Gaussian negative log marginal likelihood,
//   0.5 y^T K^-1 y + 0.5 log|K| + (nN/2) log(2 pi),
// evaluated through the Cholesky factor.
double nlml(const Hyperparameters& hyper, const RegressionDataset& reg,
            const StructureParametrization& st);

// Trained model: hyperparameters plus the cached solve pieces needed for
// posterior queries. Immutable once built; safe for concurrent reads.
struct GpPhsModel {
  StructurePtr structure;
  Hyperparameters hyper;
  Mat X;       // n x N training states
  Vec alpha;   // K^-1 (mean-adjusted outputs), length nN
  Mat chol_L;  // lower factor of the regularized Gram
  double jitter = 0.0;
  std::string gram_digest;

  int n() const { return structure ? structure->state_dim() : 0; }
  int N() const { return static_cast<int>(X.cols()); }

  // Cross-covariance rows between a query point and the training set under
  // the structured prior; kx is Cov(xdot(x), xdot(X)) (n x nN), grad_block
  // is Cov(grad H(x), xdot(X)) (n x nN), h_block is Cov(H(x), xdot(X)) (nN).
  void cross_covariances(const Vec& x, Mat& kx, Mat& grad_block, Vec& h_block) const;

  std::vector<Mat> jr_cache;  // JR at each training point

  void finalize();  // rebuilds jr_cache / digest after fields are set
};

Hyperparameters default_init(const RegressionDataset& reg,
                             const StructureParametrization& st);

struct TrainOptions {
  int restarts = 8;
  int max_iters = 800;
  std::uint64_t seed = 0;
  double init_step = 0.3;      // initial simplex offset in log space
  double restart_jitter = 0.5; // stddev of log-space restart perturbations
};

struct TrainedModel {
  GpPhsModel model;
  double nlml = 0.0;
  int best_start = 0;
  std::vector<double> best_trace;  // best-so-far objective of the winning start
};

// Multi-start Nelder-Mead over log-space hyperparameters. Start 0 uses init
// exactly; further starts perturb it with seeded Gaussian jitter. Starts
// run in order and ties keep the earliest, so results are deterministic
// given (data, init, seed).
TrainedModel train(const RegressionDataset& reg, const Hyperparameters& init,
                   StructurePtr st, const TrainOptions& opts);

// Posterior over the drift at x given input u: mean and per-dimension
// variance (clamped at zero).
std::pair<Vec, Vec> posterior_dynamics(const GpPhsModel& model, const Vec& x, const Vec& u);

// Posterior mean of the latent Hamiltonian and its gradient at x.
std::pair<double, Vec> posterior_hamiltonian(const GpPhsModel& model, const Vec& x);

// Versioned JSON round trip. Loading rebuilds the Cholesky factor from the
// stored states and hyperparameters and refuses models whose regularized
// Gram digest does not match.
void save_model(const GpPhsModel& model, const std::string& path,
                const std::string& config_digest);
GpPhsModel load_model(const std::string& path);
std::string model_config_digest(const std::string& path);  // "" if unreadable

}  // namespace gpphs
