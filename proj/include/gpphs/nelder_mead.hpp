#pragma once

#include <functional>
#include <vector>

#include "gpphs/types.hpp"

namespace gpphs {

struct NelderMeadOptions {
  int max_iters = 800;
  double init_step = 0.3;  // per-coordinate offset of the initial simplex
  double xatol = 1e-6;
  double fatol = 1e-8;
  bool adaptive = true;  // dimension-dependent expansion/contraction/shrink
};

struct NelderMeadResult {
  Vec x;
  double fval = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> best_trace;  // best-so-far value per iteration
};

// Downhill simplex minimization. The initial simplex is x0 plus
// init_step along each coordinate axis, which keeps the search scaled
// sensibly when x0 has zero entries. Deterministic for a deterministic f.
NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                             const NelderMeadOptions& opts = {});

}  // namespace gpphs
