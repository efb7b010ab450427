#include "gpphs/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpphs/errors.hpp"

namespace gpphs {

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                             const NelderMeadOptions& opts) {
  const int d = static_cast<int>(x0.size());
  if (d < 1) throw ContractViolation("nelder_mead: empty start point");

  const double rho = 1.0;
  const double chi = opts.adaptive ? 1.0 + 2.0 / d : 2.0;
  const double psi = opts.adaptive ? 0.75 - 0.5 / d : 0.5;
  const double sigma = opts.adaptive ? 1.0 - 1.0 / d : 0.5;

  NelderMeadResult res;
  std::vector<Vec> xs(d + 1, x0);
  std::vector<double> fs(d + 1);
  for (int i = 1; i <= d; ++i) xs[i][i - 1] += opts.init_step;
  for (int i = 0; i <= d; ++i) fs[i] = f(xs[i]);
  res.evaluations = d + 1;

  std::vector<int> order(d + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Vec> xs2(d + 1);
    std::vector<double> fs2(d + 1);
    for (int i = 0; i <= d; ++i) {
      xs2[i] = xs[order[i]];
      fs2[i] = fs[order[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };
  sort_simplex();

  auto eval = [&](const Vec& x) {
    ++res.evaluations;
    return f(x);
  };

  for (int it = 0; it < opts.max_iters; ++it) {
    double xspread = 0.0, fspread = 0.0;
    for (int i = 1; i <= d; ++i) {
      xspread = std::max(xspread, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
      fspread = std::max(fspread, std::abs(fs[i] - fs[0]));
    }
    if (xspread <= opts.xatol && fspread <= opts.fatol) {
      res.converged = true;
      break;
    }
    ++res.iterations;

    Vec centroid = Vec::Zero(d);
    for (int i = 0; i < d; ++i) centroid += xs[i];
    centroid /= d;

    const Vec xr = (1.0 + rho) * centroid - rho * xs[d];
    const double fr = eval(xr);
    bool shrink = false;
    if (fr < fs[0]) {
      const Vec xe = (1.0 + rho * chi) * centroid - rho * chi * xs[d];
      const double fe = eval(xe);
      if (fe < fr) {
        xs[d] = xe;
        fs[d] = fe;
      } else {
        xs[d] = xr;
        fs[d] = fr;
      }
    } else if (fr < fs[d - 1]) {
      xs[d] = xr;
      fs[d] = fr;
    } else if (fr < fs[d]) {
      const Vec xc = (1.0 + psi * rho) * centroid - psi * rho * xs[d];
      const double fc = eval(xc);
      if (fc <= fr) {
        xs[d] = xc;
        fs[d] = fc;
      } else {
        shrink = true;
      }
    } else {
      const Vec xcc = (1.0 - psi) * centroid + psi * xs[d];
      const double fcc = eval(xcc);
      if (fcc < fs[d]) {
        xs[d] = xcc;
        fs[d] = fcc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (int i = 1; i <= d; ++i) {
        xs[i] = xs[0] + sigma * (xs[i] - xs[0]);
        fs[i] = eval(xs[i]);
      }
    }
    sort_simplex();
    res.best_trace.push_back(fs[0]);
  }

  res.x = xs[0];
  res.fval = fs[0];
  return res;
}

}  // namespace gpphs
