#pragma once

#include <Eigen/Dense>

namespace gpphs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned box in state space.
struct Box {
  Vec lo;
  Vec hi;

  bool contains(const Vec& x, double slack = 0.0) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    }
    return true;
  }

  Vec center() const { return 0.5 * (lo + hi); }

  static Box cube(int dim, double half_width) {
    Box b;
    b.lo = Vec::Constant(dim, -half_width);
    b.hi = Vec::Constant(dim, half_width);
    return b;
  }
};

}  // namespace gpphs
