#include "gpphs/structure.hpp"

#include "gpphs/errors.hpp"

namespace gpphs {

Mat MicroactuatorStructure::J(const Vec&, const Vec&) const {
  Mat j(3, 3);
  j << 0, 1, 0, -1, 0, 0, 0, 0, 0;
  return j;
}

Mat MicroactuatorStructure::R(const Vec&, const Vec& phi) const {
  return Vec{{0.0, phi[0], 1.0 / phi[1]}}.asDiagonal();
}

Mat MicroactuatorStructure::G(const Vec&, const Vec& phi) const {
  Mat g(3, 1);
  g << 0, 0, 1.0 / phi[1];
  return g;
}

ConstantStructure::ConstantStructure(Mat J, Mat R, Mat G)
    : J_(std::move(J)), R_(std::move(R)), G_(std::move(G)) {
  if (J_.rows() != J_.cols() || R_.rows() != R_.cols() || J_.rows() != R_.rows() ||
      G_.rows() != J_.rows())
    throw ContractViolation("ConstantStructure: inconsistent dimensions");
}

StructurePtr structure_by_name(const std::string& name) {
  if (name == "microactuator") return std::make_shared<MicroactuatorStructure>();
  throw Error("unknown structure parametrization: " + name);
}

}  // namespace gpphs
