#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gpphs/types.hpp"

namespace gpphs {

// Known structural part of a learned system: parametrized maps for the
// interconnection Jhat, dissipation Rhat, and input matrix Ghat. The
// parameter vector phi holds positive physical quantities; the optimizer
// works on log(phi) so skewness of Jhat and positive semidefiniteness of
// Rhat hold for every candidate by construction.
class StructureParametrization {
 public:
  virtual ~StructureParametrization() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int phi_dim() const = 0;
  virtual Vec phi_init() const = 0;

  virtual Mat J(const Vec& x, const Vec& phi) const = 0;
  virtual Mat R(const Vec& x, const Vec& phi) const = 0;
  virtual Mat G(const Vec& x, const Vec& phi) const = 0;

  // Jhat - Rhat, the linear operator applied to grad H.
  Mat JR(const Vec& x, const Vec& phi) const { return J(x, phi) - R(x, phi); }

  virtual bool state_dependent() const { return false; }
};

using StructurePtr = std::shared_ptr<const StructureParametrization>;

// Microactuator template: fixed canonical J, R = diag(0, b, 1/r),
// G = [0, 0, 1/r]^T with phi = (b, r) shared between R and G.
class MicroactuatorStructure : public StructureParametrization {
 public:
  std::string name() const override { return "microactuator"; }
  int state_dim() const override { return 3; }
  int input_dim() const override { return 1; }
  int phi_dim() const override { return 2; }
  Vec phi_init() const override { return Vec::Ones(2); }

  Mat J(const Vec&, const Vec&) const override;
  Mat R(const Vec&, const Vec& phi) const override;
  Mat G(const Vec&, const Vec& phi) const override;
};

// Fully known constant structure with no free parameters; used for small
// synthetic systems in tests.
class ConstantStructure : public StructureParametrization {
 public:
  ConstantStructure(Mat J, Mat R, Mat G);

  std::string name() const override { return "constant"; }
  int state_dim() const override { return static_cast<int>(J_.rows()); }
  int input_dim() const override { return static_cast<int>(G_.cols()); }
  int phi_dim() const override { return 0; }
  Vec phi_init() const override { return Vec::Zero(0); }

  Mat J(const Vec&, const Vec&) const override { return J_; }
  Mat R(const Vec&, const Vec&) const override { return R_; }
  Mat G(const Vec&, const Vec&) const override { return G_; }

 private:
  Mat J_, R_, G_;
};

// Lookup by serialized name; knows the built-in parametrizations.
StructurePtr structure_by_name(const std::string& name);

}  // namespace gpphs
