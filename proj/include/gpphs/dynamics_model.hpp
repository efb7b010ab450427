#pragma once

#include <memory>

#include "gpphs/gp.hpp"
#include "gpphs/plant.hpp"
#include "gpphs/types.hpp"

namespace gpphs {

// What the controller synthesis needs from a dynamics estimate: the
// input-free drift with uncertainty, the Hamiltonian surrogate, and the
// structural matrices. Implemented by the GP posterior and, for oracle
// comparisons, by the exact plant (zero uncertainty).
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;

  virtual Vec drift_mean(const Vec& x) const = 0;      // E[xdot | x, u=0]
  virtual Vec drift_variance(const Vec& x) const = 0;  // per-dimension
  virtual double hamiltonian(const Vec& x) const = 0;
  virtual Vec hamiltonian_gradient(const Vec& x) const = 0;
  virtual Mat drift_matrix(const Vec& x) const = 0;  // J - R estimate
  virtual Mat input_map(const Vec& x) const = 0;     // G estimate
};

class GpDynamics : public DynamicsModel {
 public:
  explicit GpDynamics(GpPhsModel model) : model_(std::move(model)) {}

  const GpPhsModel& model() const { return model_; }

  int state_dim() const override { return model_.n(); }
  int input_dim() const override { return model_.structure->input_dim(); }

  Vec drift_mean(const Vec& x) const override {
    return posterior_dynamics(model_, x, Vec::Zero(input_dim())).first;
  }
  Vec drift_variance(const Vec& x) const override {
    return posterior_dynamics(model_, x, Vec::Zero(input_dim())).second;
  }
  double hamiltonian(const Vec& x) const override {
    return posterior_hamiltonian(model_, x).first;
  }
  Vec hamiltonian_gradient(const Vec& x) const override {
    return posterior_hamiltonian(model_, x).second;
  }
  Mat drift_matrix(const Vec& x) const override {
    return model_.structure->JR(x, model_.hyper.phi);
  }
  Mat input_map(const Vec& x) const override {
    return model_.structure->G(x, model_.hyper.phi);
  }

 private:
  GpPhsModel model_;
};

// Exact plant wrapped as a zero-variance model.
class PlantDynamics : public DynamicsModel {
 public:
  explicit PlantDynamics(PlantModel plant) : plant_(std::move(plant)) {}

  int state_dim() const override { return plant_.n; }
  int input_dim() const override { return plant_.m; }

  Vec drift_mean(const Vec& x) const override {
    return (plant_.J(x) - plant_.R(x)) * plant_.grad_H(x);
  }
  Vec drift_variance(const Vec& x) const override { return Vec::Zero(plant_.n); }
  double hamiltonian(const Vec& x) const override { return plant_.H(x); }
  Vec hamiltonian_gradient(const Vec& x) const override { return plant_.grad_H(x); }
  Mat drift_matrix(const Vec& x) const override { return plant_.J(x) - plant_.R(x); }
  Mat input_map(const Vec& x) const override { return plant_.G(x); }

 private:
  PlantModel plant_;
};

}  // namespace gpphs
