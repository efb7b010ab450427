#pragma once

#include <stdexcept>
#include <string>

namespace gpphs {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition or dimension contract broken by the caller.
struct ContractViolation : Error {
  using Error::Error;
};

// Fixed-step integration produced a non-finite state.
struct IntegrationBlowup : Error {
  double time;
  explicit IntegrationBlowup(double t)
      : Error("integration produced non-finite state at t=" + std::to_string(t)), time(t) {}
};

// Sample times are not uniformly spaced.
struct UnsupportedGrid : Error {
  using Error::Error;
};

// Gram matrix not factorizable even after jitter escalation.
struct IndefiniteGram : Error {
  using Error::Error;
};

// Every optimizer start failed.
struct TrainingFailed : Error {
  using Error::Error;
};

// Left annihilator of the expected rank does not exist.
struct AnnihilatorRank : Error {
  using Error::Error;
};

// Equilibrium-shift solve found no stationary point.
struct DesignInfeasible : Error {
  using Error::Error;
};

// Stationary point found but it is not a local minimum.
struct SaddleRejected : Error {
  using Error::Error;
};

// G(x)^T G(x) is singular where the control law needs its inverse.
struct RankLoss : Error {
  using Error::Error;
};

}  // namespace gpphs
