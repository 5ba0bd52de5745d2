#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratepred/nn/tape.hpp"

namespace ratepred::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, multiplied by max(1, |loss|).
  /// Central-difference round-off grows with |loss|, so gradient entries below
  /// this level are compared in absolute terms.
  double magnitude_floor = 1e-6;
};

struct ParamCheck {
  std::string path;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool passed = false;
};

class NonDeterministicClosure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds the loss on a fresh tape from the current parameter values.
using LossClosure = std::function<Var(Tape&, ParamStore&)>;

/// Compares reverse-mode gradients with central differences for every
/// element of every parameter. Relative error is
/// |auto - fd| / max(|auto|, |fd|, magnitude_floor * max(1, |loss|)).
GradCheckReport gradient_check(const LossClosure& closure, ParamStore& params,
                               const GradCheckOptions& options = {});

}  // namespace ratepred::nn
