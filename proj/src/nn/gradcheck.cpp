#include "ratepred/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ratepred::nn {
namespace {

double evaluate(const LossClosure& closure, ParamStore& params) {
  Tape tape;
  return closure(tape, params).value().item();
}

}  // namespace

GradCheckReport gradient_check(const LossClosure& closure, ParamStore& params,
                               const GradCheckOptions& options) {
  const double first = evaluate(closure, params);
  const double second = evaluate(closure, params);
  if (first != second) {
    throw NonDeterministicClosure("gradient_check: closure returned different losses on identical parameters");
  }

  params.zero_grad();
  {
    Tape tape;
    tape.backward(closure(tape, params));
  }

  const double floor = options.magnitude_floor * std::max(1.0, std::abs(first));
  GradCheckReport report;
  report.passed = true;
  const double h = options.step;
  for (auto& [path, entry] : params) {
    ParamCheck pc;
    pc.path = path;
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value[i];
      entry.value[i] = saved + h;
      const double up = evaluate(closure, params);
      entry.value[i] = saved - h;
      const double down = evaluate(closure, params);
      entry.value[i] = saved;

      const double fd = (up - down) / (2.0 * h);
      const double ad = entry.grad[i];
      const double abs_err = std::abs(ad - fd);
      const double denom = std::max({std::abs(ad), std::abs(fd), floor});
      pc.max_abs_error = std::max(pc.max_abs_error, abs_err);
      pc.max_rel_error = std::max(pc.max_rel_error, abs_err / denom);
    }
    pc.passed = pc.max_rel_error <= options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
    report.passed = report.passed && pc.passed;
    report.params.push_back(std::move(pc));
  }
  return report;
}

}  // namespace ratepred::nn
