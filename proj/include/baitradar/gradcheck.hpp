#pragma once

#include <functional>
#include <string>
#include <vector>

#include "baitradar/tensor.hpp"

namespace baitradar {

/// A differentiable piece of a network reduced to a scalar probe loss.
struct GradFragment {
  /// Perturbed in place while checking; restored afterwards.
  ParameterSet* params = nullptr;
  /// Scalar loss at the current parameter values.
  std::function<double()> loss;
  /// Analytic gradient of `loss`, accumulated into zeroed buffers.
  std::function<void(Gradients&)> gradient;
};

struct GradCheckEntry {
  std::string parameter;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  bool passed(double tolerance) const { return max_rel_error() <= tolerance; }
};

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckFloor = 1e-8;
/// Floor for deep composites, whose near-zero gradients sit below the
/// roundoff of central differences at h = 1e-5 (about eps / h).
inline constexpr double kGradCheckCompositeFloor = 1e-6;

/// Compares analytic gradients against central differences for every
/// parameter element. Relative error is |ga - gn| / max(|ga|, |gn|, floor).
/// Throws std::domain_error if a loss or gradient is not finite.
GradCheckReport grad_check(const GradFragment& fragment, double step = kGradCheckStep,
                           double floor = kGradCheckFloor);

}  // namespace baitradar
