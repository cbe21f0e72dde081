#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "baitradar/gradcheck.hpp"

namespace baitradar {

struct NamedGradCheck {
  std::string name;
  GradCheckReport report;
  double floor = kGradCheckFloor;
};

struct GradCheckSuiteOptions {
  std::uint64_t seed = 7;
  /// Doubles the dense weight gradient; used to prove the checker bites.
  bool corrupt_dense = false;
};

/// Gradient checks over every layer and composite at small seeded shapes:
/// dense, embedding, LSTM, conv2d+relu+pool (stride 1 and 2), fusion+head,
/// each encoder end to end, and the full six-modality model. The last two
/// groups use the composite floor.
std::vector<NamedGradCheck> run_grad_check_suite(const GradCheckSuiteOptions& options = {});

}  // namespace baitradar
