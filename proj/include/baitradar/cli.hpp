#pragma once

#include <ostream>

namespace baitradar {

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 failed gradient check.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitGradCheck = 3;

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace baitradar
