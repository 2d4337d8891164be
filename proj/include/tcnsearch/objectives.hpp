#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace tcnsearch {

// Per-objective errors (minimization). NaN marks an unscorable entry, e.g. a
// concept without any observation in the scored window.
using ObjectiveVector = std::vector<double>;

inline constexpr double kUnscorable = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kWorstObjective = std::numeric_limits<double>::infinity();

inline bool is_unscorable(double v) noexcept { return std::isnan(v); }

}  // namespace tcnsearch
