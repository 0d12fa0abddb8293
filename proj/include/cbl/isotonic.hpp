#pragma once

#include <span>
#include <vector>

namespace cbl {

/// Weighted least-squares projection of `y` onto non-increasing sequences
/// by pool-adjacent-violators. Empty weights mean unit weights.
std::vector<double> isotonic_non_increasing(std::span<const double> y, std::span<const double> w = {});

/// Same for non-decreasing sequences.
std::vector<double> isotonic_non_decreasing(std::span<const double> y, std::span<const double> w = {});

}  // namespace cbl
