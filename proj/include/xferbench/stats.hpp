#pragma once

#include <cstddef>
#include <span>

namespace xferbench {

struct SampleStats {
  double mean = 0;
  double std = 0; // sample standard deviation (n-1); 0 for a single value
  double min = 0;
  double max = 0;
  std::size_t n = 0;
};

/// Two-pass mean/std plus min/max. Throws std::invalid_argument on empty input.
SampleStats sample_stats(std::span<const double> xs);

} // namespace xferbench
