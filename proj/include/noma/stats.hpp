#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace noma {

// Median of the finite entries; NaN when there are none.
inline double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return NAN;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

inline double mean(const std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  return values.empty() ? NAN : total / static_cast<double>(values.size());
}

// 100 * (optimum - achieved) / optimum, defined as 0 when the optimum is 0.
inline double gap_percent(double optimum, double achieved) {
  return optimum == 0.0 ? 0.0 : 100.0 * (optimum - achieved) / optimum;
}

}  // namespace noma
