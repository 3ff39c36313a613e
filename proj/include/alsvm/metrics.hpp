#pragma once

#include <cstddef>

namespace alsvm {

/// Confusion counts for the positive class and the derived P/R/F. Each ratio
/// is 0 when its denominator is 0.
struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics f_measure(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn = 0) noexcept;

}  // namespace alsvm
