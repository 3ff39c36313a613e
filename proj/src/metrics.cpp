#include "alsvm/metrics.hpp"

namespace alsvm {

Metrics f_measure(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) noexcept {
  Metrics m{tp, fp, fn, tn};
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace alsvm
