#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "alsvm/dataset.hpp"
#include "alsvm/svm.hpp"

namespace alsvm {

/// Parameters of the stabilizing-predictions stopping rule: stop once the
/// last `window` agreements between consecutive models on a fixed stop set
/// are all at least `agreement_threshold`.
struct StopConfig {
  std::size_t stop_set_size = 2000;
  double agreement_threshold = 0.99;
  std::size_t window = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class StopSignal { Continue, Stop };

/// Per-run state of the stopping rule. The stop set never changes after
/// construction and `stopped_at` latches on the first stop.
class StoppingState {
 public:
  StoppingState() = default;

  const IndexList& stop_set() const noexcept { return stop_set_; }
  const std::optional<std::vector<Label>>& previous_predictions() const noexcept { return previous_; }
  const std::deque<double>& recent_agreements() const noexcept { return recent_; }
  std::optional<std::size_t> stopped_at() const noexcept { return stopped_at_; }
  bool stopped() const noexcept { return stopped_at_.has_value(); }
  std::size_t models_observed() const noexcept { return models_observed_; }

  friend StoppingState init_stop_set(const Dataset&, std::span<const Index>, const StopConfig&);
  friend StopSignal observe_predictions(StoppingState&, std::vector<Label>, std::size_t,
                                        const StopConfig&);
  friend StopSignal observe_agreement(StoppingState&, double, std::size_t, const StopConfig&);

 private:
  IndexList stop_set_;
  std::optional<std::vector<Label>> previous_;
  std::deque<double> recent_;
  std::optional<std::size_t> stopped_at_;
  std::size_t models_observed_ = 0;
};

/// Samples min(stop_set_size, |unlabeled|) indices uniformly (deterministic
/// in config.seed). Sampled instances stay in the unlabeled pool.
/// Throws std::invalid_argument when `unlabeled` is empty.
StoppingState init_stop_set(const Dataset& pool, std::span<const Index> unlabeled,
                            const StopConfig& config);

/// Cohen's kappa between two label vectors. When chance agreement is 1
/// (both vectors constant) the result is 1 for identical vectors and 0
/// otherwise. Throws std::invalid_argument on empty or mismatched input.
double agreement(std::span<const Label> prev, std::span<const Label> curr);

/// Predicts the stop set with `model` and feeds the result to
/// `observe_predictions`.
StopSignal update(StoppingState& state, const SvmModel& model, const Dataset& pool,
                  std::size_t iteration, const StopConfig& config);

/// Records a new prediction vector: the agreement with the previous vector
/// (if any) enters the window, then the stop rule is checked.
StopSignal observe_predictions(StoppingState& state, std::vector<Label> predictions,
                               std::size_t iteration, const StopConfig& config);

/// Pushes one agreement score into the window and evaluates the stop rule.
StopSignal observe_agreement(StoppingState& state, double kappa, std::size_t iteration,
                             const StopConfig& config);

}  // namespace alsvm
