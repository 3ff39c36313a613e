#include "alsvm/stopping.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace alsvm {

void StopConfig::validate() const {
  if (stop_set_size < 1) throw std::invalid_argument("stop_set_size must be >= 1");
  if (!(agreement_threshold > 0.0 && agreement_threshold <= 1.0))
    throw std::invalid_argument("agreement_threshold must lie in (0, 1]");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
}

StoppingState init_stop_set(const Dataset& pool, std::span<const Index> unlabeled,
                            const StopConfig& config) {
  config.validate();
  if (unlabeled.empty()) throw std::invalid_argument("cannot draw a stop set from an empty pool");
  for (Index i : unlabeled)
    if (i >= pool.size()) throw std::invalid_argument("unlabeled index outside the pool");

  IndexList candidates(unlabeled.begin(), unlabeled.end());
  std::sort(candidates.begin(), candidates.end());
  std::mt19937_64 rng(config.seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(std::min(config.stop_set_size, candidates.size()));
  std::sort(candidates.begin(), candidates.end());

  StoppingState state;
  state.stop_set_ = std::move(candidates);
  return state;
}

double agreement(std::span<const Label> prev, std::span<const Label> curr) {
  if (prev.size() != curr.size())
    throw std::invalid_argument("agreement: prediction vectors differ in length");
  if (prev.empty()) throw std::invalid_argument("agreement: empty prediction vectors");

  const double n = static_cast<double>(prev.size());
  std::size_t same = 0, pos_prev = 0, pos_curr = 0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    same += prev[i] == curr[i];
    pos_prev += prev[i] == Label::Positive;
    pos_curr += curr[i] == Label::Positive;
  }
  const double observed = static_cast<double>(same) / n;
  const double p1 = static_cast<double>(pos_prev) / n;
  const double p2 = static_cast<double>(pos_curr) / n;
  const double chance = p1 * p2 + (1.0 - p1) * (1.0 - p2);
  if (chance >= 1.0) return same == prev.size() ? 1.0 : 0.0;
  return (observed - chance) / (1.0 - chance);
}

StopSignal observe_agreement(StoppingState& state, double kappa, std::size_t iteration,
                             const StopConfig& config) {
  state.recent_.push_back(kappa);
  while (state.recent_.size() > config.window) state.recent_.pop_front();
  if (state.stopped_at_) return StopSignal::Stop;
  const bool stable =
      state.recent_.size() == config.window &&
      std::all_of(state.recent_.begin(), state.recent_.end(),
                  [&](double k) { return k >= config.agreement_threshold; });
  if (!stable) return StopSignal::Continue;
  state.stopped_at_ = iteration;
  return StopSignal::Stop;
}

StopSignal observe_predictions(StoppingState& state, std::vector<Label> predictions,
                               std::size_t iteration, const StopConfig& config) {
  ++state.models_observed_;
  StopSignal signal = state.stopped_at_ ? StopSignal::Stop : StopSignal::Continue;
  if (state.previous_) signal = observe_agreement(state, agreement(*state.previous_, predictions),
                                                  iteration, config);
  state.previous_ = std::move(predictions);
  return signal;
}

StopSignal update(StoppingState& state, const SvmModel& model, const Dataset& pool,
                  std::size_t iteration, const StopConfig& config) {
  std::vector<Label> predictions;
  predictions.reserve(state.stop_set().size());
  for (Index i : state.stop_set()) predictions.push_back(predict(model, pool[i].features));
  return observe_predictions(state, std::move(predictions), iteration, config);
}

}  // namespace alsvm
