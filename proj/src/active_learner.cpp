#include "alsvm/active_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "alsvm/errors.hpp"
#include "alsvm/metrics.hpp"

namespace alsvm {

namespace {

// Distinct streams for the different random draws made from one seed.
constexpr std::uint64_t kInitStream = 0x1a11;
constexpr std::uint64_t kRandomStream = 0x2b22;
constexpr std::uint64_t kCvStream = 0x3c33;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(extra),
                    static_cast<std::uint32_t>(extra >> 32)};
  return std::mt19937_64(seq);
}

ModelSummary summarize(const SvmModel& m) {
  return {m.bias, m.weights.norm(), m.support_vector_count(), m.converged, m.iterations};
}

}  // namespace

const char* to_string(Strategy s) noexcept {
  return s == Strategy::ClosestInitPa ? "AL" : "Random";
}

AlConfig AlConfig::defaults_for(std::size_t pool_size) {
  AlConfig c;
  c.init_size = std::max<std::size_t>(50, pool_size / 100);
  c.batch_size = std::max<std::size_t>(10, pool_size / 100);
  return c;
}

void AlConfig::validate() const {
  if (init_size < 2) throw std::invalid_argument("init_size must be >= 2");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (pa_grid.empty()) throw std::invalid_argument("pa_grid must not be empty");
  for (double p : pa_grid)
    if (!(p > 0.0)) throw std::invalid_argument("pa_grid values must be positive");
  if (pa_cv_folds < 2) throw std::invalid_argument("pa_cv_folds must be >= 2");
  if (!(c_minus > 0.0)) throw std::invalid_argument("c_minus must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

// --- oracles -------------------------------------------------------------------

Label SimulatedOracle::label(Index index) {
  if (index >= gold_->size())
    throw OracleError("no gold label for index " + std::to_string(index));
  ++queries_;
  return (*gold_)[index].label;
}

Label ExternalOracle::label(Index index) {
  std::unique_lock lock(mutex_);
  ++waiting_[index];
  cv_.notify_all();
  cv_.wait(lock, [&] { return cancelled_ || supplied_.count(index) > 0; });
  if (--waiting_[index] == 0) waiting_.erase(index);
  auto it = supplied_.find(index);
  if (it == supplied_.end()) throw OracleError("annotation cancelled before index " +
                                               std::to_string(index) + " was labeled");
  return it->second;
}

void ExternalOracle::supply(Index index, Label label) {
  {
    std::lock_guard lock(mutex_);
    supplied_[index] = label;
  }
  cv_.notify_all();
}

void ExternalOracle::cancel() {
  {
    std::lock_guard lock(mutex_);
    cancelled_ = true;
  }
  cv_.notify_all();
}

IndexList ExternalOracle::waiting() const {
  std::lock_guard lock(mutex_);
  IndexList out;
  for (const auto& [i, n] : waiting_) out.push_back(i);
  return out;
}

// --- pool state ------------------------------------------------------------------

IndexList PoolState::labeled_sorted() const {
  IndexList out = labeled_order_;
  std::sort(out.begin(), out.end());
  return out;
}

IndexList PoolState::unlabeled() const {
  IndexList out;
  out.reserve(unlabeled_count_);
  for (Index i = 0; i < status_.size(); ++i)
    if (status_[i] == kUnlabeled) out.push_back(i);
  return out;
}

void PoolState::mark_queried(std::size_t iteration, std::span<const Index> indices) {
  for (Index i : indices)
    if (status_.at(i) != kUnlabeled)
      throw std::logic_error("index " + std::to_string(i) + " queried twice");
  for (Index i : indices) status_[i] = kQueried;
  unlabeled_count_ -= indices.size();
  query_log_.push_back({iteration, IndexList(indices.begin(), indices.end())});
}

void PoolState::set_label(Index i, Label y) {
  if (status_.at(i) != kQueried)
    throw std::invalid_argument("index " + std::to_string(i) + " is not awaiting a label");
  status_[i] = kLabeled;
  labels_[i] = y;
  labeled_order_.push_back(i);
}

// --- trace ----------------------------------------------------------------------

void write_trace(std::ostream& out, const RunTrace& trace,
                 const std::vector<std::pair<std::string, long long>>& context) {
  using json = nlohmann::ordered_json;
  for (const auto& rec : trace.iterations) {
    json j;
    for (const auto& [k, v] : context) j[k] = v;
    j["strategy"] = to_string(trace.strategy);
    j["iteration"] = rec.iteration;
    j["labeled_count"] = rec.labeled_count;
    j["positives_labeled"] = rec.positives_labeled;
    j["pa"] = rec.pa;
    j["bias"] = rec.model.bias;
    j["weight_norm"] = rec.model.weight_norm;
    j["support_vectors"] = rec.model.support_vectors;
    j["converged"] = rec.model.converged;
    j["solver_iterations"] = rec.model.solver_iterations;
    j["agreement"] = rec.agreement ? json(*rec.agreement) : json(nullptr);
    j["stop_signal"] = rec.stop_signal;
    j["stopped_at"] = rec.stopped_at ? json(*rec.stopped_at) : json(nullptr);
    j["selected"] = rec.selected;
    out << j.dump() << '\n';
  }
  if (trace.abort_reason) {
    json j;
    for (const auto& [k, v] : context) j[k] = v;
    j["strategy"] = to_string(trace.strategy);
    j["abort_reason"] = *trace.abort_reason;
    out << j.dump() << '\n';
  }
}

std::string trace_to_string(const RunTrace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  return out.str();
}

// --- operations -------------------------------------------------------------------

IndexList init_order(std::size_t pool_size, std::uint64_t seed) {
  IndexList order(pool_size);
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_rng(seed, kInitStream);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<std::pair<Index, Label>> draw_init_set(const Dataset& pool, std::size_t init_size,
                                                   std::uint64_t seed, Oracle& oracle) {
  if (init_size > pool.size())
    throw std::invalid_argument("init_size " + std::to_string(init_size) + " exceeds pool size " +
                                std::to_string(pool.size()));
  const auto order = init_order(pool.size(), seed);
  const std::size_t budget = std::min(pool.size(), 5 * init_size);
  std::vector<std::pair<Index, Label>> out;
  bool pos = false, neg = false;
  for (std::size_t k = 0; k < budget; ++k) {
    if (k >= init_size && pos && neg) break;
    const Label y = oracle.label(order[k]);
    (y == Label::Positive ? pos : neg) = true;
    out.emplace_back(order[k], y);
  }
  if (!pos || !neg)
    throw InitError("initial set of " + std::to_string(out.size()) +
                    " instances contains a single class; enlarge init_size");
  return out;
}

PaEstimate estimate_pa(std::span<const LabeledInstance> init_set, const AlConfig& config,
                       std::size_t dimension) {
  const std::size_t n = init_set.size();
  const std::size_t pos = count_positives(init_set);
  if (pos == 0 || pos == n)
    throw std::invalid_argument("PA estimation needs both classes in the initial set");
  const double ratio = static_cast<double>(n - pos) / static_cast<double>(pos);

  std::vector<double> candidates = config.pa_grid;
  if (config.include_class_ratio) candidates.push_back(ratio);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // Stratified assignment: positives dealt round-robin, negatives continue
  // the rotation.
  const std::size_t k = config.pa_cv_folds;
  IndexList positives, negatives;
  for (Index i = 0; i < n; ++i)
    (init_set[i].label == Label::Positive ? positives : negatives).push_back(i);
  auto rng = make_rng(config.seed, kCvStream);
  std::shuffle(positives.begin(), positives.end(), rng);
  std::shuffle(negatives.begin(), negatives.end(), rng);
  std::vector<std::size_t> fold_of(n);
  std::vector<std::size_t> fold_pos(k, 0), fold_size(k, 0);
  for (std::size_t r = 0; r < positives.size(); ++r) {
    fold_of[positives[r]] = r % k;
    ++fold_pos[r % k];
    ++fold_size[r % k];
  }
  for (std::size_t r = 0; r < negatives.size(); ++r) {
    const std::size_t f = (positives.size() + r) % k;
    fold_of[negatives[r]] = f;
    ++fold_size[f];
  }

  bool degenerate = false;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t train_pos = pos - fold_pos[f];
    const std::size_t train_neg = (n - pos) - (fold_size[f] - fold_pos[f]);
    if (fold_pos[f] == 0 || train_pos == 0 || train_neg == 0) degenerate = true;
  }
  if (degenerate) return {ratio, true, {}};

  PaEstimate best;
  double best_f = -1.0;
  for (double candidate : candidates) {
    TrainConfig tc{config.c_minus, candidate, config.tolerance};
    double f_sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<LabeledInstance> train_part;
      std::vector<const LabeledInstance*> test_part;
      for (Index i = 0; i < n; ++i) {
        if (fold_of[i] == f)
          test_part.push_back(&init_set[i]);
        else
          train_part.push_back(init_set[i]);
      }
      const SvmModel model = train(train_part, tc, dimension);
      std::size_t tp = 0, fp = 0, fn = 0;
      for (const auto* inst : test_part) {
        const Label y = predict(model, inst->features);
        if (y == Label::Positive) (inst->label == Label::Positive ? tp : fp)++;
        else if (inst->label == Label::Positive) ++fn;
      }
      f_sum += f_measure(tp, fp, fn).f1;
    }
    const double mean_f = f_sum / static_cast<double>(k);
    best.scores.emplace_back(candidate, mean_f);
    if (mean_f > best_f) {
      best_f = mean_f;
      best.pa = candidate;
    }
  }
  return best;
}

IndexList select_batch(const SvmModel& model, const Dataset& pool,
                       std::span<const Index> unlabeled, std::size_t batch_size) {
  if (unlabeled.empty()) throw std::invalid_argument("select_batch: no unlabeled instances");
  std::vector<std::pair<double, Index>> scored;
  scored.reserve(unlabeled.size());
  for (Index i : unlabeled) {
    if (i >= pool.size()) throw std::invalid_argument("select_batch: index outside the pool");
    scored.emplace_back(std::abs(decision_value(model, pool[i].features)), i);
  }
  const std::size_t take = std::min(batch_size, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end());
  IndexList out;
  out.reserve(take);
  for (std::size_t r = 0; r < take; ++r) out.push_back(scored[r].second);
  return out;
}

IndexList select_random(std::span<const Index> unlabeled, std::size_t batch_size,
                        std::uint64_t seed, std::size_t iteration) {
  if (unlabeled.empty()) throw std::invalid_argument("select_random: no unlabeled instances");
  IndexList items(unlabeled.begin(), unlabeled.end());
  std::sort(items.begin(), items.end());
  auto rng = make_rng(seed, kRandomStream, iteration);
  const std::size_t take = std::min(batch_size, items.size());
  for (std::size_t r = 0; r < take; ++r) {
    std::uniform_int_distribution<std::size_t> pick(r, items.size() - 1);
    std::swap(items[r], items[pick(rng)]);
  }
  items.resize(take);
  return items;
}

// --- incremental learner -------------------------------------------------------------

ActiveLearner::ActiveLearner(const Dataset& pool, AlConfig config, StopConfig stop_config,
                             Strategy strategy)
    : pool_(&pool),
      config_(std::move(config)),
      stop_config_(stop_config),
      strategy_(strategy),
      state_(pool.size()) {
  config_.validate();
  stop_config_.validate();
  if (config_.init_size > pool.size())
    throw std::invalid_argument("init_size " + std::to_string(config_.init_size) +
                                " exceeds pool size " + std::to_string(pool.size()));
  trace_.strategy = strategy;
  init_order_ = init_order(pool.size(), config_.seed);
  init_drawn_ = config_.init_size;
  IndexList first(init_order_.begin(),
                  init_order_.begin() + static_cast<std::ptrdiff_t>(config_.init_size));
  trace_.init_set = first;
  issue(std::move(first), 0);
}

ActiveLearner::Phase ActiveLearner::phase() const noexcept {
  if (halted_) return Phase::Stopped;
  if (finished_) return Phase::Completed;
  return outstanding_ > 0 ? Phase::AwaitingLabels : Phase::ReadyToTrain;
}

IndexList ActiveLearner::pending() const {
  IndexList out;
  for (Index i : batch_)
    if (awaiting(i)) out.push_back(i);
  return out;
}

bool ActiveLearner::awaiting(Index index) const {
  return index < state_.pool_size() && !state_.is_labeled(index) && !state_.is_unlabeled(index);
}

void ActiveLearner::provide_label(Index index, Label label) {
  if (!awaiting(index))
    throw std::invalid_argument("index " + std::to_string(index) + " is not awaiting a label");
  state_.set_label(index, label);
  --outstanding_;
}

void ActiveLearner::issue(IndexList batch, std::size_t iteration) {
  state_.mark_queried(iteration, batch);
  outstanding_ = batch.size();
  batch_ = std::move(batch);
}

std::vector<LabeledInstance> ActiveLearner::labeled_instances() const {
  std::vector<LabeledInstance> out;
  const auto idx = state_.labeled_sorted();
  out.reserve(idx.size());
  for (Index i : idx) out.push_back({(*pool_)[i].features, *state_.label_of(i)});
  return out;
}

std::optional<IterationRecord> ActiveLearner::advance() {
  if (phase() != Phase::ReadyToTrain)
    throw std::logic_error("advance() called while labels are outstanding or the run is over");

  auto data = labeled_instances();
  const std::size_t positives = count_positives(data);

  if (!trace_.pa) {
    if (positives == 0 || positives == data.size()) {
      const std::size_t budget = std::min(pool_->size(), 5 * config_.init_size);
      if (init_drawn_ >= budget)
        throw InitError("initial set of " + std::to_string(data.size()) +
                        " instances contains a single class; enlarge init_size");
      const Index next = init_order_[init_drawn_++];
      trace_.init_set.push_back(next);
      issue({next}, 0);
      return std::nullopt;
    }
    const auto estimate = estimate_pa(data, config_, pool_->dimension());
    trace_.pa = estimate.pa;
    trace_.pa_fallback = estimate.fallback;
    const auto unlabeled = state_.unlabeled();
    if (!unlabeled.empty()) {
      stopping_ = init_stop_set(*pool_, unlabeled, stop_config_);
      stopping_active_ = true;
      trace_.stop_set_size = stopping_.stop_set().size();
    }
  }

  const TrainConfig tc{config_.c_minus, *trace_.pa, config_.tolerance};
  model_ = train(data, tc, pool_->dimension());

  IterationRecord rec;
  rec.iteration = next_iteration_;
  rec.labeled_count = data.size();
  rec.positives_labeled = positives;
  rec.pa = *trace_.pa;
  rec.model = summarize(*model_);
  if (stopping_active_) {
    const bool had_previous = stopping_.previous_predictions().has_value();
    rec.stop_signal = update(stopping_, *model_, *pool_, rec.iteration, stop_config_) == StopSignal::Stop;
    if (had_previous)
      rec.agreement = stopping_.recent_agreements().back();
    rec.stopped_at = stopping_.stopped_at();
    trace_.stopped_at = stopping_.stopped_at();
  }

  ++next_iteration_;
  const bool capped = config_.max_iterations > 0 && next_iteration_ >= config_.max_iterations;
  if (state_.unlabeled_count() == 0 || capped) {
    finished_ = true;
  } else if (config_.halt_on_stop && stopping_.stopped()) {
    halted_ = true;
  } else {
    const auto unlabeled = state_.unlabeled();
    IndexList batch = strategy_ == Strategy::ClosestInitPa
                          ? select_batch(*model_, *pool_, unlabeled, config_.batch_size)
                          : select_random(unlabeled, config_.batch_size, config_.seed, rec.iteration);
    rec.selected = batch;
    issue(std::move(batch), next_iteration_);
  }
  trace_.iterations.push_back(rec);
  return rec;
}

RunTrace run(const Dataset& pool, const AlConfig& config, Oracle& oracle,
             const StopConfig& stop_config, Strategy strategy, const IterationObserver& observer) {
  ActiveLearner learner(pool, config, stop_config, strategy);
  try {
    for (;;) {
      const auto phase = learner.phase();
      if (phase == ActiveLearner::Phase::AwaitingLabels) {
        for (Index i : learner.pending()) learner.provide_label(i, oracle.label(i));
      } else if (phase == ActiveLearner::Phase::ReadyToTrain) {
        auto rec = learner.advance();
        if (rec && observer) observer(*rec, *learner.model());
      } else {
        break;
      }
    }
  } catch (const OracleError& e) {
    learner.trace().abort_reason = e.what();
  }
  return learner.trace();
}

}  // namespace alsvm
