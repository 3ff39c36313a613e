#pragma once

// Pool-based active learning with closest-to-hyperplane batch selection and
// a positive-amplification ratio (PA = C₊/C₋) fixed once from the initial
// labeled set.
//
// Loop order (one "iteration" per trained model):
//   1. draw a random initial set and obtain its labels; extend it one
//      instance at a time until both classes are present
//   2. estimate PA by cross-validation on the initial set, once
//   3. repeat: train with C₊ = PA·C₋ on everything labeled so far, update
//      the stopping rule, select the next batch, obtain its labels
//
// The loop keeps going after the stopping rule fires unless halt_on_stop is
// set; the stop iteration is recorded either way.

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alsvm/dataset.hpp"
#include "alsvm/stopping.hpp"
#include "alsvm/svm.hpp"

namespace alsvm {

enum class Strategy { ClosestInitPa, Random };

const char* to_string(Strategy s) noexcept;

struct AlConfig {
  std::size_t init_size = 50;
  std::size_t batch_size = 10;
  std::vector<double> pa_grid = {1, 2, 3, 4, 5, 7, 10};
  /// Also try PA = #negatives / #positives of the initial set.
  bool include_class_ratio = true;
  std::size_t pa_cv_folds = 5;
  double c_minus = 1.0;
  double tolerance = 1e-3;
  std::uint64_t seed = 0;
  /// Trained models per run; 0 means unbounded.
  std::size_t max_iterations = 0;
  bool halt_on_stop = false;

  /// init_size = max(50, 1% of pool), batch_size = max(10, 1% of pool).
  static AlConfig defaults_for(std::size_t pool_size);
  void validate() const;
};

// --- label providers ----------------------------------------------------------

class Oracle {
 public:
  virtual ~Oracle() = default;
  /// Throws OracleError when no label can be obtained.
  virtual Label label(Index index) = 0;
};

/// Answers from the gold labels of a dataset.
class SimulatedOracle final : public Oracle {
 public:
  explicit SimulatedOracle(const Dataset& gold) : gold_(&gold) {}
  Label label(Index index) override;
  std::size_t queries() const noexcept { return queries_; }

 private:
  const Dataset* gold_;
  std::size_t queries_ = 0;
};

/// Blocks the caller of `label` until another thread calls `supply` for that
/// index (or `cancel`, which makes pending and future requests fail).
class ExternalOracle final : public Oracle {
 public:
  Label label(Index index) override;
  void supply(Index index, Label label);
  void cancel();
  /// Indices currently blocked in `label`.
  IndexList waiting() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::map<Index, Label> supplied_;
  std::map<Index, int> waiting_;
  bool cancelled_ = false;
};

// --- run state ----------------------------------------------------------------

struct QueryRecord {
  std::size_t iteration;
  IndexList indices;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

/// Which pool instances are labeled, unlabeled, or queried and awaiting a
/// label, plus the ordered query history.
class PoolState {
 public:
  PoolState() = default;
  explicit PoolState(std::size_t pool_size)
      : labels_(pool_size), status_(pool_size, kUnlabeled), unlabeled_count_(pool_size) {}

  std::size_t pool_size() const noexcept { return labels_.size(); }
  std::size_t labeled_count() const noexcept { return labeled_order_.size(); }
  std::size_t unlabeled_count() const noexcept { return unlabeled_count_; }
  bool is_labeled(Index i) const { return status_.at(i) == kLabeled; }
  bool is_unlabeled(Index i) const { return status_.at(i) == kUnlabeled; }
  std::optional<Label> label_of(Index i) const { return labels_.at(i); }
  /// Labeled indices in acquisition order.
  const IndexList& labeled_order() const noexcept { return labeled_order_; }
  IndexList labeled_sorted() const;
  IndexList unlabeled() const;
  const std::vector<QueryRecord>& query_log() const noexcept { return query_log_; }

  /// unlabeled → awaiting label; records the query.
  void mark_queried(std::size_t iteration, std::span<const Index> indices);
  /// awaiting label → labeled.
  void set_label(Index i, Label y);

 private:
  static constexpr unsigned char kUnlabeled = 0, kQueried = 1, kLabeled = 2;
  std::vector<std::optional<Label>> labels_;
  std::vector<unsigned char> status_;
  IndexList labeled_order_;
  std::size_t unlabeled_count_ = 0;
  std::vector<QueryRecord> query_log_;
};

struct ModelSummary {
  double bias = 0.0;
  double weight_norm = 0.0;
  std::size_t support_vectors = 0;
  bool converged = false;
  std::size_t solver_iterations = 0;

  friend bool operator==(const ModelSummary&, const ModelSummary&) = default;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t labeled_count = 0;
  std::size_t positives_labeled = 0;
  double pa = 1.0;
  ModelSummary model;
  std::optional<double> agreement;
  bool stop_signal = false;
  std::optional<std::size_t> stopped_at;
  /// Batch queried after this model; empty on the last iteration.
  IndexList selected;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct RunTrace {
  Strategy strategy = Strategy::ClosestInitPa;
  std::optional<double> pa;
  bool pa_fallback = false;
  IndexList init_set;
  std::size_t stop_set_size = 0;
  std::vector<IterationRecord> iterations;
  std::optional<std::size_t> stopped_at;
  std::optional<std::string> abort_reason;

  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

/// One JSON object per iteration. `context` fields (e.g. fold, seed) are
/// prepended to every record.
void write_trace(std::ostream& out, const RunTrace& trace,
                 const std::vector<std::pair<std::string, long long>>& context = {});
std::string trace_to_string(const RunTrace& trace);

// --- operations ---------------------------------------------------------------

/// Random permutation of 0..n-1 used to draw initial sets.
IndexList init_order(std::size_t pool_size, std::uint64_t seed);

/// Uniform sample of `init_size` instances labeled through `oracle`,
/// extended one instance at a time (at most 5·init_size in total) until both
/// classes are present. Throws InitError when that budget or the pool runs out.
std::vector<std::pair<Index, Label>> draw_init_set(const Dataset& pool, std::size_t init_size,
                                                   std::uint64_t seed, Oracle& oracle);

struct PaEstimate {
  double pa = 1.0;
  bool fallback = false;
  /// (candidate, mean held-out F) for each candidate tried, ascending.
  std::vector<std::pair<double, double>> scores;
};

/// Picks the PA candidate with the best mean held-out F under stratified
/// cross-validation on the initial set (ties go to the smaller candidate).
/// Falls back to #neg/#pos when some fold has no positive test instance or
/// a single-class training part. Throws std::invalid_argument on a
/// single-class set.
PaEstimate estimate_pa(std::span<const LabeledInstance> init_set, const AlConfig& config,
                       std::size_t dimension = 0);

/// The min(batch_size, |unlabeled|) indices with the smallest |w·x + b|,
/// ascending, ties by index. Throws std::invalid_argument on empty input.
IndexList select_batch(const SvmModel& model, const Dataset& pool,
                       std::span<const Index> unlabeled, std::size_t batch_size);

/// Uniform sample without replacement, deterministic in (seed, iteration).
IndexList select_random(std::span<const Index> unlabeled, std::size_t batch_size,
                        std::uint64_t seed, std::size_t iteration);

/// Incremental form of the loop. Callers supply labels for `pending()` and
/// call `advance()`; the batch-driven annotation service and `run` share it.
class ActiveLearner {
 public:
  enum class Phase { AwaitingLabels, ReadyToTrain, Stopped, Completed };

  /// `pool` must outlive the learner. Throws std::invalid_argument on an
  /// invalid config or when init_size exceeds the pool size. The first
  /// pending batch is the initial set.
  ActiveLearner(const Dataset& pool, AlConfig config, StopConfig stop_config, Strategy strategy);

  Phase phase() const noexcept;
  /// Queried indices still waiting for a label.
  IndexList pending() const;
  /// The batch issued most recently (labeled or not).
  const IndexList& current_batch() const noexcept { return batch_; }
  /// Throws std::invalid_argument unless `index` is awaiting a label.
  void provide_label(Index index, Label label);
  bool awaiting(Index index) const;

  /// Requires phase() == ReadyToTrain. During the initial phase this may
  /// only extend the initial set (returns nullopt); otherwise it trains,
  /// updates the stopping rule and issues the next batch.
  std::optional<IterationRecord> advance();

  const PoolState& pool_state() const noexcept { return state_; }
  const StoppingState& stopping() const noexcept { return stopping_; }
  const RunTrace& trace() const noexcept { return trace_; }
  RunTrace& trace() noexcept { return trace_; }
  std::optional<double> pa() const noexcept { return trace_.pa; }
  /// Latest model; nullptr before the first training.
  const SvmModel* model() const noexcept { return model_ ? &*model_ : nullptr; }
  const AlConfig& config() const noexcept { return config_; }
  const StopConfig& stop_config() const noexcept { return stop_config_; }
  std::size_t iteration() const noexcept { return next_iteration_; }

 private:
  void issue(IndexList batch, std::size_t iteration);
  std::vector<LabeledInstance> labeled_instances() const;

  const Dataset* pool_;
  AlConfig config_;
  StopConfig stop_config_;
  Strategy strategy_;
  PoolState state_;
  StoppingState stopping_;
  bool stopping_active_ = false;
  RunTrace trace_;
  std::optional<SvmModel> model_;
  IndexList init_order_;
  std::size_t init_drawn_ = 0;
  IndexList batch_;
  std::size_t outstanding_ = 0;
  std::size_t next_iteration_ = 0;
  bool finished_ = false;
  bool halted_ = false;
};

using IterationObserver = std::function<void(const IterationRecord&, const SvmModel&)>;

/// Runs the loop to completion (pool exhaustion, max_iterations, or the stop
/// signal when halt_on_stop is set). An OracleError ends the run early with
/// `abort_reason` set and the partial trace preserved.
RunTrace run(const Dataset& pool, const AlConfig& config, Oracle& oracle,
             const StopConfig& stop_config, Strategy strategy,
             const IterationObserver& observer = {});

}  // namespace alsvm
