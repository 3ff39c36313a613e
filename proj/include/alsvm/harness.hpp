#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alsvm/active_learner.hpp"
#include "alsvm/dataset.hpp"
#include "alsvm/metrics.hpp"
#include "alsvm/stopping.hpp"
#include "alsvm/svm.hpp"

namespace alsvm {

/// Counts from `predict` over `test`, positive class +1.
/// Throws std::invalid_argument on an empty test set.
Metrics evaluate(const SvmModel& model, std::span<const LabeledInstance> test);

// --- synthetic data ------------------------------------------------------------

/// Sparse binary data with class-conditional Bernoulli features. Feature j
/// fires with probability q_j·exp(±s·u_j) for positives/negatives, where
/// q_j ≈ feature_density, u_j ~ U(-1, 1) and s = class_separation; s = 0
/// makes the classes indistinguishable.
struct SynthConfig {
  std::size_t n = 1000;
  std::size_t dim = 300;
  double positive_rate = 0.176;
  double class_separation = 0.8;
  double feature_density = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Exactly round(n·positive_rate) positives. Deterministic in config.seed.
Dataset generate_synthetic(const SynthConfig& config);

// --- experiments ---------------------------------------------------------------

struct ExperimentConfig {
  /// Base loop config; its seed is replaced per fold.
  AlConfig al;
  /// Unset: scaled to each fold's pool via AlConfig::defaults_for.
  std::optional<std::size_t> init_size;
  std::optional<std::size_t> batch_size;
  StopConfig stop;
  /// Percentages of the fold's pool.
  std::vector<double> checkpoints = {20, 30, 40, 100};
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  /// Worker threads for folds; 0 picks hardware concurrency.
  std::size_t threads = 0;
};

/// Metrics of one fold at one checkpoint.
struct FoldPoint {
  std::size_t iteration = 0;
  std::size_t labels_used = 0;
  Metrics metrics;
};

struct StrategyOutcome {
  RunTrace trace;
  /// Metrics of every trained model, by iteration.
  std::vector<FoldPoint> per_iteration;
  /// One entry per configured checkpoint.
  std::vector<FoldPoint> checkpoints;
  FoldPoint auto_stop;
  bool stop_fired = false;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t pool_size = 0;
  bool skipped = false;
  std::string skip_reason;
  StrategyOutcome al;
  StrategyOutcome random;
};

/// One row of a stopping-point table.
struct CurveRow {
  /// "20%", "100%", "AutoStopPoint".
  std::string checkpoint;
  double percent_of_pool = 0.0;
  std::size_t labels_used = 0;
  Strategy strategy = Strategy::ClosestInitPa;
  /// Counts summed over folds, precision/recall/f1 averaged over folds.
  Metrics metrics;
  bool auto_stop = false;
};

struct LearningCurve {
  Strategy strategy = Strategy::ClosestInitPa;
  std::vector<CurveRow> rows;
};

struct ExperimentResult {
  LearningCurve al;
  LearningCurve random;
  std::vector<FoldResult> folds;
  std::vector<std::string> warnings;

  std::size_t folds_used() const noexcept;
};

/// k-fold protocol: on each fold's training portion run AL and Random with
/// identical seeds (so they share the initial set and PA), evaluating every
/// model on the held-out fold. Folds whose training portion has a single
/// class are skipped and reported in `warnings`.
ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& config);

/// +1 for instances of `category`, -1 otherwise.
Dataset binarize(const Dataset& data, std::span<const int> categories, int category);

struct OneVsRestResult {
  std::vector<int> categories;
  std::vector<ExperimentResult> per_category;
  LearningCurve macro_al;
  LearningCurve macro_random;
};

/// Runs `run_experiment` once per category (category vs the rest) and
/// macro-averages the rows. `categories[i]` is the category of instance i.
/// Throws std::invalid_argument with fewer than two categories or when a
/// requested category has no instances.
OneVsRestResult one_vs_rest(const Dataset& data, std::span<const int> categories,
                            const ExperimentConfig& config, std::vector<int> requested = {});

/// CSV with header `checkpoint,labels_used,strategy,precision,recall,f1,auto_stop`;
/// rows interleave strategies per checkpoint; reals have 4 decimals.
void write_curves(std::ostream& out, const LearningCurve& al, const LearningCurve& random);
std::vector<CurveRow> read_curves(std::istream& in);

/// Every run trace of the experiment, tagged with `fold`.
void write_traces(std::ostream& out, const ExperimentResult& result);

}  // namespace alsvm
