#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "alsvm/dataset.hpp"

namespace alsvm {

/// Cost factors of the soft-margin objective
///
///   minimize ½‖w‖² + C₊ Σ_{y=+1} ξ + C₋ Σ_{y=-1} ξ
///
/// parameterised as C₋ and the positive amplification ratio PA = C₊/C₋.
struct TrainConfig {
  double c_minus = 1.0;
  double pa = 1.0;
  /// Bound on the maximal KKT residual for `converged`.
  double tolerance = 1e-3;
  /// Pair-update budget per 100 training points.
  long max_passes = 10000;

  double c_plus() const noexcept { return pa * c_minus; }
  double cost(Label y) const noexcept { return y == Label::Positive ? c_plus() : c_minus; }
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// A learned hyperplane (w, b) together with the dual solution that produced it.
struct SvmModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  /// One dual coefficient per training instance, in training order. May be
  /// empty for a model reloaded from disk.
  std::vector<double> alphas;
  TrainConfig config;
  bool converged = false;
  /// Pair updates performed by the solver.
  std::size_t iterations = 0;

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(weights.size()); }
  std::size_t support_vector_count() const noexcept;
};

/// Per-instance slack and both objective values at the model's solution.
struct SlackReport {
  std::vector<double> slacks;
  double primal = 0.0;
  double dual = 0.0;

  double gap() const noexcept { return primal - dual; }
};

/// Trains the asymmetric-cost linear SVM by SMO with maximal-violating-pair
/// working-set selection. `dimension` is raised to the data's extent if
/// smaller; pass the pool dimension so the model can score unseen features.
///
/// Throws std::invalid_argument on empty data or an invalid config and
/// TrainingError if only one class is present. Exhausting the pair-update
/// budget is not an error: the model is returned with `converged == false`.
SvmModel train(std::span<const LabeledInstance> data, const TrainConfig& config,
               std::size_t dimension = 0);

/// w·x + b. Throws std::invalid_argument if x has an index ≥ model dimension.
double decision_value(const SvmModel& model, const SparseVector& x);

/// +1 iff the decision value is strictly positive; an exact zero maps to -1.
inline Label sign_rule(double value) noexcept {
  return value > 0.0 ? Label::Positive : Label::Negative;
}
Label predict(const SvmModel& model, const SparseVector& x);

/// Throws std::invalid_argument unless `data` matches the model's alphas in size.
SlackReport diagnostics(const SvmModel& model, std::span<const LabeledInstance> data);

/// Maximal KKT residual of (alphas, w, b) over the training set.
double kkt_violation(const SvmModel& model, std::span<const LabeledInstance> data);

/// Σα − ½‖Σ αᵢyᵢxᵢ‖², evaluated directly from the coefficients.
double dual_objective(std::span<const LabeledInstance> data, std::span<const double> alphas);

/// Text record: header, dimension, bias, config echo, 1-based `index:weight`
/// pairs and (optionally) the dual coefficients. Doubles round-trip exactly.
void write_model(std::ostream& out, const SvmModel& model);
SvmModel read_model(std::istream& in);

/// The SMO iteration itself, exposed so callers can observe the dual
/// trajectory one pair update at a time. `train` drives it to completion.
class SmoSolver {
 public:
  SmoSolver(std::span<const LabeledInstance> data, const TrainConfig& config);

  /// Performs one pair update. Returns false, without changing anything,
  /// when the maximal violating pair is within `stop_gap` (defaults to the
  /// config tolerance).
  bool step();
  bool step(double stop_gap);
  /// max_{I_up} −yG − min_{I_low} −yG; ≤ 0 at an exact optimum.
  double violating_gap() const;
  /// Σα − ½αᵀQα, tracked from the gradient.
  double dual_objective() const;
  std::span<const double> alphas() const noexcept { return alpha_; }
  std::size_t iterations() const noexcept { return iterations_; }
  std::size_t max_iterations() const noexcept { return max_iterations_; }

  /// Builds (w, b) from the current coefficients. Not marked converged.
  SvmModel model(std::size_t dimension) const;

 private:
  const std::vector<double>& kernel_row(std::size_t i);
  bool select_pair(double stop_gap, std::size_t& up, std::size_t& low) const;

  std::span<const LabeledInstance> data_;
  TrainConfig config_;
  std::vector<double> y_;
  std::vector<double> upper_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::vector<double> diag_;
  std::vector<std::vector<double>> rows_;
  std::size_t cached_rows_ = 0;
  std::size_t row_budget_ = 0;
  std::vector<double> scatter_;
  std::size_t iterations_ = 0;
  std::size_t max_iterations_ = 0;
};

}  // namespace alsvm
