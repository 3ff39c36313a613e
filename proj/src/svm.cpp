#include "alsvm/svm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "alsvm/errors.hpp"

namespace alsvm {

namespace {

constexpr double kTau = 1e-12;
// Kernel rows are cached up to this many doubles (~256 MiB).
constexpr std::size_t kRowCacheDoubles = std::size_t{32} << 20;

bool in_up_set(double y, double a, double c) { return (y > 0 && a < c) || (y < 0 && a > 0); }
bool in_low_set(double y, double a, double c) { return (y < 0 && a < c) || (y > 0 && a > 0); }

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("model file: invalid number '" + s + "'");
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(c_minus > 0.0)) throw std::invalid_argument("c_minus must be positive");
  if (!(pa > 0.0)) throw std::invalid_argument("pa must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_passes < 1) throw std::invalid_argument("max_passes must be >= 1");
}

std::size_t SvmModel::support_vector_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(alphas.begin(), alphas.end(), [](double a) { return a > 0.0; }));
}

// --- SMO -------------------------------------------------------------------

SmoSolver::SmoSolver(std::span<const LabeledInstance> data, const TrainConfig& config)
    : data_(data), config_(config) {
  config_.validate();
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  const std::size_t n = data.size();
  const std::size_t pos = count_positives(data);
  if (pos == 0 || pos == n)
    throw TrainingError("training data must contain both classes (got " + std::to_string(pos) +
                        " positives of " + std::to_string(n) + ")");

  std::size_t dim = 0;
  y_.resize(n);
  upper_.resize(n);
  diag_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_[i] = sign_of(data[i].label);
    upper_[i] = config_.cost(data[i].label);
    diag_[i] = data[i].features.squared_norm();
    dim = std::max(dim, data[i].features.extent());
  }
  alpha_.assign(n, 0.0);
  grad_.assign(n, -1.0);
  rows_.resize(n);
  row_budget_ = std::max<std::size_t>(2, kRowCacheDoubles / n);
  scatter_.assign(dim, 0.0);

  const std::size_t hundreds = (n + 99) / 100;
  max_iterations_ = static_cast<std::size_t>(config_.max_passes) * hundreds;
}

const std::vector<double>& SmoSolver::kernel_row(std::size_t i) {
  auto& row = rows_[i];
  if (!row.empty()) return row;
  if (cached_rows_ >= row_budget_) {
    for (auto& r : rows_) {
      r.clear();
      r.shrink_to_fit();
    }
    cached_rows_ = 0;
  }
  const auto& xi = data_[i].features;
  for (const auto& f : xi) scatter_[f.index] = f.value;
  row.resize(data_.size());
  for (std::size_t k = 0; k < data_.size(); ++k) {
    double s = 0.0;
    for (const auto& f : data_[k].features)
      if (f.index < scatter_.size()) s += f.value * scatter_[f.index];
    row[k] = s;
  }
  for (const auto& f : xi) scatter_[f.index] = 0.0;
  ++cached_rows_;
  return row;
}

bool SmoSolver::select_pair(double stop_gap, std::size_t& up, std::size_t& low) const {
  double gmax = -std::numeric_limits<double>::infinity();
  double gmin = std::numeric_limits<double>::infinity();
  const std::size_t n = alpha_.size();
  for (std::size_t t = 0; t < n; ++t) {
    const double g = -y_[t] * grad_[t];
    if (in_up_set(y_[t], alpha_[t], upper_[t]) && g > gmax) {
      gmax = g;
      up = t;
    }
    if (in_low_set(y_[t], alpha_[t], upper_[t]) && g < gmin) {
      gmin = g;
      low = t;
    }
  }
  return std::isfinite(gmax) && std::isfinite(gmin) && gmax - gmin > stop_gap;
}

double SmoSolver::violating_gap() const {
  double gmax = -std::numeric_limits<double>::infinity();
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < alpha_.size(); ++t) {
    const double g = -y_[t] * grad_[t];
    if (in_up_set(y_[t], alpha_[t], upper_[t])) gmax = std::max(gmax, g);
    if (in_low_set(y_[t], alpha_[t], upper_[t])) gmin = std::min(gmin, g);
  }
  if (!std::isfinite(gmax) || !std::isfinite(gmin)) return 0.0;
  return gmax - gmin;
}

double SmoSolver::dual_objective() const {
  // αᵀQα = Σ α (G + 1)
  double s = 0.0;
  for (std::size_t t = 0; t < alpha_.size(); ++t) s += alpha_[t] * (1.0 - grad_[t]);
  return 0.5 * s;
}

bool SmoSolver::step() { return step(config_.tolerance); }

bool SmoSolver::step(double stop_gap) {
  std::size_t i = 0, j = 0;
  if (!select_pair(stop_gap, i, j)) return false;

  const auto& row_i = kernel_row(i);
  const auto& row_j = kernel_row(j);
  const double ci = upper_[i], cj = upper_[j];
  const double old_ai = alpha_[i], old_aj = alpha_[j];
  double ai = old_ai, aj = old_aj;
  const double qij = y_[i] * y_[j] * row_i[j];

  if (y_[i] != y_[j]) {
    double quad = diag_[i] + diag_[j] + 2.0 * qij;
    if (quad <= 0.0) quad = kTau;
    const double delta = (-grad_[i] - grad_[j]) / quad;
    const double diff = ai - aj;
    ai += delta;
    aj += delta;
    if (diff > 0.0) {
      if (aj < 0.0) {
        aj = 0.0;
        ai = diff;
      }
    } else if (ai < 0.0) {
      ai = 0.0;
      aj = -diff;
    }
    if (diff > ci - cj) {
      if (ai > ci) {
        ai = ci;
        aj = ci - diff;
      }
    } else if (aj > cj) {
      aj = cj;
      ai = cj + diff;
    }
  } else {
    double quad = diag_[i] + diag_[j] - 2.0 * qij;
    if (quad <= 0.0) quad = kTau;
    const double delta = (grad_[i] - grad_[j]) / quad;
    const double sum = ai + aj;
    ai -= delta;
    aj += delta;
    if (sum > ci) {
      if (ai > ci) {
        ai = ci;
        aj = sum - ci;
      }
    } else if (aj < 0.0) {
      aj = 0.0;
      ai = sum;
    }
    if (sum > cj) {
      if (aj > cj) {
        aj = cj;
        ai = sum - cj;
      }
    } else if (ai < 0.0) {
      ai = 0.0;
      aj = sum;
    }
  }

  alpha_[i] = ai;
  alpha_[j] = aj;
  const double di = (ai - old_ai) * y_[i];
  const double dj = (aj - old_aj) * y_[j];
  for (std::size_t k = 0; k < grad_.size(); ++k)
    grad_[k] += y_[k] * (row_i[k] * di + row_j[k] * dj);
  ++iterations_;
  return true;
}

SvmModel SmoSolver::model(std::size_t dimension) const {
  SvmModel m;
  m.config = config_;
  m.alphas = alpha_;
  m.iterations = iterations_;
  m.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::max(dimension, scatter_.size())));
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    if (alpha_[k] == 0.0) continue;
    const double coef = alpha_[k] * y_[k];
    for (const auto& f : data_[k].features) m.weights[static_cast<Eigen::Index>(f.index)] += coef * f.value;
  }

  double free_sum = 0.0;
  std::size_t free_count = 0;
  double up_max = -std::numeric_limits<double>::infinity();
  double low_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    const double g = y_[k] - sparse_dot(data_[k].features, m.weights);
    if (alpha_[k] > 0.0 && alpha_[k] < upper_[k]) {
      free_sum += g;
      ++free_count;
    }
    if (in_up_set(y_[k], alpha_[k], upper_[k])) up_max = std::max(up_max, g);
    if (in_low_set(y_[k], alpha_[k], upper_[k])) low_min = std::min(low_min, g);
  }
  if (free_count > 0) {
    m.bias = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(up_max) && std::isfinite(low_min)) {
    m.bias = 0.5 * (up_max + low_min);
  } else {
    m.bias = std::isfinite(up_max) ? up_max : (std::isfinite(low_min) ? low_min : 0.0);
  }
  return m;
}

SvmModel train(std::span<const LabeledInstance> data, const TrainConfig& config,
               std::size_t dimension) {
  SmoSolver solver(data, config);
  double stop_gap = config.tolerance;
  SvmModel model;
  for (;;) {
    while (solver.iterations() < solver.max_iterations() && solver.step(stop_gap)) {
    }
    model = solver.model(dimension);
    model.converged = kkt_violation(model, data) <= config.tolerance;
    if (model.converged || solver.iterations() >= solver.max_iterations()) break;
    // Bias recovery from fresh dot products can sit marginally outside the
    // gradient-based gap; tighten and continue.
    stop_gap *= 0.5;
    if (stop_gap < 1e-14) break;
  }
  return model;
}

// --- evaluation --------------------------------------------------------------

double decision_value(const SvmModel& model, const SparseVector& x) {
  return sparse_dot(x, model.weights) + model.bias;
}

Label predict(const SvmModel& model, const SparseVector& x) {
  return sign_rule(decision_value(model, x));
}

double dual_objective(std::span<const LabeledInstance> data, std::span<const double> alphas) {
  if (data.size() != alphas.size())
    throw std::invalid_argument("alphas do not match the training set size");
  std::size_t dim = 0;
  for (const auto& inst : data) dim = std::max(dim, inst.features.extent());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    sum += alphas[k];
    const double coef = alphas[k] * sign_of(data[k].label);
    for (const auto& f : data[k].features) w[static_cast<Eigen::Index>(f.index)] += coef * f.value;
  }
  return sum - 0.5 * w.squaredNorm();
}

SlackReport diagnostics(const SvmModel& model, std::span<const LabeledInstance> data) {
  if (data.size() != model.alphas.size())
    throw std::invalid_argument("training set has " + std::to_string(data.size()) +
                                " instances but the model has " +
                                std::to_string(model.alphas.size()) + " alphas");
  SlackReport report;
  report.slacks.reserve(data.size());
  const double half_norm = 0.5 * model.weights.squaredNorm();
  double penalty = 0.0;
  double alpha_sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double margin = sign_of(data[k].label) * decision_value(model, data[k].features);
    const double xi = std::max(0.0, 1.0 - margin);
    report.slacks.push_back(xi);
    penalty += model.config.cost(data[k].label) * xi;
    alpha_sum += model.alphas[k];
  }
  report.primal = half_norm + penalty;
  report.dual = alpha_sum - half_norm;
  return report;
}

double kkt_violation(const SvmModel& model, std::span<const LabeledInstance> data) {
  if (data.size() != model.alphas.size())
    throw std::invalid_argument("training set has " + std::to_string(data.size()) +
                                " instances but the model has " +
                                std::to_string(model.alphas.size()) + " alphas");
  double worst = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double yf = sign_of(data[k].label) * decision_value(model, data[k].features);
    const double a = model.alphas[k];
    const double c = model.config.cost(data[k].label);
    double r;
    if (a <= 0.0)
      r = std::max(0.0, 1.0 - yf);
    else if (a >= c)
      r = std::max(0.0, yf - 1.0);
    else
      r = std::abs(yf - 1.0);
    worst = std::max(worst, r);
  }
  return worst;
}

// --- serialization -----------------------------------------------------------

void write_model(std::ostream& out, const SvmModel& model) {
  out << "alsvm-model 1\n";
  out << "dim " << model.dimension() << '\n';
  out << "bias " << format_double(model.bias) << '\n';
  out << "c_minus " << format_double(model.config.c_minus) << '\n';
  out << "pa " << format_double(model.config.pa) << '\n';
  out << "tolerance " << format_double(model.config.tolerance) << '\n';
  out << "max_passes " << model.config.max_passes << '\n';
  out << "converged " << (model.converged ? 1 : 0) << '\n';
  out << "weights";
  for (Eigen::Index i = 0; i < model.weights.size(); ++i)
    if (model.weights[i] != 0.0) out << ' ' << (i + 1) << ':' << format_double(model.weights[i]);
  out << '\n';
  if (!model.alphas.empty()) {
    out << "alphas";
    for (double a : model.alphas) out << ' ' << format_double(a);
    out << '\n';
  }
}

SvmModel read_model(std::istream& in) {
  SvmModel model;
  std::string line;
  if (!std::getline(in, line) || line != "alsvm-model 1")
    throw std::runtime_error("model file: missing 'alsvm-model 1' header");
  bool have_dim = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    std::string tok;
    if (key == "dim") {
      std::size_t d = 0;
      ls >> d;
      model.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
      have_dim = true;
    } else if (key == "bias") {
      ls >> tok;
      model.bias = parse_double(tok);
    } else if (key == "c_minus") {
      ls >> tok;
      model.config.c_minus = parse_double(tok);
    } else if (key == "pa") {
      ls >> tok;
      model.config.pa = parse_double(tok);
    } else if (key == "tolerance") {
      ls >> tok;
      model.config.tolerance = parse_double(tok);
    } else if (key == "max_passes") {
      ls >> model.config.max_passes;
    } else if (key == "converged") {
      int c = 0;
      ls >> c;
      model.converged = c != 0;
    } else if (key == "weights") {
      if (!have_dim) throw std::runtime_error("model file: 'weights' before 'dim'");
      while (ls >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) throw std::runtime_error("model file: bad weight '" + tok + "'");
        const std::size_t idx = std::stoul(tok.substr(0, colon));
        if (idx == 0 || idx > model.dimension())
          throw std::runtime_error("model file: weight index out of range in '" + tok + "'");
        model.weights[static_cast<Eigen::Index>(idx - 1)] = parse_double(tok.substr(colon + 1));
      }
    } else if (key == "alphas") {
      while (ls >> tok) model.alphas.push_back(parse_double(tok));
    } else {
      throw std::runtime_error("model file: unknown key '" + key + "'");
    }
  }
  if (!have_dim) throw std::runtime_error("model file: missing 'dim'");
  return model;
}

}  // namespace alsvm
