#include "alsvm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "alsvm/errors.hpp"

namespace alsvm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string percent_label(double pct) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, pct);
  return std::string(buf, ptr) + "%";
}

// First iteration whose labeled count reaches `pct` percent of the pool; the
// last iteration when none does.
const FoldPoint& at_checkpoint(const std::vector<FoldPoint>& points, double pct, std::size_t pool) {
  const double needed = pct / 100.0 * static_cast<double>(pool);
  for (const auto& p : points)
    if (static_cast<double>(p.labels_used) >= needed - 1e-9) return p;
  return points.back();
}

void fill_outcome(StrategyOutcome& out, const ExperimentConfig& config, std::size_t pool) {
  if (out.per_iteration.empty()) return;
  for (double pct : config.checkpoints) out.checkpoints.push_back(at_checkpoint(out.per_iteration, pct, pool));
  out.stop_fired = out.trace.stopped_at.has_value();
  const std::size_t stop_iter = out.trace.stopped_at.value_or(out.per_iteration.back().iteration);
  out.auto_stop = out.per_iteration.at(stop_iter);
}

FoldResult run_fold(const Dataset& data, const ExperimentConfig& config,
                    const std::vector<IndexList>& folds, std::size_t f) {
  FoldResult result;
  result.fold = f;
  const IndexList& test_idx = folds[f];
  IndexList train_idx;
  for (std::size_t g = 0; g < folds.size(); ++g)
    if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
  std::sort(train_idx.begin(), train_idx.end());

  const Dataset pool = data.subset(train_idx);
  const Dataset test = data.subset(test_idx);
  result.pool_size = pool.size();
  const std::size_t pos = count_positives(pool.instances());
  if (pos == 0 || pos == pool.size()) {
    result.skipped = true;
    result.skip_reason = "fold " + std::to_string(f) + " skipped: training portion has a single class";
    return result;
  }

  AlConfig al = config.al;
  const AlConfig scaled = AlConfig::defaults_for(pool.size());
  al.init_size = config.init_size.value_or(scaled.init_size);
  al.batch_size = config.batch_size.value_or(scaled.batch_size);
  al.seed = derive_seed(config.seed, f + 1, 1);
  al.halt_on_stop = false;
  StopConfig stop = config.stop;
  stop.seed = derive_seed(config.seed, f + 1, 2);

  for (Strategy strategy : {Strategy::ClosestInitPa, Strategy::Random}) {
    StrategyOutcome& out = strategy == Strategy::ClosestInitPa ? result.al : result.random;
    SimulatedOracle oracle(pool);
    try {
      out.trace = run(pool, al, oracle, stop, strategy,
                      [&](const IterationRecord& rec, const SvmModel& model) {
                        out.per_iteration.push_back(
                            {rec.iteration, rec.labeled_count, evaluate(model, test.instances())});
                      });
    } catch (const InitError& e) {
      result.skipped = true;
      result.skip_reason = "fold " + std::to_string(f) + " skipped: " + e.what();
      return result;
    }
    if (out.per_iteration.empty()) {
      result.skipped = true;
      result.skip_reason = "fold " + std::to_string(f) + " skipped: no model was trained";
      return result;
    }
    fill_outcome(out, config, pool.size());
  }
  return result;
}

CurveRow average_row(std::span<const FoldPoint* const> points, std::string checkpoint,
                     double pct, Strategy strategy, bool auto_stop) {
  CurveRow row;
  row.checkpoint = std::move(checkpoint);
  row.percent_of_pool = pct;
  row.strategy = strategy;
  row.auto_stop = auto_stop;
  if (points.empty()) return row;
  double labels = 0.0;
  for (const auto* p : points) {
    labels += static_cast<double>(p->labels_used);
    row.metrics.tp += p->metrics.tp;
    row.metrics.fp += p->metrics.fp;
    row.metrics.fn += p->metrics.fn;
    row.metrics.tn += p->metrics.tn;
    row.metrics.precision += p->metrics.precision;
    row.metrics.recall += p->metrics.recall;
    row.metrics.f1 += p->metrics.f1;
  }
  const double k = static_cast<double>(points.size());
  row.labels_used = static_cast<std::size_t>(std::llround(labels / k));
  row.metrics.precision /= k;
  row.metrics.recall /= k;
  row.metrics.f1 /= k;
  return row;
}

LearningCurve aggregate(const std::vector<FoldResult>& folds, const ExperimentConfig& config,
                        Strategy strategy) {
  LearningCurve curve;
  curve.strategy = strategy;
  auto outcome = [&](const FoldResult& fr) -> const StrategyOutcome& {
    return strategy == Strategy::ClosestInitPa ? fr.al : fr.random;
  };
  for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
    std::vector<const FoldPoint*> pts;
    for (const auto& fr : folds)
      if (!fr.skipped) pts.push_back(&outcome(fr).checkpoints[c]);
    curve.rows.push_back(average_row(pts, percent_label(config.checkpoints[c]),
                                     config.checkpoints[c], strategy, false));
  }
  std::vector<const FoldPoint*> pts;
  double pct = 0.0;
  for (const auto& fr : folds) {
    if (fr.skipped) continue;
    pts.push_back(&outcome(fr).auto_stop);
    pct += 100.0 * static_cast<double>(outcome(fr).auto_stop.labels_used) /
           static_cast<double>(fr.pool_size);
  }
  if (!pts.empty()) pct /= static_cast<double>(pts.size());
  curve.rows.push_back(average_row(pts, "AutoStopPoint", pct, strategy, true));
  return curve;
}

}  // namespace

Metrics evaluate(const SvmModel& model, std::span<const LabeledInstance> test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& inst : test) {
    const bool predicted_pos = predict(model, inst.features) == Label::Positive;
    const bool actual_pos = inst.label == Label::Positive;
    if (predicted_pos && actual_pos) ++tp;
    else if (predicted_pos) ++fp;
    else if (actual_pos) ++fn;
    else ++tn;
  }
  return f_measure(tp, fp, fn, tn);
}

// --- synthetic data ------------------------------------------------------------

void SynthConfig::validate() const {
  if (n < 10) throw std::invalid_argument("synthetic n must be >= 10");
  if (dim < 2) throw std::invalid_argument("synthetic dim must be >= 2");
  if (!(positive_rate > 0.0 && positive_rate < 1.0))
    throw std::invalid_argument("positive_rate must lie in (0, 1)");
  if (!(class_separation >= 0.0)) throw std::invalid_argument("class_separation must be >= 0");
  if (!(feature_density > 0.0 && feature_density <= 1.0))
    throw std::invalid_argument("feature_density must lie in (0, 1]");
}

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> p_pos(config.dim), p_neg(config.dim);
  for (std::size_t j = 0; j < config.dim; ++j) {
    const double base = std::min(1.0, config.feature_density * (0.5 + unit(rng)));
    const double direction = 2.0 * unit(rng) - 1.0;
    const double shift = config.class_separation * direction;
    p_pos[j] = std::clamp(base * std::exp(shift), 0.0, 1.0);
    p_neg[j] = std::clamp(base * std::exp(-shift), 0.0, 1.0);
  }

  const auto n_pos = static_cast<std::size_t>(
      std::llround(static_cast<double>(config.n) * config.positive_rate));
  std::vector<Label> labels(config.n, Label::Negative);
  std::fill_n(labels.begin(), n_pos, Label::Positive);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<LabeledInstance> instances;
  instances.reserve(config.n);
  for (Label y : labels) {
    const auto& probs = y == Label::Positive ? p_pos : p_neg;
    std::vector<Feature> entries;
    for (std::size_t j = 0; j < config.dim; ++j)
      if (unit(rng) < probs[j]) entries.push_back({j, 1.0});
    instances.push_back({SparseVector(std::move(entries)), y});
  }
  return Dataset(std::move(instances), config.dim);
}

// --- experiments ---------------------------------------------------------------

std::size_t ExperimentResult::folds_used() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(folds.begin(), folds.end(), [](const auto& f) { return !f.skipped; }));
}

ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& config) {
  for (double pct : config.checkpoints)
    if (!(pct > 0.0 && pct <= 100.0))
      throw std::invalid_argument("checkpoints must lie in (0, 100]");
  const auto folds = split_folds(data, config.folds, derive_seed(config.seed, 0));

  std::size_t threads = config.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, folds.size());

  ExperimentResult result;
  result.folds.resize(folds.size());
  if (threads <= 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) result.folds[f] = run_fold(data, config, folds, f);
  } else {
    for (std::size_t start = 0; start < folds.size(); start += threads) {
      std::vector<std::future<FoldResult>> work;
      for (std::size_t f = start; f < std::min(folds.size(), start + threads); ++f)
        work.push_back(std::async(std::launch::async,
                                  [&, f] { return run_fold(data, config, folds, f); }));
      for (std::size_t w = 0; w < work.size(); ++w) result.folds[start + w] = work[w].get();
    }
  }

  for (const auto& fr : result.folds)
    if (fr.skipped) result.warnings.push_back(fr.skip_reason);
  result.al = aggregate(result.folds, config, Strategy::ClosestInitPa);
  result.random = aggregate(result.folds, config, Strategy::Random);
  return result;
}

Dataset binarize(const Dataset& data, std::span<const int> categories, int category) {
  if (categories.size() != data.size())
    throw std::invalid_argument("one category per instance required");
  return data.relabeled([&](std::size_t i, const LabeledInstance&) {
    return categories[i] == category ? Label::Positive : Label::Negative;
  });
}

OneVsRestResult one_vs_rest(const Dataset& data, std::span<const int> categories,
                            const ExperimentConfig& config, std::vector<int> requested) {
  if (categories.size() != data.size())
    throw std::invalid_argument("one category per instance required");
  std::map<int, std::size_t> counts;
  for (int c : categories) ++counts[c];
  if (counts.size() < 2)
    throw std::invalid_argument("one-vs-rest needs at least two categories (the rest class is empty)");
  if (requested.empty())
    for (const auto& [c, n] : counts) requested.push_back(c);
  for (int c : requested)
    if (counts.count(c) == 0)
      throw std::invalid_argument("category " + std::to_string(c) + " has no instances");

  OneVsRestResult out;
  out.categories = requested;
  for (int c : requested) out.per_category.push_back(run_experiment(binarize(data, categories, c), config));

  auto macro = [&](Strategy s) {
    LearningCurve curve;
    curve.strategy = s;
    const auto& first = s == Strategy::ClosestInitPa ? out.per_category[0].al : out.per_category[0].random;
    for (std::size_t r = 0; r < first.rows.size(); ++r) {
      CurveRow row = first.rows[r];
      row.metrics = Metrics{};
      double labels = 0.0, pct = 0.0;
      for (const auto& res : out.per_category) {
        const auto& src = (s == Strategy::ClosestInitPa ? res.al : res.random).rows[r];
        labels += static_cast<double>(src.labels_used);
        pct += src.percent_of_pool;
        row.metrics.tp += src.metrics.tp;
        row.metrics.fp += src.metrics.fp;
        row.metrics.fn += src.metrics.fn;
        row.metrics.tn += src.metrics.tn;
        row.metrics.precision += src.metrics.precision;
        row.metrics.recall += src.metrics.recall;
        row.metrics.f1 += src.metrics.f1;
      }
      const double k = static_cast<double>(out.per_category.size());
      row.labels_used = static_cast<std::size_t>(std::llround(labels / k));
      row.percent_of_pool = pct / k;
      row.metrics.precision /= k;
      row.metrics.recall /= k;
      row.metrics.f1 /= k;
      curve.rows.push_back(row);
    }
    return curve;
  };
  out.macro_al = macro(Strategy::ClosestInitPa);
  out.macro_random = macro(Strategy::Random);
  return out;
}

// --- output ---------------------------------------------------------------------

void write_curves(std::ostream& out, const LearningCurve& al, const LearningCurve& random) {
  out << "checkpoint,labels_used,strategy,precision,recall,f1,auto_stop\n";
  const std::size_t rows = std::max(al.rows.size(), random.rows.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (const LearningCurve* curve : {&al, &random}) {
      if (r >= curve->rows.size()) continue;
      const auto& row = curve->rows[r];
      out << row.checkpoint << ',' << row.labels_used << ',' << to_string(row.strategy) << ','
          << fixed4(row.metrics.precision) << ',' << fixed4(row.metrics.recall) << ','
          << fixed4(row.metrics.f1) << ',' << (row.auto_stop ? 1 : 0) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed to write curve CSV");
}

std::vector<CurveRow> read_curves(std::istream& in) {
  std::vector<CurveRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw ParseError(line_no, "expected 7 CSV fields");
    CurveRow row;
    try {
      row.checkpoint = cells[0];
      row.labels_used = std::stoul(cells[1]);
      if (cells[2] == "AL") row.strategy = Strategy::ClosestInitPa;
      else if (cells[2] == "Random") row.strategy = Strategy::Random;
      else throw ParseError(line_no, "unknown strategy '" + cells[2] + "'");
      row.metrics.precision = std::stod(cells[3]);
      row.metrics.recall = std::stod(cells[4]);
      row.metrics.f1 = std::stod(cells[5]);
      row.auto_stop = cells[6] == "1";
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "malformed CSV row");
    }
    if (row.checkpoint != "AutoStopPoint" && !row.checkpoint.empty() && row.checkpoint.back() == '%')
      row.percent_of_pool = std::stod(row.checkpoint.substr(0, row.checkpoint.size() - 1));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_traces(std::ostream& out, const ExperimentResult& result) {
  for (const auto& fr : result.folds) {
    if (fr.skipped) continue;
    write_trace(out, fr.al.trace, {{"fold", static_cast<long long>(fr.fold)}});
    write_trace(out, fr.random.trace, {{"fold", static_cast<long long>(fr.fold)}});
  }
}

}  // namespace alsvm
