#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include "alsvm/active_learner.hpp"
#include "alsvm/errors.hpp"
#include "alsvm/harness.hpp"

using namespace alsvm;

namespace {

Dataset synthetic_pool(std::size_t n, std::uint64_t seed, double rate = 0.176) {
  SynthConfig sc;
  sc.n = n;
  sc.seed = seed;
  sc.positive_rate = rate;
  return generate_synthetic(sc);
}

Dataset line_pool(std::initializer_list<double> xs) {
  std::vector<LabeledInstance> inst;
  for (double x : xs) inst.push_back({SparseVector({{0, x}, {1, 0.0}}), x > 0 ? Label::Positive : Label::Negative});
  return Dataset(std::move(inst), 2);
}

// Fails once `limit` labels have been handed out.
class FlakyOracle final : public Oracle {
 public:
  FlakyOracle(const Dataset& gold, std::size_t limit) : gold_(gold), limit_(limit) {}
  Label label(Index i) override {
    if (served_++ >= limit_) throw OracleError("annotator went home");
    return gold_.label(i);
  }

 private:
  SimulatedOracle gold_;
  std::size_t limit_;
  std::size_t served_ = 0;
};

AlConfig small_config(std::uint64_t seed = 1) {
  AlConfig c;
  c.init_size = 50;
  c.batch_size = 20;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("draw_init_set is a deterministic sample of distinct indices") {
  const auto pool = synthetic_pool(1000, 3);
  SimulatedOracle o1(pool), o2(pool);
  const auto a = draw_init_set(pool, 50, 77, o1);
  const auto b = draw_init_set(pool, 50, 77, o2);
  CHECK(a == b);
  CHECK(a.size() == 50);
  std::set<Index> distinct;
  for (const auto& [i, y] : a) {
    distinct.insert(i);
    CHECK(y == pool[i].label);
  }
  CHECK(distinct.size() == 50);
  CHECK(o1.queries() == 50);
}

TEST_CASE("draw_init_set extends until both classes are present") {
  std::vector<LabeledInstance> inst(40);
  inst[17].label = Label::Positive;
  const Dataset pool(inst, 1);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SimulatedOracle o(pool);
    try {
      const auto init = draw_init_set(pool, 2, seed, o);
      CHECK(std::any_of(init.begin(), init.end(), [](const auto& p) { return p.first == 17; }));
      CHECK(init.size() <= 10);
    } catch (const InitError&) {
      CHECK(o.queries() == 10);
    }
  }
  const Dataset all_neg(std::vector<LabeledInstance>(10), 1);
  SimulatedOracle o(all_neg);
  CHECK_THROWS_AS(draw_init_set(all_neg, 5, 0, o), InitError);
}

TEST_CASE("draw_init_set with init_size equal to the pool labels everything") {
  const auto pool = synthetic_pool(60, 2);
  SimulatedOracle o(pool);
  CHECK(draw_init_set(pool, 60, 1, o).size() == 60);
  CHECK_THROWS_AS(draw_init_set(pool, 61, 1, o), std::invalid_argument);
}

TEST_CASE("estimate_pa returns the smallest grid value when every candidate is perfect") {
  const auto pool = line_pool({-3, -2.5, -2, -1.5, -1, 1, 1.5, 2, 2.5, 3});
  AlConfig c;
  c.pa_grid = {2, 1, 5};
  const auto est = estimate_pa(pool.instances(), c);
  CHECK_FALSE(est.fallback);
  CHECK(est.pa == 1.0);
  for (const auto& [cand, f] : est.scores) CHECK(f == 1.0);
}

TEST_CASE("estimate_pa falls back to the class ratio on degenerate folds") {
  std::vector<LabeledInstance> inst;
  for (int i = 0; i < 45; ++i) inst.push_back({SparseVector({{0, -1.0 - i * 0.01}}), Label::Negative});
  for (int i = 0; i < 5; ++i) inst.push_back({SparseVector({{0, 1.0 + i * 0.01}}), Label::Positive});
  AlConfig c;
  c.pa_cv_folds = 10;  // at most 5 folds can hold a positive
  const auto est = estimate_pa(inst, c);
  CHECK(est.fallback);
  CHECK(est.pa == 9.0);

  std::vector<LabeledInstance> one_class(inst.begin(), inst.begin() + 45);
  CHECK_THROWS_AS(estimate_pa(one_class, c), std::invalid_argument);
}

TEST_CASE("select_batch picks the points closest to the hyperplane") {
  const auto pool = line_pool({0.1, 2.0, -0.5});
  SvmModel m;
  m.weights = Eigen::Vector2d(1, 0);
  m.bias = 0.0;
  const IndexList all{0, 1, 2};
  CHECK(select_batch(m, pool, all, 1) == IndexList{0});
  CHECK(select_batch(m, pool, all, 10) == IndexList{0, 2, 1});

  const auto ties = line_pool({0.5, -0.5, 0.5});
  CHECK(select_batch(m, ties, IndexList{2, 1, 0}, 2) == IndexList{0, 1});

  CHECK_THROWS_AS(select_batch(m, pool, IndexList{}, 1), std::invalid_argument);
}

TEST_CASE("select_batch dominance on random models") {
  const auto pool = synthetic_pool(300, 5);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    SvmModel m;
    m.weights = Eigen::VectorXd(static_cast<Eigen::Index>(pool.dimension()));
    for (auto& w : m.weights) w = g(rng);
    m.bias = g(rng);
    IndexList unl;
    for (Index i = 0; i < pool.size(); ++i)
      if (rng() % 3) unl.push_back(i);
    const auto batch = select_batch(m, pool, unl, 15);
    REQUIRE(batch.size() == 15);
    double worst_in = 0.0;
    for (Index i : batch) worst_in = std::max(worst_in, std::abs(decision_value(m, pool[i].features)));
    for (Index i : unl)
      if (std::find(batch.begin(), batch.end(), i) == batch.end())
        CHECK(std::abs(decision_value(m, pool[i].features)) >= worst_in);
  }
}

TEST_CASE("select_random") {
  IndexList unl{4, 8, 15, 16, 23, 42};
  CHECK(select_random(unl, 3, 5, 2) == select_random(unl, 3, 5, 2));
  CHECK(select_random(unl, 3, 5, 2) != select_random(unl, 3, 5, 3));
  auto all = select_random(unl, 6, 5, 0);
  CHECK(all.size() == 6);
  std::sort(all.begin(), all.end());
  CHECK(all == unl);
  const auto one = select_random(unl, 1, 9, 9);
  REQUIRE(one.size() == 1);
  CHECK(std::find(unl.begin(), unl.end(), one[0]) != unl.end());
  CHECK_THROWS_AS(select_random(IndexList{}, 1, 0, 0), std::invalid_argument);
}

TEST_CASE("run: labeled count grows by the batch size and queries never repeat") {
  const auto pool = synthetic_pool(1000, 11);
  SimulatedOracle oracle(pool);
  auto cfg = small_config();
  cfg.max_iterations = 12;
  ActiveLearner learner(pool, cfg, StopConfig{}, Strategy::ClosestInitPa);
  while (learner.phase() == ActiveLearner::Phase::AwaitingLabels ||
         learner.phase() == ActiveLearner::Phase::ReadyToTrain) {
    if (learner.phase() == ActiveLearner::Phase::AwaitingLabels)
      for (Index i : learner.pending()) learner.provide_label(i, oracle.label(i));
    else
      learner.advance();
    const auto& st = learner.pool_state();
    const std::size_t awaiting = learner.pending().size();
    CHECK(st.labeled_count() + st.unlabeled_count() + awaiting == pool.size());
  }
  const auto& tr = learner.trace();
  REQUIRE(tr.iterations.size() == 12);
  for (const auto& rec : tr.iterations) CHECK(rec.labeled_count == 50 + 20 * rec.iteration);

  std::set<Index> seen;
  std::size_t total = 0;
  for (const auto& q : learner.pool_state().query_log()) {
    seen.insert(q.indices.begin(), q.indices.end());
    total += q.indices.size();
  }
  CHECK(seen.size() == total);
  CHECK(learner.phase() == ActiveLearner::Phase::Completed);
}

TEST_CASE("run: PA is estimated once and carried by every iteration") {
  const auto pool = synthetic_pool(600, 12, 0.1);
  SimulatedOracle oracle(pool);
  auto cfg = small_config(3);
  cfg.max_iterations = 8;
  const auto tr = run(pool, cfg, oracle, StopConfig{}, Strategy::ClosestInitPa);
  REQUIRE(tr.pa.has_value());
  for (const auto& rec : tr.iterations) CHECK(rec.pa == *tr.pa);
}

TEST_CASE("run is fully deterministic for both strategies") {
  const auto pool = synthetic_pool(500, 13);
  for (Strategy s : {Strategy::Random, Strategy::ClosestInitPa}) {
    SimulatedOracle o1(pool), o2(pool);
    auto cfg = small_config(21);
    cfg.max_iterations = 10;
    const auto a = run(pool, cfg, o1, StopConfig{}, s);
    const auto b = run(pool, cfg, o2, StopConfig{}, s);
    CHECK(a == b);
    CHECK(trace_to_string(a) == trace_to_string(b));
  }
}

TEST_CASE("passive limit: init set equal to the pool trains one model on everything") {
  const auto pool = synthetic_pool(120, 14);
  SimulatedOracle oracle(pool);
  auto cfg = small_config(4);
  cfg.init_size = pool.size();
  SvmModel last;
  const auto tr = run(pool, cfg, oracle, StopConfig{}, Strategy::ClosestInitPa,
                      [&](const IterationRecord&, const SvmModel& m) { last = m; });
  REQUIRE(tr.iterations.size() == 1);
  const auto direct = train(pool.instances(), TrainConfig{cfg.c_minus, *tr.pa, cfg.tolerance}, pool.dimension());
  CHECK(last.weights == direct.weights);
  CHECK(last.bias == direct.bias);
}

TEST_CASE("oracle failure aborts the run and keeps the partial trace") {
  const auto pool = synthetic_pool(400, 15);
  FlakyOracle oracle(pool, 50 + 20 * 3 + 5);
  const auto tr = run(pool, small_config(), oracle, StopConfig{}, Strategy::ClosestInitPa);
  CHECK(tr.abort_reason.has_value());
  CHECK(tr.iterations.size() == 4);
}

TEST_CASE("halt_on_stop ends the run at the stop iteration") {
  const auto pool = synthetic_pool(800, 16);
  auto cfg = small_config(5);
  StopConfig stop;
  stop.agreement_threshold = 0.5;
  stop.window = 1;
  cfg.halt_on_stop = true;
  SimulatedOracle oracle(pool);
  ActiveLearner learner(pool, cfg, stop, Strategy::ClosestInitPa);
  while (learner.phase() == ActiveLearner::Phase::AwaitingLabels ||
         learner.phase() == ActiveLearner::Phase::ReadyToTrain) {
    if (learner.phase() == ActiveLearner::Phase::AwaitingLabels)
      for (Index i : learner.pending()) learner.provide_label(i, oracle.label(i));
    else
      learner.advance();
  }
  CHECK(learner.phase() == ActiveLearner::Phase::Stopped);
  REQUIRE(learner.trace().stopped_at.has_value());
  CHECK(learner.trace().iterations.size() == *learner.trace().stopped_at + 1);
  CHECK(learner.trace().iterations.back().selected.empty());

  // without halting the run continues to exhaustion
  cfg.halt_on_stop = false;
  SimulatedOracle o2(pool);
  const auto full = run(pool, cfg, o2, stop, Strategy::ClosestInitPa);
  CHECK(full.iterations.back().labeled_count == pool.size());
  CHECK(full.stopped_at == learner.trace().stopped_at);
}

TEST_CASE("ActiveLearner rejects labels for indices that are not pending") {
  const auto pool = synthetic_pool(200, 17);
  ActiveLearner learner(pool, small_config(), StopConfig{}, Strategy::ClosestInitPa);
  const auto pending = learner.pending();
  REQUIRE(pending.size() == 50);
  IndexList outside;
  for (Index i = 0; i < pool.size() && outside.empty(); ++i)
    if (std::find(pending.begin(), pending.end(), i) == pending.end()) outside.push_back(i);
  CHECK_THROWS_AS(learner.provide_label(outside[0], Label::Positive), std::invalid_argument);
  learner.provide_label(pending[0], pool[pending[0]].label);
  CHECK_THROWS_AS(learner.provide_label(pending[0], pool[pending[0]].label), std::invalid_argument);
  CHECK_THROWS_AS(learner.advance(), std::logic_error);
  CHECK_THROWS_AS(ActiveLearner(pool, [] { auto c = small_config(); c.init_size = 201; return c; }(),
                                StopConfig{}, Strategy::Random),
                  std::invalid_argument);
}

TEST_CASE("ExternalOracle hands labels across threads") {
  ExternalOracle oracle;
  Label got = Label::Negative;
  std::thread asker([&] { got = oracle.label(7); });
  while (oracle.waiting().empty()) std::this_thread::yield();
  CHECK(oracle.waiting() == IndexList{7});
  oracle.supply(7, Label::Positive);
  asker.join();
  CHECK(got == Label::Positive);

  std::thread blocked([&] { CHECK_THROWS_AS(oracle.label(8), OracleError); });
  while (oracle.waiting().empty()) std::this_thread::yield();
  oracle.cancel();
  blocked.join();
}

TEST_CASE("AlConfig defaults scale with the pool") {
  CHECK(AlConfig::defaults_for(1000).init_size == 50);
  CHECK(AlConfig::defaults_for(1000).batch_size == 10);
  CHECK(AlConfig::defaults_for(20000).init_size == 200);
  CHECK(AlConfig::defaults_for(20000).batch_size == 200);
  AlConfig bad;
  bad.pa_grid.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
