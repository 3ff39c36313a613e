#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "alsvm/stopping.hpp"

using namespace alsvm;

namespace {

constexpr Label P = Label::Positive;
constexpr Label N = Label::Negative;

Dataset pool_of(std::size_t n) {
  std::vector<LabeledInstance> inst(n);
  for (std::size_t i = 0; i < n; ++i) inst[i].features = SparseVector({{0, static_cast<double>(i) - n / 2.0}});
  return Dataset(std::move(inst));
}

IndexList iota_list(std::size_t n) {
  IndexList out(n);
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

}  // namespace

TEST_CASE("kappa examples") {
  CHECK(agreement(std::vector{P, P, N, N}, std::vector{P, P, N, N}) == 1.0);
  CHECK(agreement(std::vector{P, P, P, P}, std::vector{P, P, N, N}) == 0.0);
  CHECK(agreement(std::vector{P, N}, std::vector{N, P}) == -1.0);
}

TEST_CASE("kappa degenerate marginals and errors") {
  CHECK(agreement(std::vector{N, N, N}, std::vector{N, N, N}) == 1.0);
  CHECK(agreement(std::vector{P, P}, std::vector{P, P}) == 1.0);
  // chance agreement 0 for opposite constant vectors
  CHECK(agreement(std::vector{N, N}, std::vector{P, P}) == 0.0);
  CHECK_THROWS_AS(agreement(std::vector{P}, std::vector{P, N}), std::invalid_argument);
  CHECK_THROWS_AS(agreement(std::vector<Label>{}, std::vector<Label>{}), std::invalid_argument);
}

TEST_CASE("kappa is at most 1 and equals 1 exactly for identical vectors") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<Label> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = (rng() % 4 == 0) ? P : N;
      b[i] = (rng() % 5 == 0) ? opposite(a[i]) : a[i];
    }
    const double k = agreement(a, b);
    CHECK(k <= 1.0 + 1e-12);
    CHECK((k == 1.0) == (a == b));
  }
}

TEST_CASE("init_stop_set draws a fixed-size deterministic sample") {
  const auto pool = pool_of(5000);
  const auto unl = iota_list(5000);
  StopConfig cfg;
  cfg.stop_set_size = 2000;
  cfg.seed = 9;
  const auto s = init_stop_set(pool, unl, cfg);
  CHECK(s.stop_set().size() == 2000);
  CHECK(std::set<Index>(s.stop_set().begin(), s.stop_set().end()).size() == 2000);
  CHECK(init_stop_set(pool, unl, cfg).stop_set() == s.stop_set());
  CHECK(s.recent_agreements().empty());
  CHECK_FALSE(s.previous_predictions().has_value());
  CHECK_FALSE(s.stopped());

  cfg.stop_set_size = 10000;
  const auto all = init_stop_set(pool, IndexList{3, 1, 4}, cfg);
  CHECK(all.stop_set() == IndexList{1, 3, 4});

  CHECK_THROWS_AS(init_stop_set(pool, IndexList{}, cfg), std::invalid_argument);
}

TEST_CASE("window rule over agreement scores") {
  StopConfig cfg;
  cfg.window = 3;
  cfg.agreement_threshold = 0.99;

  SUBCASE("three high scores stop") {
    StoppingState s;
    CHECK(observe_agreement(s, 0.995, 1, cfg) == StopSignal::Continue);
    CHECK(observe_agreement(s, 0.992, 2, cfg) == StopSignal::Continue);
    CHECK(observe_agreement(s, 0.999, 3, cfg) == StopSignal::Stop);
    CHECK(s.stopped_at() == 3u);
  }
  SUBCASE("one low score breaks the window") {
    StoppingState s;
    observe_agreement(s, 0.995, 1, cfg);
    observe_agreement(s, 0.98, 2, cfg);
    CHECK(observe_agreement(s, 0.995, 3, cfg) == StopSignal::Continue);
    CHECK_FALSE(s.stopped());
    observe_agreement(s, 0.996, 4, cfg);
    CHECK(observe_agreement(s, 0.997, 5, cfg) == StopSignal::Stop);
    CHECK(s.stopped_at() == 5u);
  }
  SUBCASE("stop latches") {
    StoppingState s;
    for (std::size_t i = 1; i <= 3; ++i) observe_agreement(s, 1.0, i, cfg);
    REQUIRE(s.stopped_at() == 3u);
    CHECK(observe_agreement(s, 0.1, 4, cfg) == StopSignal::Stop);
    CHECK(observe_agreement(s, -0.5, 5, cfg) == StopSignal::Stop);
    CHECK(s.stopped_at() == 3u);
  }
}

TEST_CASE("first prediction vector never stops and evidence needs window+1 models") {
  StopConfig cfg;
  cfg.window = 3;
  StoppingState s;
  const std::vector<Label> same = {P, N, N, P, N};
  CHECK(observe_predictions(s, same, 0, cfg) == StopSignal::Continue);
  CHECK(s.recent_agreements().empty());
  CHECK(observe_predictions(s, same, 1, cfg) == StopSignal::Continue);
  CHECK(observe_predictions(s, same, 2, cfg) == StopSignal::Continue);
  CHECK(observe_predictions(s, same, 3, cfg) == StopSignal::Stop);
  CHECK(s.models_observed() == 4);
  CHECK(s.stopped_at() == 3u);
}

TEST_CASE("update predicts the static stop set with the model") {
  const auto pool = pool_of(200);
  StopConfig cfg;
  cfg.stop_set_size = 50;
  cfg.window = 2;
  auto s = init_stop_set(pool, iota_list(200), cfg);
  const IndexList original = s.stop_set();

  SvmModel m;
  m.weights = Eigen::VectorXd::Constant(1, 1.0);
  m.bias = 0.0;
  for (std::size_t it = 0; it < 6; ++it) {
    update(s, m, pool, it, cfg);
    CHECK(s.stop_set() == original);
  }
  CHECK(s.stopped_at() == 2u);
  const auto& prev = *s.previous_predictions();
  for (std::size_t r = 0; r < original.size(); ++r)
    CHECK(prev[r] == predict(m, pool[original[r]].features));
}
