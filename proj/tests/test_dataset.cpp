#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "alsvm/dataset.hpp"
#include "alsvm/errors.hpp"

using namespace alsvm;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

}  // namespace

TEST_CASE("parse_libsvm reads labels and converts indices to 0-based") {
  const auto d = parse_libsvm("+1 3:1 7:1\n-1 1:1");
  REQUIRE(d.size() == 2);
  CHECK(d[0].label == Label::Positive);
  CHECK(d[1].label == Label::Negative);
  const auto e = d[0].features.entries();
  REQUIRE(e.size() == 2);
  CHECK(e[0] == Feature{2, 1.0});
  CHECK(e[1] == Feature{6, 1.0});
  CHECK(d.dimension() == 7);
}

TEST_CASE("parse_libsvm accepts a bare 1 as the positive label and skips blank lines") {
  const auto d = parse_libsvm("1 2:0.5\n\n   \n-1\n");
  REQUIRE(d.size() == 2);
  CHECK(d[0].label == Label::Positive);
  CHECK(d[1].features.empty());
}

TEST_CASE("parse_libsvm of empty input") {
  const auto d = parse_libsvm("");
  CHECK(d.empty());
  CHECK(d.dimension() == 0);
}

TEST_CASE("parse_libsvm errors carry the line number") {
  SUBCASE("non-increasing indices") {
    try {
      parse_libsvm("+1 1:1\n+1 7:1 3:1");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("duplicate index") { CHECK_THROWS_AS(parse_libsvm("+1 3:1 3:2"), ParseError); }
  SUBCASE("bad label") { CHECK_THROWS_AS(parse_libsvm("2 1:1"), ParseError); }
  SUBCASE("missing colon") { CHECK_THROWS_AS(parse_libsvm("+1 4"), ParseError); }
  SUBCASE("zero index") { CHECK_THROWS_AS(parse_libsvm("+1 0:1"), ParseError); }
  SUBCASE("bad value") { CHECK_THROWS_AS(parse_libsvm("-1 2:abc"), ParseError); }
}

TEST_CASE("explicit zeros are not stored") {
  const auto d = parse_libsvm("+1 1:0 2:3");
  REQUIRE(d[0].features.nnz() == 1);
  CHECK(d[0].features.entries()[0].index == 1);
}

TEST_CASE("SparseVector rejects unordered entries") {
  CHECK_THROWS_AS(SparseVector({{3, 1.0}, {1, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SparseVector({{1, 1.0}, {1, 2.0}}), std::invalid_argument);
}

TEST_CASE("LIBSVM write/parse round-trips random datasets") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<LabeledInstance> inst;
    for (int i = 0; i < 20; ++i) {
      std::vector<Feature> f;
      for (Index j = 0; j < 30; ++j)
        if (coin(rng)) f.push_back({j, val(rng)});
      inst.push_back({SparseVector(std::move(f)), coin(rng) ? Label::Positive : Label::Negative});
    }
    const Dataset d(std::move(inst));
    CHECK(parse_libsvm(to_libsvm(d)) == d);
  }
}

TEST_CASE("build_vocabulary applies the min-count threshold") {
  const std::vector<std::vector<std::string>> docs = {
      words({"the", "protein", "rare"}), words({"the", "protein", "the"}),
      words({"protein", "rare", "the"}), words({"the"})};
  const auto v = build_vocabulary(docs, 3);
  CHECK(v.size() == 2);
  CHECK(v.contains("the"));
  CHECK(v.contains("protein"));
  CHECK_FALSE(v.contains("rare"));
  // first-occurrence order
  CHECK(*v.find("the") == 0);
  CHECK(*v.find("protein") == 1);
  for (const auto& tok : v.tokens()) CHECK(v.find(tok).has_value());
}

TEST_CASE("build_vocabulary with min_count 1 keeps every token; empty corpus is empty") {
  const std::vector<std::vector<std::string>> docs = {words({"a", "b"}), words({"c", "a"})};
  CHECK(build_vocabulary(docs, 1).size() == 3);
  CHECK(build_vocabulary(std::vector<std::vector<std::string>>{}, 3).empty());
  CHECK_THROWS_AS(build_vocabulary(docs, 0), std::invalid_argument);
}

TEST_CASE("vectorize produces binary features") {
  const std::vector<std::vector<std::string>> docs = {
      words({"protein", "the"}), words({"protein", "the", "the"}), words({"protein", "the", "x"})};
  const auto v = build_vocabulary(docs, 3);
  const auto x = vectorize(words({"the", "the", "protein"}), v);
  REQUIRE(x.nnz() == 2);
  CHECK(x.entries()[0] == Feature{*v.find("protein"), 1.0});
  CHECK(x.entries()[1] == Feature{*v.find("the"), 1.0});
  CHECK(vectorize(words({"x", "unknown"}), v).empty());
  CHECK(vectorize(std::vector<std::string>{}, v).empty());
}

TEST_CASE("vectorize ignores token order and repetition") {
  const std::vector<std::vector<std::string>> docs = {words({"a", "b", "c", "d", "e"})};
  const auto v = build_vocabulary(docs, 1);
  std::vector<std::string> doc = words({"e", "a", "c", "a", "zz"});
  const auto base = vectorize(doc, v);
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto shuffled = doc;
    shuffled.push_back(doc[static_cast<std::size_t>(t) % doc.size()]);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(vectorize(shuffled, v) == base);
  }
}

TEST_CASE("parse_corpus reads labels and tokens") {
  std::istringstream in("+1 protein binds\n-1 the cell\n\n");
  const auto c = parse_corpus(in);
  REQUIRE(c.docs.size() == 2);
  CHECK(c.labels[0] == Label::Positive);
  CHECK(c.docs[1] == words({"the", "cell"}));
  std::istringstream bad("+1 ok\nmaybe words\n");
  try {
    parse_corpus(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("split_folds examples") {
  const auto folds = split_folds(100, 10, 42);
  REQUIRE(folds.size() == 10);
  std::set<Index> all;
  for (const auto& f : folds) {
    CHECK(f.size() == 10);
    all.insert(f.begin(), f.end());
  }
  CHECK(all.size() == 100);
  CHECK(*all.rbegin() == 99);
  CHECK(split_folds(100, 10, 42) == folds);
  CHECK(split_folds(100, 10, 43) != folds);

  const auto small = split_folds(10, 3, 1);
  CHECK(small[0].size() == 4);
  CHECK(small[1].size() == 3);
  CHECK(small[2].size() == 3);

  CHECK_THROWS_AS(split_folds(10, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_folds(10, 11, 0), std::invalid_argument);
}

TEST_CASE("split_folds partitions for random n and k") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    const std::size_t k = 2 + rng() % (n - 1);
    const auto folds = split_folds(n, k, rng());
    std::vector<int> seen(n, 0);
    std::size_t lo = n, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (Index i : f) ++seen[i];
    }
    CHECK(hi - lo <= 1);
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("class_balance") {
  std::vector<LabeledInstance> inst(1000);
  for (std::size_t i = 0; i < 176; ++i) inst[i].label = Label::Positive;
  CHECK(class_balance(Dataset(inst)) == doctest::Approx(0.176));
  for (auto& x : inst) x.label = Label::Positive;
  CHECK(class_balance(Dataset(inst)) == 1.0);
  for (auto& x : inst) x.label = Label::Negative;
  CHECK(class_balance(Dataset(inst)) == 0.0);
  CHECK_THROWS_AS(class_balance(Dataset{}), std::invalid_argument);
}

TEST_CASE("sparse_dot") {
  Eigen::VectorXd w(2);
  w << 2, -1;
  CHECK(sparse_dot(SparseVector({{0, 1}, {1, 2}}), w) == 0.0);
  CHECK(sparse_dot(SparseVector{}, w) == 0.0);
  Eigen::VectorXd w4(4);
  w4 << 0, 0, 0, 5;
  CHECK(sparse_dot(SparseVector({{3, 1}}), w4) == 5.0);
  CHECK_THROWS_AS(sparse_dot(SparseVector({{4, 1}}), w4), std::invalid_argument);
  CHECK(sparse_dot(SparseVector({{0, 1}, {3, 2}}), SparseVector({{3, 4}, {5, 1}})) == 8.0);
}

TEST_CASE("Dataset texts are optional and one per instance") {
  std::vector<LabeledInstance> inst(2);
  CHECK_FALSE(Dataset(inst).has_texts());
  CHECK(Dataset(inst).text(1).empty());
  const Dataset d(inst, 0, {"first", "second"});
  CHECK(d.text(1) == "second");
  CHECK(d.subset(std::vector<Index>{1}).text(0) == "second");
  CHECK_THROWS_AS(Dataset(inst, 0, {"only one"}), std::invalid_argument);
}
