#include "alsvm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "alsvm/errors.hpp"

namespace alsvm {

Label label_from_int(int value) {
  if (value == 1) return Label::Positive;
  if (value == -1) return Label::Negative;
  throw std::invalid_argument("label must be +1 or -1, got " + std::to_string(value));
}

SparseVector::SparseVector(std::vector<Feature> entries) {
  entries_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].index <= entries[i - 1].index)
      throw std::invalid_argument("sparse vector indices must be strictly increasing");
    if (entries[i].value != 0.0) entries_.push_back(entries[i]);
  }
}

double SparseVector::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& f : entries_) s += f.value * f.value;
  return s;
}

double sparse_dot(const SparseVector& x, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (x.extent() > static_cast<std::size_t>(w.size()))
    throw std::invalid_argument("feature index " + std::to_string(x.extent() - 1) +
                                " outside weight vector of length " + std::to_string(w.size()));
  double s = 0.0;
  for (const auto& f : x) s += f.value * w[static_cast<Eigen::Index>(f.index)];
  return s;
}

double sparse_dot(const SparseVector& a, const SparseVector& b) noexcept {
  auto ia = a.begin(), ib = b.begin();
  double s = 0.0;
  while (ia != a.end() && ib != b.end()) {
    if (ia->index == ib->index) {
      s += ia->value * ib->value;
      ++ia;
      ++ib;
    } else if (ia->index < ib->index) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return s;
}

Dataset::Dataset(std::vector<LabeledInstance> instances, std::size_t dimension,
                 std::vector<std::string> texts)
    : instances_(std::move(instances)), dimension_(dimension), texts_(std::move(texts)) {
  if (!texts_.empty() && texts_.size() != instances_.size())
    throw std::invalid_argument("display texts must be absent or one per instance");
  for (const auto& inst : instances_) dimension_ = std::max(dimension_, inst.features.extent());
}

std::string_view Dataset::text(Index i) const {
  if (texts_.empty()) return {};
  return texts_.at(i);
}

Dataset Dataset::subset(std::span<const Index> indices) const {
  std::vector<LabeledInstance> out;
  std::vector<std::string> texts;
  out.reserve(indices.size());
  for (Index i : indices) {
    out.push_back(instances_.at(i));
    if (!texts_.empty()) texts.push_back(texts_[i]);
  }
  return Dataset(std::move(out), dimension_, std::move(texts));
}

// --- LIBSVM ----------------------------------------------------------------

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Label parse_label_token(std::string_view tok, std::size_t line) {
  if (tok == "+1" || tok == "1") return Label::Positive;
  if (tok == "-1") return Label::Negative;
  throw ParseError(line, "invalid label '" + std::string(tok) + "'");
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  std::vector<LabeledInstance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    LabeledInstance inst;
    inst.label = parse_label_token(toks[0], line_no);
    std::vector<Feature> entries;
    entries.reserve(toks.size() - 1);
    for (std::size_t t = 1; t < toks.size(); ++t) {
      auto colon = toks[t].find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(toks[t]) + "'");
      std::size_t idx = 0;
      double val = 0.0;
      if (!parse_number(toks[t].substr(0, colon), idx) || idx == 0)
        throw ParseError(line_no, "invalid feature index in '" + std::string(toks[t]) + "'");
      if (!parse_number(toks[t].substr(colon + 1), val))
        throw ParseError(line_no, "invalid feature value in '" + std::string(toks[t]) + "'");
      if (!entries.empty() && idx - 1 <= entries.back().index)
        throw ParseError(line_no, "feature indices must be strictly increasing");
      entries.push_back({idx - 1, val});
    }
    inst.features = SparseVector(std::move(entries));
    instances.push_back(std::move(inst));
  }
  return Dataset(std::move(instances));
}

Dataset parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const Dataset& data) { out << to_libsvm(data); }

std::string to_libsvm(const Dataset& data) {
  std::string out;
  for (const auto& inst : data.instances()) {
    out += inst.label == Label::Positive ? "+1" : "-1";
    for (const auto& f : inst.features) {
      out += ' ';
      out += std::to_string(f.index + 1);
      out += ':';
      append_double(out, f.value);
    }
    out += '\n';
  }
  return out;
}

// --- corpus and vocabulary ---------------------------------------------------

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    corpus.labels.push_back(parse_label_token(toks[0], line_no));
    corpus.docs.emplace_back(toks.begin() + 1, toks.end());
  }
  return corpus;
}

std::optional<Index> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> docs, int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> first_seen;
  for (const auto& doc : docs)
    for (const auto& tok : doc)
      if (counts[tok]++ == 0) first_seen.push_back(tok);

  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (auto& tok : first_seen) {
    if (counts[tok] < min_count) continue;
    vocab.index_.emplace(tok, vocab.tokens_.size());
    vocab.tokens_.push_back(std::move(tok));
  }
  return vocab;
}

SparseVector vectorize(std::span<const std::string> doc, const Vocabulary& vocab) {
  std::vector<Index> present;
  for (const auto& tok : doc)
    if (auto idx = vocab.find(tok)) present.push_back(*idx);
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  std::vector<Feature> entries;
  entries.reserve(present.size());
  for (Index i : present) entries.push_back({i, 1.0});
  return SparseVector(std::move(entries));
}

// --- folds -----------------------------------------------------------------

std::vector<IndexList> split_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n)
    throw std::invalid_argument("fold count " + std::to_string(k) + " out of range for " +
                                std::to_string(n) + " instances");
  IndexList perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<IndexList> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t len = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                    perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(folds[f].begin(), folds[f].end());
    pos += len;
  }
  return folds;
}

std::vector<IndexList> split_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  return split_folds(data.size(), k, seed);
}

std::size_t count_positives(std::span<const LabeledInstance> data) noexcept {
  return static_cast<std::size_t>(std::count_if(
      data.begin(), data.end(), [](const auto& inst) { return inst.label == Label::Positive; }));
}

double class_balance(const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("class_balance of an empty dataset");
  return static_cast<double>(count_positives(data.instances())) / static_cast<double>(data.size());
}

}  // namespace alsvm
