#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace alsvm {

using Index = std::size_t;
using IndexList = std::vector<Index>;

/// Class label. Only +1 and -1 are valid.
enum class Label : int { Negative = -1, Positive = +1 };

inline int sign_of(Label y) noexcept { return static_cast<int>(y); }
inline Label opposite(Label y) noexcept {
  return y == Label::Positive ? Label::Negative : Label::Positive;
}
/// Throws std::invalid_argument unless `value` is +1 or -1.
Label label_from_int(int value);

struct Feature {
  Index index;
  double value;

  friend bool operator==(const Feature&, const Feature&) = default;
};

/// Sparse feature vector: entries strictly increasing by index, no stored zeros.
class SparseVector {
 public:
  SparseVector() = default;

  /// Validates ordering (throws std::invalid_argument on a non-increasing
  /// index) and drops explicit zeros.
  explicit SparseVector(std::vector<Feature> entries);

  std::span<const Feature> entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  /// 1 + largest stored index, 0 when empty.
  std::size_t extent() const noexcept { return entries_.empty() ? 0 : entries_.back().index + 1; }
  double squared_norm() const noexcept;

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<Feature> entries_;
};

/// Σ value·w[index]. Throws std::invalid_argument if an index is outside `w`.
double sparse_dot(const SparseVector& x, const Eigen::Ref<const Eigen::VectorXd>& w);
double sparse_dot(const SparseVector& a, const SparseVector& b) noexcept;

struct LabeledInstance {
  SparseVector features;
  Label label = Label::Negative;

  friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

/// Immutable collection of labeled instances with an optional display text
/// per instance (used by the annotation service).
class Dataset {
 public:
  Dataset() = default;
  /// `dimension` is raised to 1 + max index if smaller. `texts` must be
  /// empty or have one entry per instance.
  explicit Dataset(std::vector<LabeledInstance> instances, std::size_t dimension = 0,
                   std::vector<std::string> texts = {});

  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }
  std::span<const LabeledInstance> instances() const noexcept { return instances_; }
  const LabeledInstance& operator[](Index i) const { return instances_[i]; }
  bool has_texts() const noexcept { return !texts_.empty(); }
  /// Display text for instance `i`, empty when the dataset carries none.
  std::string_view text(Index i) const;

  /// Same features, every label mapped through `relabel`.
  template <typename F>
  Dataset relabeled(F&& relabel) const {
    auto copy = instances_;
    for (std::size_t i = 0; i < copy.size(); ++i) copy[i].label = relabel(i, copy[i]);
    return Dataset(std::move(copy), dimension_, texts_);
  }
  /// Instances at `indices`, in that order.
  Dataset subset(std::span<const Index> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<LabeledInstance> instances_;
  std::size_t dimension_ = 0;
  std::vector<std::string> texts_;
};

// ---------------------------------------------------------------------------
// LIBSVM text format. Indices are 1-based on disk, 0-based in memory.

Dataset parse_libsvm(std::istream& in);
Dataset parse_libsvm(std::string_view text);
void write_libsvm(std::ostream& out, const Dataset& data);
std::string to_libsvm(const Dataset& data);

// ---------------------------------------------------------------------------
// Tokenized corpus: one document per line, first token `+1`/`-1`, the rest
// whitespace-separated words.

struct Corpus {
  std::vector<Label> labels;
  std::vector<std::vector<std::string>> docs;
};

Corpus parse_corpus(std::istream& in);

/// Token → feature index map. Indices are 0..size()-1 in first-occurrence order.
class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  int min_count() const noexcept { return min_count_; }
  std::optional<Index> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  /// Tokens ordered by index.
  std::span<const std::string> tokens() const noexcept { return tokens_; }

  /// One token per line, in index order.
  void write(std::ostream& out) const;

  friend Vocabulary build_vocabulary(std::span<const std::vector<std::string>> docs, int min_count);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Index> index_;
  int min_count_ = 1;
};

/// Keeps tokens whose corpus frequency is at least `min_count` (≥ 1).
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> docs, int min_count);

/// Binary bag-of-words: 1.0 per distinct in-vocabulary token.
SparseVector vectorize(std::span<const std::string> doc, const Vocabulary& vocab);

// ---------------------------------------------------------------------------

/// Partition of 0..n-1 into k shuffled folds whose sizes differ by at most
/// one (the first n % k folds get the extra element). Each fold is sorted.
/// Throws std::invalid_argument unless 2 ≤ k ≤ n.
std::vector<IndexList> split_folds(std::size_t n, std::size_t k, std::uint64_t seed);
std::vector<IndexList> split_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

/// Fraction of positive labels. Throws std::invalid_argument on empty data.
double class_balance(const Dataset& data);
std::size_t count_positives(std::span<const LabeledInstance> data) noexcept;

}  // namespace alsvm
