// alignkit/core.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Domain types shared by every module: tokens, sentence pairs, soft and hard
// alignments, gold annotations, and the evaluation metrics computed on them.

#ifndef ALIGNKIT_CORE_HPP_
#define ALIGNKIT_CORE_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alignkit {

/// Log-space stand-in for log(0); keeps every matrix entry finite so that
/// comparisons against it are total.
inline constexpr double kLogZero = -1e9;

/// Reserved unknown-symbol token recognized by every scorer backend.
inline constexpr std::string_view kUnkToken = "<unk>";

struct Token {
  std::string text;
  std::optional<std::vector<std::string>> subwords;

  Token() = default;
  explicit Token(std::string text);
  Token(std::string text, std::vector<std::string> subwords);

  bool has_subwords() const { return subwords.has_value(); }
};

/// Strips segmentation markers ("@@" and U+2581) from a subword or token.
std::string strip_segmentation_markers(std::string_view piece);

struct SentencePair {
  std::size_t id = 0;
  std::vector<Token> src;
  std::vector<Token> tgt;

  /// Validates that both sides are non-empty.
  void validate() const;
};

/// Builds a pair from whitespace-free token strings (no subwords).
SentencePair make_pair(std::size_t id, const std::vector<std::string>& src,
                       const std::vector<std::string>& tgt);

std::vector<std::string> token_texts(const std::vector<Token>& tokens);

enum class ScoreSpace { Log, LogitDiff, Probability };

std::string_view to_string(ScoreSpace space);
ScoreSpace parse_score_space(std::string_view name);

/// Dense |S| x |T| score matrix, row-major with source-indexed rows.
class SoftAlignment {
 public:
  SoftAlignment() = default;
  /// Zero-filled matrix.
  SoftAlignment(std::size_t rows, std::size_t cols, ScoreSpace space);
  /// Takes ownership of row-major scores.  Negative infinity is clamped to
  /// kLogZero; NaN, positive infinity, and out-of-range probabilities throw
  /// MalformedInput.
  SoftAlignment(std::size_t rows, std::size_t cols, ScoreSpace space,
                std::vector<double> scores);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  ScoreSpace space() const { return space_; }

  double operator()(std::size_t i, std::size_t j) const {
    return scores_[i * cols_ + j];
  }
  /// Sets one cell, applying the same clamping and checks as the constructor.
  void set(std::size_t i, std::size_t j, double value);

  std::span<const double> row(std::size_t i) const {
    return {scores_.data() + i * cols_, cols_};
  }
  const std::vector<double>& data() const { return scores_; }

  SoftAlignment transposed() const;

  friend bool operator==(const SoftAlignment&, const SoftAlignment&) = default;

 private:
  double checked(double value) const;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  ScoreSpace space_ = ScoreSpace::Log;
  std::vector<double> scores_;
};

struct Link {
  std::uint32_t src = 0;
  std::uint32_t tgt = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

/// A set of (source, target) links over a sentence pair of known shape.
/// Links are kept sorted by (src, tgt) without duplicates.
class HardAlignment {
 public:
  HardAlignment() = default;
  HardAlignment(std::size_t rows, std::size_t cols);
  /// Sorts and deduplicates; throws MalformedInput on out-of-range links.
  HardAlignment(std::size_t rows, std::size_t cols, std::vector<Link> links);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<Link>& links() const { return links_; }
  std::size_t size() const { return links_.size(); }
  bool empty() const { return links_.empty(); }
  bool contains(Link link) const;

  friend bool operator==(const HardAlignment&, const HardAlignment&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Link> links_;
};

/// Gold annotation with sure links S and possible links P, S a subset of P.
class GoldAlignment {
 public:
  GoldAlignment() = default;
  /// Sure links are added to the possible set automatically.
  GoldAlignment(std::size_t rows, std::size_t cols, std::vector<Link> sure,
                std::vector<Link> possible);

  std::size_t rows() const { return sure_.rows(); }
  std::size_t cols() const { return sure_.cols(); }
  const HardAlignment& sure() const { return sure_; }
  const HardAlignment& possible() const { return possible_; }

  friend bool operator==(const GoldAlignment&, const GoldAlignment&) = default;

 private:
  HardAlignment sure_;
  HardAlignment possible_;
};

/// Raw link counts; corpus metrics are computed from their sums.
struct AlignmentCounts {
  std::size_t hyp = 0;
  std::size_t sure = 0;
  std::size_t hyp_and_sure = 0;
  std::size_t hyp_and_possible = 0;

  AlignmentCounts& operator+=(const AlignmentCounts& other);
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double aer = 0.0;
};

AlignmentCounts count_links(const HardAlignment& hyp,
                            const GoldAlignment& gold);
Metrics metrics_from_counts(const AlignmentCounts& counts);

/// |A and P| / |A|; 1.0 for an empty hypothesis.
double precision(const HardAlignment& hyp, const GoldAlignment& gold);
/// |A and S| / |S|; throws UndefinedMetric when S is empty.
double recall(const HardAlignment& hyp, const GoldAlignment& gold);
/// 1 - (|A and S| + |A and P|) / (|S| + |A|); throws UndefinedMetric when S
/// is empty.
double aer(const HardAlignment& hyp, const GoldAlignment& gold);

double pearson(std::span<const double> x, std::span<const double> y);

enum class Averaging { Micro, Macro };

/// Corpus metrics.  Micro sums counts across sentences before dividing;
/// Macro averages per-sentence metrics (sentences without sure links are
/// skipped for recall/AER).
Metrics corpus_eval(std::span<const HardAlignment> hyps,
                    std::span<const GoldAlignment> golds,
                    Averaging averaging = Averaging::Micro);

}  // namespace alignkit

#endif  // ALIGNKIT_CORE_HPP_
