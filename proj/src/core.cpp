// src/core.cpp

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

#include "alignkit/core.hpp"

#include <algorithm>
#include <cmath>

#include "alignkit/error.hpp"

namespace alignkit {

Token::Token(std::string text) : text(std::move(text)) {
  if (this->text.empty()) throw MalformedInput("empty token");
}

Token::Token(std::string text, std::vector<std::string> pieces)
    : text(std::move(text)), subwords(std::move(pieces)) {
  if (this->text.empty()) throw MalformedInput("empty token");
  if (subwords->empty())
    throw MalformedInput("token '" + this->text + "' has no subwords");
  std::string joined;
  for (const auto& piece : *subwords) joined += strip_segmentation_markers(piece);
  if (joined != strip_segmentation_markers(this->text))
    throw MalformedInput("subwords of token '" + this->text +
                         "' do not concatenate to the token");
}

std::string strip_segmentation_markers(std::string_view piece) {
  static constexpr std::string_view kBpe = "@@";
  static constexpr std::string_view kSentencePiece = "\xE2\x96\x81";  // U+2581
  std::string out;
  out.reserve(piece.size());
  std::size_t k = 0;
  while (k < piece.size()) {
    if (piece.substr(k, kBpe.size()) == kBpe) {
      k += kBpe.size();
    } else if (piece.substr(k, kSentencePiece.size()) == kSentencePiece) {
      k += kSentencePiece.size();
    } else {
      out += piece[k++];
    }
  }
  return out;
}

void SentencePair::validate() const {
  if (src.empty() || tgt.empty())
    throw MalformedInput("sentence pair " + std::to_string(id) +
                         " has an empty side");
}

SentencePair make_pair(std::size_t id, const std::vector<std::string>& src,
                       const std::vector<std::string>& tgt) {
  SentencePair pair;
  pair.id = id;
  for (const auto& s : src) pair.src.emplace_back(s);
  for (const auto& t : tgt) pair.tgt.emplace_back(t);
  pair.validate();
  return pair;
}

std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::string_view to_string(ScoreSpace space) {
  switch (space) {
    case ScoreSpace::Log: return "log";
    case ScoreSpace::LogitDiff: return "logit-diff";
    case ScoreSpace::Probability: return "probability";
  }
  return "log";
}

ScoreSpace parse_score_space(std::string_view name) {
  if (name == "log") return ScoreSpace::Log;
  if (name == "logit-diff") return ScoreSpace::LogitDiff;
  if (name == "probability") return ScoreSpace::Probability;
  throw MalformedInput("unknown score space '" + std::string(name) + "'");
}

// SoftAlignment

SoftAlignment::SoftAlignment(std::size_t rows, std::size_t cols,
                             ScoreSpace space)
    : rows_(rows), cols_(cols), space_(space), scores_(rows * cols, 0.0) {}

SoftAlignment::SoftAlignment(std::size_t rows, std::size_t cols,
                             ScoreSpace space, std::vector<double> scores)
    : rows_(rows), cols_(cols), space_(space), scores_(std::move(scores)) {
  if (scores_.size() != rows_ * cols_)
    throw MalformedInput("score matrix has " + std::to_string(scores_.size()) +
                         " entries, expected " +
                         std::to_string(rows_ * cols_));
  for (auto& v : scores_) v = checked(v);
}

double SoftAlignment::checked(double value) const {
  if (std::isnan(value)) throw MalformedInput("NaN in score matrix");
  if (value == -HUGE_VAL) {
    if (space_ == ScoreSpace::Probability)
      throw MalformedInput("negative infinity in probability matrix");
    return kLogZero;
  }
  if (value == HUGE_VAL) throw MalformedInput("infinity in score matrix");
  if (space_ == ScoreSpace::Probability && (value < 0.0 || value > 1.0))
    throw MalformedInput("probability score outside [0,1]");
  return value;
}

void SoftAlignment::set(std::size_t i, std::size_t j, double value) {
  scores_[i * cols_ + j] = checked(value);
}

SoftAlignment SoftAlignment::transposed() const {
  SoftAlignment out(cols_, rows_, space_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      out.scores_[j * rows_ + i] = scores_[i * cols_ + j];
  return out;
}

// HardAlignment

HardAlignment::HardAlignment(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols) {}

HardAlignment::HardAlignment(std::size_t rows, std::size_t cols,
                             std::vector<Link> links)
    : rows_(rows), cols_(cols), links_(std::move(links)) {
  for (const auto& l : links_) {
    if (l.src >= rows_ || l.tgt >= cols_)
      throw MalformedInput("link " + std::to_string(l.src) + "-" +
                           std::to_string(l.tgt) + " outside a " +
                           std::to_string(rows_) + "x" +
                           std::to_string(cols_) + " sentence pair");
  }
  std::sort(links_.begin(), links_.end());
  links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
}

bool HardAlignment::contains(Link link) const {
  return std::binary_search(links_.begin(), links_.end(), link);
}

GoldAlignment::GoldAlignment(std::size_t rows, std::size_t cols,
                             std::vector<Link> sure,
                             std::vector<Link> possible) {
  possible.insert(possible.end(), sure.begin(), sure.end());
  sure_ = HardAlignment(rows, cols, std::move(sure));
  possible_ = HardAlignment(rows, cols, std::move(possible));
}

// Metrics

AlignmentCounts& AlignmentCounts::operator+=(const AlignmentCounts& other) {
  hyp += other.hyp;
  sure += other.sure;
  hyp_and_sure += other.hyp_and_sure;
  hyp_and_possible += other.hyp_and_possible;
  return *this;
}

namespace {

std::size_t intersection_size(const std::vector<Link>& a,
                              const std::vector<Link>& b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

}  // namespace

AlignmentCounts count_links(const HardAlignment& hyp,
                            const GoldAlignment& gold) {
  for (const auto& l : hyp.links()) {
    if (l.src >= gold.rows() || l.tgt >= gold.cols())
      throw MalformedInput("hypothesis link " + std::to_string(l.src) + "-" +
                           std::to_string(l.tgt) +
                           " outside the gold sentence bounds");
  }
  AlignmentCounts c;
  c.hyp = hyp.size();
  c.sure = gold.sure().size();
  c.hyp_and_sure = intersection_size(hyp.links(), gold.sure().links());
  c.hyp_and_possible = intersection_size(hyp.links(), gold.possible().links());
  return c;
}

Metrics metrics_from_counts(const AlignmentCounts& c) {
  if (c.sure == 0) throw UndefinedMetric("gold alignment has no sure links");
  Metrics m;
  m.precision = c.hyp == 0 ? 1.0
                           : static_cast<double>(c.hyp_and_possible) /
                                 static_cast<double>(c.hyp);
  m.recall =
      static_cast<double>(c.hyp_and_sure) / static_cast<double>(c.sure);
  m.aer = 1.0 - static_cast<double>(c.hyp_and_sure + c.hyp_and_possible) /
                    static_cast<double>(c.sure + c.hyp);
  return m;
}

double precision(const HardAlignment& hyp, const GoldAlignment& gold) {
  const auto c = count_links(hyp, gold);
  if (c.hyp == 0) return 1.0;
  return static_cast<double>(c.hyp_and_possible) / static_cast<double>(c.hyp);
}

double recall(const HardAlignment& hyp, const GoldAlignment& gold) {
  return metrics_from_counts(count_links(hyp, gold)).recall;
}

double aer(const HardAlignment& hyp, const GoldAlignment& gold) {
  return metrics_from_counts(count_links(hyp, gold)).aer;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw MalformedInput("pearson: inputs have different lengths");
  if (x.size() < 2) throw MalformedInput("pearson: need at least 2 samples");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedMetric("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Metrics corpus_eval(std::span<const HardAlignment> hyps,
                    std::span<const GoldAlignment> golds,
                    Averaging averaging) {
  if (hyps.size() != golds.size())
    throw MalformedInput("corpus_eval: " + std::to_string(hyps.size()) +
                         " hypotheses vs " + std::to_string(golds.size()) +
                         " gold alignments");
  if (averaging == Averaging::Micro) {
    AlignmentCounts total;
    for (std::size_t k = 0; k < hyps.size(); ++k)
      total += count_links(hyps[k], golds[k]);
    return metrics_from_counts(total);
  }
  Metrics sum;
  std::size_t n = 0;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const auto c = count_links(hyps[k], golds[k]);
    if (c.sure == 0) continue;
    const auto m = metrics_from_counts(c);
    sum.precision += m.precision;
    sum.recall += m.recall;
    sum.aer += m.aer;
    ++n;
  }
  if (n == 0) throw UndefinedMetric("no sentence has sure links");
  const auto d = static_cast<double>(n);
  return {sum.precision / d, sum.recall / d, sum.aer / d};
}

}  // namespace alignkit
