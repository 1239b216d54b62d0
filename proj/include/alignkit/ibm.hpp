// alignkit/ibm.hpp

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

// EM-trained lexical translation model.  With diagonal_tension == 0 this is
// IBM Model 1; with a positive tension the alignment prior favours source
// positions close to the diagonal, weighting position i for target j by
// exp(-tension * |i/|S| - j/|T||) (the fast_align reparameterization with a
// fixed tension and fixed NULL share 1/(|S|+1)).

#ifndef ALIGNKIT_IBM_HPP_
#define ALIGNKIT_IBM_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "alignkit/core.hpp"

namespace alignkit::ibm {

using WordId = std::uint32_t;

inline constexpr std::string_view kNullToken = "<null>";
inline constexpr double kProbFloor = 1e-12;

class Vocab {
 public:
  WordId add(std::string_view word);
  /// Id of `word`, or `unk` when unseen.
  WordId find(std::string_view word, WordId unk) const;
  const std::string& word(WordId id) const { return words_[id]; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, WordId> ids_;
  std::vector<std::string> words_;
};

struct LexiconEntry {
  std::string src;
  std::string tgt;
  double prob = 0.0;
};

/// t(target | source) table with reserved NULL and UNK words.
/// Source ids: 0 = NULL, 1 = UNK.  Target ids: 0 = UNK.
class LexiconModel {
 public:
  static constexpr WordId kNullId = 0;
  static constexpr WordId kSrcUnkId = 1;
  static constexpr WordId kTgtUnkId = 0;

  LexiconModel();
  explicit LexiconModel(double diagonal_tension);

  /// Builds a model from explicit entries.  No normalization is enforced;
  /// call normalization_error() to check.
  static LexiconModel from_entries(double diagonal_tension,
                                   const std::vector<LexiconEntry>& entries);

  double diagonal_tension() const { return diagonal_tension_; }
  const Vocab& src_vocab() const { return src_vocab_; }
  const Vocab& tgt_vocab() const { return tgt_vocab_; }

  WordId src_id(std::string_view word) const {
    return src_vocab_.find(word, kSrcUnkId);
  }
  WordId tgt_id(std::string_view word) const {
    return tgt_vocab_.find(word, kTgtUnkId);
  }

  /// t(tgt | src); 0 for pairs never stored.
  double prob(WordId src, WordId tgt) const;
  double prob(std::string_view src, std::string_view tgt) const {
    return prob(src_id(src), tgt_id(tgt));
  }

  void set_prob(WordId src, WordId tgt, double p);
  WordId add_src_word(std::string_view w) { return grow(src_vocab_.add(w)); }
  WordId add_tgt_word(std::string_view w) { return tgt_vocab_.add(w); }

  /// All stored entries sorted by (src, tgt) byte order.
  std::vector<LexiconEntry> entries() const;

  /// Largest |1 - sum_t t(t|s)| over source words with stored entries.
  double normalization_error() const;

 private:
  WordId grow(WordId id);

  double diagonal_tension_ = 0.0;
  Vocab src_vocab_;
  Vocab tgt_vocab_;
  std::vector<std::unordered_map<WordId, double>> table_;
};

/// Alignment prior for target position j: out[0] is NULL, out[1 + i] is
/// source position i.  Sums to 1.
void alignment_prior(std::size_t src_len, std::size_t tgt_len, std::size_t j,
                     double diagonal_tension, std::span<double> out);

struct EmIteration {
  int iteration = 0;
  double log_likelihood = 0.0;
};

struct TrainedLexicon {
  LexiconModel model;
  /// Corpus log-likelihood under the parameters entering each iteration.
  std::vector<double> log_likelihood;
};

TrainedLexicon train_em(
    std::span<const SentencePair> corpus, int iterations,
    double diagonal_tension,
    const std::function<void(const EmIteration&)>& on_iteration = {});

/// Corpus log-likelihood sum_pairs sum_j log sum_i prior(i|j) t(t_j|s_i).
double corpus_log_likelihood(const LexiconModel& model,
                             std::span<const SentencePair> corpus);

/// Posterior P(a_j = i | pair); NULL mass is part of the normalization but
/// not of the matrix.
SoftAlignment posterior_matrix(const LexiconModel& model,
                               const SentencePair& pair);

/// Per target token, the argmax source position (smallest index on ties)
/// unless NULL has strictly larger posterior.
HardAlignment viterbi_align(const LexiconModel& model,
                            const SentencePair& pair);

struct SentenceScore {
  double sentence_logprob = 0.0;
  std::vector<double> token_logprobs;
};

SentenceScore sentence_logprob(const LexiconModel& model,
                               std::span<const std::string> src,
                               std::span<const std::string> tgt);

/// Flat file: header `ALIGNKIT-IBM v1 lambda=<x>` then sorted
/// `src<TAB>tgt<TAB>prob` lines, reals at 17 significant digits.
void save_model(const LexiconModel& model, std::ostream& out);
LexiconModel load_model(std::istream& in);
void save_model(const LexiconModel& model, const std::string& path);
LexiconModel load_model(const std::string& path);

}  // namespace alignkit::ibm

#endif  // ALIGNKIT_IBM_HPP_
