// alignkit/corpus.hpp

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

// Parallel corpus ingestion and the synthetic bijective-dictionary corpus.

#ifndef ALIGNKIT_CORPUS_HPP_
#define ALIGNKIT_CORPUS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alignkit/core.hpp"

namespace alignkit {

struct CorpusFiles {
  std::string src;
  std::string tgt;
  std::optional<std::string> subwords_src;
  std::optional<std::string> subwords_tgt;
  std::optional<std::string> gold;
  /// Separates subwords inside one whitespace token of a subword file.
  std::string subword_separator = "@@";
};

struct Corpus {
  std::vector<SentencePair> pairs;
  std::vector<GoldAlignment> gold;  // empty when no gold file was given

  bool has_gold() const { return !gold.empty(); }
};

/// Throws MalformedInput naming the files when line counts differ.
void check_line_counts(const std::vector<std::string>& paths);

/// Reads all files of a corpus; ids are line numbers from 0.
Corpus load_corpus(const CorpusFiles& files);

/// Gold lines parsed against the corpus' sentence shapes.
std::vector<GoldAlignment> load_gold(const std::string& path,
                                     const std::vector<SentencePair>& pairs);

/// Writes `pairs` (and `gold`, when non-empty) to the given files.
void write_corpus(const CorpusFiles& files, const std::vector<SentencePair>& pairs,
                  const std::vector<GoldAlignment>& gold);

struct SyntheticConfig {
  std::size_t pairs = 500;
  std::size_t vocabulary = 26;
  std::size_t min_length = 3;
  std::size_t max_length = 8;
  /// Probability of swapping each adjacent target pair after translation.
  double swap_probability = 0.3;
  /// Probability of inserting an unaligned filler word per target token.
  double filler_probability = 0.0;
  /// Probability that a dictionary entry is a cognate: the target word is
  /// the source word, possibly with one letter changed.
  double cognate_probability = 0.3;
  /// Attach a segmentation into chunks of at most three characters.
  bool subwords = false;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  Corpus corpus;
  /// dictionary[k] is the target word of source word k.
  std::vector<std::pair<std::string, std::string>> dictionary;
};

/// Sentences of distinct source words translated word by word through a
/// fixed bijective dictionary, lightly reordered.  Gold links are the
/// generating links (sure only).  Filler words contain a digit and never
/// collide with dictionary words.
SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config);

/// The reverse-direction view: sides swapped, gold transposed.
Corpus reverse_corpus(const Corpus& corpus);

}  // namespace alignkit

#endif  // ALIGNKIT_CORPUS_HPP_
