// alignkit/nmt_scores.hpp

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

// Soft alignment scores derived from a forced-scoring backend.
//
//   one-token     p(s_i, t_j) = m({s_i}, {t_j})                    log space
//   src-obscure   p(s_i, t_j) = m_j(S, T) - m_j(S with s_i obscured, T)
//   both-obscure  p(s_i, t_j) = m(S with s_i obscured, T with t_j obscured)
//
// where m is the sentence log-probability and m_j the log-probability of
// target token j.  Obscuring either deletes the token or substitutes <unk>.

#ifndef ALIGNKIT_NMT_SCORES_HPP_
#define ALIGNKIT_NMT_SCORES_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "alignkit/core.hpp"
#include "alignkit/scorer.hpp"

namespace alignkit {

enum class ObscureMode { Delete, Substitute };
enum class AttentionAggregation { Max, Avg };

/// `tokens` with position `k` deleted or replaced by <unk>.  Delete on a
/// single-token sentence throws MalformedInput.
std::vector<std::string> obscure(const std::vector<std::string>& tokens,
                                 std::size_t k, ObscureMode mode);

/// Exactly |S|*|T| requests for one-token sentence pairs.
SoftAlignment m1_scores(Scorer& scorer, const SentencePair& pair);

/// |S|+1 requests: the unmodified pair plus one per obscured source token.
SoftAlignment m2_scores(Scorer& scorer, const SentencePair& pair,
                        ObscureMode mode);

/// |S|*|T| full-sentence requests with source token i and target token j
/// obscured.
SoftAlignment m3_scores(Scorer& scorer, const SentencePair& pair,
                        ObscureMode src_mode, ObscureMode tgt_mode);

/// Reduces subword attention (rows = target subwords) to a token-level
/// |S| x |T| probability matrix.  Every token must carry a segmentation whose
/// concatenated order matches the payload's subword lists.
SoftAlignment attention_scores(const AttentionPayload& payload,
                               const SentencePair& pair,
                               AttentionAggregation agg);

/// Every score method the command-line tool exposes.
enum class ScoreMethod {
  M1,
  M2a,
  M2b,
  M3aa,
  M3ab,
  M3ba,
  M3bb,
  AttnMax,
  AttnAvg,
  IbmPosterior,
};

ScoreMethod parse_score_method(std::string_view name);
std::string_view to_string(ScoreMethod method);
bool needs_attention(ScoreMethod method);

/// Builds the attention request for a pair (subword strings of its tokens).
ScoreRequest attention_request(std::uint64_t id, const SentencePair& pair);

}  // namespace alignkit

#endif  // ALIGNKIT_NMT_SCORES_HPP_
