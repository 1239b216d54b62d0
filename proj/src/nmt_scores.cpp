// src/nmt_scores.cpp

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

#include "alignkit/nmt_scores.hpp"

#include <algorithm>

namespace alignkit {

namespace {

// Rethrows backend failures with the sentence id prepended, keeping the type.
template <typename Fn>
auto with_sentence_context(const SentencePair& pair, Fn&& fn) {
  const auto ctx = "sentence " + std::to_string(pair.id) + ": ";
  try {
    return fn();
  } catch (const CapabilityError& e) {
    throw CapabilityError(ctx + e.what());
  } catch (const TimeoutError& e) {
    throw TimeoutError(ctx + e.what());
  } catch (const BackendError& e) {
    throw BackendError(ctx + e.what());
  }
}

}  // namespace

std::vector<std::string> obscure(const std::vector<std::string>& tokens,
                                 std::size_t k, ObscureMode mode) {
  auto out = tokens;
  if (mode == ObscureMode::Substitute) {
    out[k] = std::string(kUnkToken);
    return out;
  }
  if (tokens.size() < 2)
    throw MalformedInput("cannot delete the only token of a sentence");
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

SoftAlignment m1_scores(Scorer& scorer, const SentencePair& pair) {
  pair.validate();
  const auto rows = pair.src.size();
  const auto cols = pair.tgt.size();
  std::vector<ScoreRequest> requests;
  requests.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      requests.push_back({i * cols + j,
                          {pair.src[i].text},
                          {pair.tgt[j].text},
                          {Need::SentenceLogprob}});
  const auto responses =
      with_sentence_context(pair, [&] { return scorer.score_batch(requests); });
  SoftAlignment out(rows, cols, ScoreSpace::Log);
  for (std::size_t k = 0; k < responses.size(); ++k)
    out.set(k / cols, k % cols, *responses[k].sentence_logprob);
  return out;
}

SoftAlignment m2_scores(Scorer& scorer, const SentencePair& pair,
                        ObscureMode mode) {
  pair.validate();
  const auto src = token_texts(pair.src);
  const auto tgt = token_texts(pair.tgt);
  std::vector<ScoreRequest> requests;
  requests.reserve(src.size() + 1);
  requests.push_back({0, src, tgt, {Need::TokenLogprobs}});
  for (std::size_t i = 0; i < src.size(); ++i)
    requests.push_back({i + 1, obscure(src, i, mode), tgt, {Need::TokenLogprobs}});
  const auto responses =
      with_sentence_context(pair, [&] { return scorer.score_batch(requests); });
  const auto& base = *responses[0].token_logprobs;
  SoftAlignment out(src.size(), tgt.size(), ScoreSpace::LogitDiff);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& obscured = *responses[i + 1].token_logprobs;
    for (std::size_t j = 0; j < tgt.size(); ++j)
      out.set(i, j, base[j] - obscured[j]);
  }
  return out;
}

SoftAlignment m3_scores(Scorer& scorer, const SentencePair& pair,
                        ObscureMode src_mode, ObscureMode tgt_mode) {
  pair.validate();
  const auto src = token_texts(pair.src);
  const auto tgt = token_texts(pair.tgt);
  const auto rows = src.size();
  const auto cols = tgt.size();
  std::vector<std::vector<std::string>> tgt_variants;
  for (std::size_t j = 0; j < cols; ++j)
    tgt_variants.push_back(obscure(tgt, j, tgt_mode));
  std::vector<ScoreRequest> requests;
  requests.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    auto src_variant = obscure(src, i, src_mode);
    for (std::size_t j = 0; j < cols; ++j)
      requests.push_back(
          {i * cols + j, src_variant, tgt_variants[j], {Need::SentenceLogprob}});
  }
  const auto responses =
      with_sentence_context(pair, [&] { return scorer.score_batch(requests); });
  SoftAlignment out(rows, cols, ScoreSpace::Log);
  for (std::size_t k = 0; k < responses.size(); ++k)
    out.set(k / cols, k % cols, *responses[k].sentence_logprob);
  return out;
}

namespace {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Span> subword_spans(const std::vector<Token>& tokens,
                                const std::vector<std::string>& payload,
                                const char* side) {
  std::vector<Span> spans;
  std::size_t pos = 0;
  for (const auto& tok : tokens) {
    if (!tok.has_subwords())
      throw MalformedInput(std::string(side) + " token '" + tok.text +
                           "' has no subword segmentation");
    Span s{pos, pos};
    for (const auto& piece : *tok.subwords) {
      if (pos >= payload.size() ||
          strip_segmentation_markers(piece) !=
              strip_segmentation_markers(payload[pos]))
        throw MalformedInput(std::string(side) + " token '" + tok.text +
                             "' does not match the attention subwords");
      ++pos;
    }
    s.end = pos;
    spans.push_back(s);
  }
  if (pos != payload.size())
    throw MalformedInput(std::string(side) +
                         " attention subwords extend past the last token");
  return spans;
}

}  // namespace

SoftAlignment attention_scores(const AttentionPayload& payload,
                               const SentencePair& pair,
                               AttentionAggregation agg) {
  pair.validate();
  payload.validate();
  const auto src_spans = subword_spans(pair.src, payload.src_subwords, "source");
  const auto tgt_spans = subword_spans(pair.tgt, payload.tgt_subwords, "target");
  SoftAlignment out(pair.src.size(), pair.tgt.size(), ScoreSpace::Probability);
  for (std::size_t i = 0; i < src_spans.size(); ++i) {
    for (std::size_t j = 0; j < tgt_spans.size(); ++j) {
      double best = 0.0;
      double sum = 0.0;
      for (auto r = tgt_spans[j].begin; r < tgt_spans[j].end; ++r) {
        for (auto c = src_spans[i].begin; c < src_spans[i].end; ++c) {
          best = std::max(best, payload.at(r, c));
          sum += payload.at(r, c);
        }
      }
      const auto cells = static_cast<double>(
          (tgt_spans[j].end - tgt_spans[j].begin) *
          (src_spans[i].end - src_spans[i].begin));
      out.set(i, j,
              agg == AttentionAggregation::Max ? best : std::min(1.0, sum / cells));
    }
  }
  return out;
}

ScoreMethod parse_score_method(std::string_view name) {
  if (name == "m1") return ScoreMethod::M1;
  if (name == "m2a") return ScoreMethod::M2a;
  if (name == "m2b") return ScoreMethod::M2b;
  if (name == "m3aa") return ScoreMethod::M3aa;
  if (name == "m3ab") return ScoreMethod::M3ab;
  if (name == "m3ba") return ScoreMethod::M3ba;
  if (name == "m3bb") return ScoreMethod::M3bb;
  if (name == "attn-max") return ScoreMethod::AttnMax;
  if (name == "attn-avg") return ScoreMethod::AttnAvg;
  if (name == "ibm-posterior") return ScoreMethod::IbmPosterior;
  throw ConfigError("unknown score method '" + std::string(name) + "'");
}

std::string_view to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::M1: return "m1";
    case ScoreMethod::M2a: return "m2a";
    case ScoreMethod::M2b: return "m2b";
    case ScoreMethod::M3aa: return "m3aa";
    case ScoreMethod::M3ab: return "m3ab";
    case ScoreMethod::M3ba: return "m3ba";
    case ScoreMethod::M3bb: return "m3bb";
    case ScoreMethod::AttnMax: return "attn-max";
    case ScoreMethod::AttnAvg: return "attn-avg";
    case ScoreMethod::IbmPosterior: return "ibm-posterior";
  }
  return "";
}

bool needs_attention(ScoreMethod method) {
  return method == ScoreMethod::AttnMax || method == ScoreMethod::AttnAvg;
}

ScoreRequest attention_request(std::uint64_t id, const SentencePair& pair) {
  // Requests carry word tokens; the backend reports its own segmentation.
  return {id, token_texts(pair.src), token_texts(pair.tgt), {Need::Attention}};
}

}  // namespace alignkit
