// src/scorer.cpp

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

#include "alignkit/scorer.hpp"

#include <cmath>
#include <unordered_set>

namespace alignkit {

std::string_view to_string(Need need) {
  switch (need) {
    case Need::SentenceLogprob: return "sentence_logprob";
    case Need::TokenLogprobs: return "token_logprobs";
    case Need::Attention: return "attention";
  }
  return "";
}

Need parse_need(std::string_view name) {
  if (name == "sentence_logprob") return Need::SentenceLogprob;
  if (name == "token_logprobs") return Need::TokenLogprobs;
  if (name == "attention") return Need::Attention;
  throw ConfigError("unknown score item '" + std::string(name) + "'");
}

std::vector<Need> NeedSet::members() const {
  std::vector<Need> out;
  for (auto n : {Need::SentenceLogprob, Need::TokenLogprobs, Need::Attention})
    if (contains(n)) out.push_back(n);
  return out;
}

void AttentionPayload::validate() const {
  const auto rows = tgt_subwords.size();
  const auto cols = src_subwords.size();
  if (rows == 0 || cols == 0)
    throw MalformedInput("attention payload has an empty subword list");
  if (matrix.size() != rows * cols)
    throw MalformedInput("attention matrix is not " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = at(r, c);
      if (!(v >= 0.0 && v <= 1.0))
        throw MalformedInput("attention value outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-3)
      throw MalformedInput("attention row " + std::to_string(r) +
                           " sums to " + std::to_string(sum));
  }
}

void check_response(const ScoreRequest& req, const ScoreResponse& resp) {
  const auto where = " in response " + std::to_string(resp.id);
  if (req.need.contains(Need::SentenceLogprob)) {
    if (!resp.sentence_logprob)
      throw BackendError("missing sentence_logprob" + where);
    if (!std::isfinite(*resp.sentence_logprob))
      throw BackendError("non-finite sentence_logprob" + where);
  }
  if (req.need.contains(Need::TokenLogprobs)) {
    if (!resp.token_logprobs)
      throw BackendError("missing token_logprobs" + where);
    if (resp.token_logprobs->size() != req.tgt.size())
      throw BackendError("token_logprobs has " +
                         std::to_string(resp.token_logprobs->size()) +
                         " entries for " + std::to_string(req.tgt.size()) +
                         " target tokens" + where);
    for (double v : *resp.token_logprobs)
      if (!std::isfinite(v)) throw BackendError("non-finite token_logprobs" + where);
  }
  if (resp.sentence_logprob && resp.token_logprobs) {
    double sum = 0.0;
    for (double v : *resp.token_logprobs) sum += v;
    if (std::abs(sum - *resp.sentence_logprob) > 1e-6)
      throw BackendError("token_logprobs do not sum to sentence_logprob" +
                         where);
  }
  if (req.need.contains(Need::Attention)) {
    if (!resp.attention) throw BackendError("missing attention" + where);
    try {
      resp.attention->validate();
    } catch (const MalformedInput& e) {
      throw BackendError(std::string(e.what()) + where);
    }
  }
}

// Scorer

ScoreResponse Scorer::score(const ScoreRequest& request) {
  auto out = score_batch(std::span(&request, 1));
  return std::move(out.front());
}

void Scorer::check_requests(std::span<const ScoreRequest> requests) const {
  const auto caps = capabilities();
  std::unordered_set<std::uint64_t> ids;
  for (const auto& r : requests) {
    if (r.need.empty())
      throw MalformedInput("request " + std::to_string(r.id) + " needs nothing");
    for (auto n : r.need.members())
      if (!caps.contains(n))
        throw CapabilityError(std::string(to_string(n)) + " unsupported");
    if (r.src.empty() || r.tgt.empty())
      throw MalformedInput("request " + std::to_string(r.id) +
                           " has an empty sentence");
    if (!ids.insert(r.id).second)
      throw MalformedInput("duplicate request id " + std::to_string(r.id));
  }
}

// BuiltinScorer

BuiltinScorer::BuiltinScorer(std::shared_ptr<const ibm::LexiconModel> model)
    : model_(std::move(model)) {}

NeedSet BuiltinScorer::capabilities() const {
  return {Need::SentenceLogprob, Need::TokenLogprobs};
}

std::vector<ScoreResponse> BuiltinScorer::score_batch(
    std::span<const ScoreRequest> requests) {
  check_requests(requests);
  std::vector<ScoreResponse> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    auto s = ibm::sentence_logprob(*model_, r.src, r.tgt);
    ScoreResponse resp;
    resp.id = r.id;
    if (r.need.contains(Need::SentenceLogprob))
      resp.sentence_logprob = s.sentence_logprob;
    if (r.need.contains(Need::TokenLogprobs))
      resp.token_logprobs = std::move(s.token_logprobs);
    out.push_back(std::move(resp));
  }
  return out;
}

// CachedScorer

namespace {

std::string cache_key(const ScoreRequest& r) {
  std::string key(1, static_cast<char>(r.need.bits()));
  for (const auto& s : r.src) (key += '\x1f') += s;
  key += '\x1e';
  for (const auto& t : r.tgt) (key += '\x1f') += t;
  return key;
}

}  // namespace

CachedScorer::CachedScorer(std::shared_ptr<Scorer> inner)
    : inner_(std::move(inner)) {}

std::vector<ScoreResponse> CachedScorer::score_batch(
    std::span<const ScoreRequest> requests) {
  check_requests(requests);
  std::vector<ScoreResponse> out(requests.size());
  std::vector<std::string> keys(requests.size());
  std::vector<bool> found(requests.size(), false);
  std::vector<ScoreRequest> forward;
  std::unordered_map<std::string, std::size_t> pending;  // key -> forward idx
  {
    std::lock_guard lock(mutex_);
    for (std::size_t k = 0; k < requests.size(); ++k) {
      keys[k] = cache_key(requests[k]);
      if (const auto it = cache_.find(keys[k]); it != cache_.end()) {
        out[k] = it->second;
        found[k] = true;
        ++hits_;
      } else if (pending.count(keys[k])) {
        ++hits_;
      } else {
        pending.emplace(keys[k], forward.size());
        forward.push_back(requests[k]);
        ++misses_;
      }
    }
  }
  std::vector<ScoreResponse> fresh;
  if (!forward.empty()) fresh = inner_->score_batch(forward);
  {
    std::lock_guard lock(mutex_);
    for (std::size_t f = 0; f < forward.size(); ++f)
      cache_.emplace(cache_key(forward[f]), fresh[f]);
  }
  for (std::size_t k = 0; k < requests.size(); ++k) {
    if (!found[k]) out[k] = fresh[pending.at(keys[k])];
    out[k].id = requests[k].id;
  }
  return out;
}

std::size_t CachedScorer::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t CachedScorer::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

std::shared_ptr<Scorer> make_scorer(const std::string& spec,
                                    ExternalScorerOptions options) {
  if (spec.starts_with("builtin:")) {
    auto model = std::make_shared<const ibm::LexiconModel>(
        ibm::load_model(spec.substr(8)));
    return std::make_shared<BuiltinScorer>(std::move(model));
  }
  if (spec.starts_with("external:"))
    return std::make_shared<ExternalScorer>(spec.substr(9), options);
  throw ConfigError("scorer must be builtin:<model> or external:<command>, got '" +
                    spec + "'");
}

}  // namespace alignkit
