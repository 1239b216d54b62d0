// alignkit/scorer.hpp

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

// Forced-scoring backends.  A backend returns natural-log probabilities of a
// given target sentence under a given source sentence, optionally per target
// token, and optionally subword-level attention.

#ifndef ALIGNKIT_SCORER_HPP_
#define ALIGNKIT_SCORER_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "alignkit/error.hpp"
#include "alignkit/ibm.hpp"

namespace alignkit {

/// The backend lacks a requested capability.
class CapabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

enum class Need : std::uint8_t {
  SentenceLogprob = 1,
  TokenLogprobs = 2,
  Attention = 4,
};

std::string_view to_string(Need need);
Need parse_need(std::string_view name);

class NeedSet {
 public:
  constexpr NeedSet() = default;
  constexpr NeedSet(std::initializer_list<Need> needs) {
    for (auto n : needs) bits_ |= static_cast<std::uint8_t>(n);
  }
  constexpr bool contains(Need n) const {
    return (bits_ & static_cast<std::uint8_t>(n)) != 0;
  }
  constexpr bool contains_all(NeedSet other) const {
    return (bits_ & other.bits_) == other.bits_;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  void insert(Need n) { bits_ |= static_cast<std::uint8_t>(n); }
  /// Members in canonical order.
  std::vector<Need> members() const;

  friend constexpr bool operator==(NeedSet, NeedSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct ScoreRequest {
  std::uint64_t id = 0;
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  NeedSet need;
};

/// Subword-level attention; matrix rows are target subwords, columns source
/// subwords, row-major.
struct AttentionPayload {
  std::vector<std::string> src_subwords;
  std::vector<std::string> tgt_subwords;
  std::vector<double> matrix;

  double at(std::size_t tgt_row, std::size_t src_col) const {
    return matrix[tgt_row * src_subwords.size() + src_col];
  }
  /// Shape, range, and row-sum (1 +- 1e-3) checks; throws MalformedInput.
  void validate() const;

  friend bool operator==(const AttentionPayload&,
                         const AttentionPayload&) = default;
};

struct ScoreResponse {
  std::uint64_t id = 0;
  std::optional<double> sentence_logprob;
  std::optional<std::vector<double>> token_logprobs;
  std::optional<AttentionPayload> attention;

  friend bool operator==(const ScoreResponse&, const ScoreResponse&) = default;
};

/// Checks that `resp` answers `req`: requested fields present, token count,
/// additivity within 1e-6, attention well-formed.  Throws BackendError.
void check_response(const ScoreRequest& req, const ScoreResponse& resp);

class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual NeedSet capabilities() const = 0;

  /// Responses are returned in request order, matched by id.  Request ids
  /// must be unique within the batch.
  virtual std::vector<ScoreResponse> score_batch(
      std::span<const ScoreRequest> requests) = 0;

  ScoreResponse score(const ScoreRequest& request);

 protected:
  /// Throws CapabilityError for needs outside capabilities() and
  /// MalformedInput for duplicate ids or empty sentences.
  void check_requests(std::span<const ScoreRequest> requests) const;
};

/// In-process scorer over an IBM lexicon; no attention.
class BuiltinScorer : public Scorer {
 public:
  explicit BuiltinScorer(std::shared_ptr<const ibm::LexiconModel> model);

  NeedSet capabilities() const override;
  std::vector<ScoreResponse> score_batch(
      std::span<const ScoreRequest> requests) override;

  const ibm::LexiconModel& model() const { return *model_; }

 private:
  std::shared_ptr<const ibm::LexiconModel> model_;
};

/// Exact-match cache keyed on (src, tgt, need).  Identical requests inside
/// one batch are forwarded once.
class CachedScorer : public Scorer {
 public:
  explicit CachedScorer(std::shared_ptr<Scorer> inner);

  NeedSet capabilities() const override { return inner_->capabilities(); }
  std::vector<ScoreResponse> score_batch(
      std::span<const ScoreRequest> requests) override;

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::shared_ptr<Scorer> inner_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, ScoreResponse> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct ExternalScorerOptions {
  std::chrono::milliseconds timeout{60000};
  std::size_t max_in_flight = 256;
};

/// Child process speaking the line protocol on stdin/stdout.  The command is
/// run through /bin/sh.  Exchanges are serialized by an internal mutex.
class ExternalScorer : public Scorer {
 public:
  explicit ExternalScorer(const std::string& command,
                          ExternalScorerOptions options = {});
  ~ExternalScorer() override;

  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  NeedSet capabilities() const override { return supports_; }
  std::vector<ScoreResponse> score_batch(
      std::span<const ScoreRequest> requests) override;

  /// Most recent line received from the child (for diagnostics).
  std::string last_line() const;

 private:
  std::string read_line(std::chrono::steady_clock::time_point deadline);
  void shutdown();

  ExternalScorerOptions options_;
  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string inbound_;
  std::string last_line_;
  NeedSet supports_;
  bool dead_ = false;
  mutable std::mutex mutex_;
};

/// Parses `builtin:<model-file>` or `external:<command>`.
std::shared_ptr<Scorer> make_scorer(const std::string& spec,
                                    ExternalScorerOptions options = {});

}  // namespace alignkit

#endif  // ALIGNKIT_SCORER_HPP_
