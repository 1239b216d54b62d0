// alignkit/wire.hpp

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

// Scorer wire protocol v1.  One UTF-8 JSON record per line:
//
//   handshake  {"alignkit_scorer": 1, "supports": ["sentence_logprob","token_logprobs"]}
//   request    {"id": 7, "src": ["Choose","the"], "tgt": ["Wählen"], "need": ["token_logprobs"]}
//   response   {"id": 7, "token_logprobs": [-1.2, -0.3]}
//   error      {"id": 7, "error": "message"}
//
// A response may also carry "sentence_logprob" and an "attention" object
// {"src_subwords": [...], "tgt_subwords": [...], "matrix": [[...], ...]}
// whose rows are target subwords.

#ifndef ALIGNKIT_WIRE_HPP_
#define ALIGNKIT_WIRE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "alignkit/scorer.hpp"

namespace alignkit::wire {

inline constexpr int kProtocolVersion = 1;

std::string encode_handshake(NeedSet supports);
/// Throws BackendError on anything but a v1 handshake.
NeedSet decode_handshake(std::string_view line);

std::string encode_request(const ScoreRequest& request);
ScoreRequest decode_request(std::string_view line);

struct ErrorRecord {
  std::optional<std::uint64_t> id;
  std::string message;
};

std::string encode_response(const ScoreResponse& response);
std::string encode_error(const ErrorRecord& error);
/// Throws BackendError (with the line attached) on malformed records.
std::variant<ScoreResponse, ErrorRecord> decode_response(std::string_view line);

/// JSON string literal for `text`.
std::string quote(std::string_view text);

}  // namespace alignkit::wire

#endif  // ALIGNKIT_WIRE_HPP_
