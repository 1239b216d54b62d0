// src/wire.cpp

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

#include "alignkit/wire.hpp"

#include <json.hpp>

#include "alignkit/text.hpp"

namespace alignkit::wire {

using nlohmann::json;

namespace {

std::string string_array(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += ',';
    out += quote(items[k]);
  }
  return out + ']';
}

std::string number_array(std::span<const double> items, const char* sep) {
  std::string out = "[";
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += sep;
    out += format_real_shortest(items[k]);
  }
  return out + ']';
}

std::string need_array(NeedSet needs) {
  std::vector<std::string> names;
  for (auto n : needs.members()) names.emplace_back(to_string(n));
  return string_array(names);
}

json parse_object(std::string_view line, const char* what) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed ") + what + " line: " +
                       std::string(line));
  }
  if (!j.is_object())
    throw BackendError(std::string(what) + " is not a JSON object: " +
                       std::string(line));
  return j;
}

std::uint64_t read_id(const json& j, std::string_view line) {
  const auto it = j.find("id");
  if (it == j.end() || !it->is_number_unsigned())
    throw BackendError("record without a non-negative integer id: " +
                       std::string(line));
  return it->get<std::uint64_t>();
}

double read_number(const json& j, std::string_view field,
                   std::string_view line) {
  if (!j.is_number())
    throw BackendError("non-numeric " + std::string(field) + " in: " +
                       std::string(line));
  return j.get<double>();
}

std::vector<std::string> read_strings(const json& j, std::string_view field,
                                      std::string_view line) {
  if (!j.is_array())
    throw BackendError(std::string(field) + " is not an array in: " +
                       std::string(line));
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string())
      throw BackendError("non-string entry in " + std::string(field) +
                         " in: " + std::string(line));
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::string quote(std::string_view text) {
  try {
    return json(std::string(text)).dump();
  } catch (const json::exception&) {
    throw MalformedInput("invalid UTF-8 in '" + std::string(text) + "'");
  }
}

std::string encode_handshake(NeedSet supports) {
  return "{\"alignkit_scorer\": " + std::to_string(kProtocolVersion) +
         ", \"supports\": " + need_array(supports) + "}";
}

NeedSet decode_handshake(std::string_view line) {
  const auto j = parse_object(line, "handshake");
  const auto version = j.find("alignkit_scorer");
  if (version == j.end() || !version->is_number_integer())
    throw BackendError("expected a scorer handshake, got: " +
                       std::string(line));
  if (version->get<int>() != kProtocolVersion)
    throw BackendError("unsupported scorer protocol version in: " +
                       std::string(line));
  const auto supports = j.find("supports");
  if (supports == j.end())
    throw BackendError("handshake lacks 'supports': " + std::string(line));
  NeedSet out;
  for (const auto& name : read_strings(*supports, "supports", line)) {
    try {
      out.insert(parse_need(name));
    } catch (const Error&) {
      throw BackendError("unknown capability '" + name +
                         "' in handshake: " + std::string(line));
    }
  }
  return out;
}

std::string encode_request(const ScoreRequest& r) {
  return "{\"id\": " + std::to_string(r.id) + ", \"src\": " +
         string_array(r.src) + ", \"tgt\": " + string_array(r.tgt) +
         ", \"need\": " + need_array(r.need) + "}";
}

ScoreRequest decode_request(std::string_view line) {
  json j;
  try {
    j = parse_object(line, "request");
  } catch (const BackendError& e) {
    throw MalformedInput(e.what());
  }
  try {
    ScoreRequest r;
    r.id = read_id(j, line);
    r.src = read_strings(j.at("src"), "src", line);
    r.tgt = read_strings(j.at("tgt"), "tgt", line);
    for (const auto& n : read_strings(j.at("need"), "need", line))
      r.need.insert(parse_need(n));
    return r;
  } catch (const json::exception&) {
    throw MalformedInput("request lacks src/tgt/need: " + std::string(line));
  } catch (const BackendError& e) {
    throw MalformedInput(e.what());
  }
}

std::string encode_response(const ScoreResponse& r) {
  std::string out = "{\"id\": " + std::to_string(r.id);
  if (r.sentence_logprob)
    out += ", \"sentence_logprob\": " + format_real_shortest(*r.sentence_logprob);
  if (r.token_logprobs)
    out += ", \"token_logprobs\": " + number_array(*r.token_logprobs, ", ");
  if (r.attention) {
    const auto& a = *r.attention;
    out += ", \"attention\": {\"src_subwords\": " + string_array(a.src_subwords) +
           ", \"tgt_subwords\": " + string_array(a.tgt_subwords) +
           ", \"matrix\": [";
    const auto cols = a.src_subwords.size();
    for (std::size_t row = 0; row < a.tgt_subwords.size(); ++row) {
      if (row) out += ',';
      out += number_array(std::span(a.matrix).subspan(row * cols, cols), ",");
    }
    out += "]}";
  }
  return out + "}";
}

std::string encode_error(const ErrorRecord& e) {
  std::string out = "{";
  if (e.id) out += "\"id\": " + std::to_string(*e.id) + ", ";
  return out + "\"error\": " + quote(e.message) + "}";
}

std::variant<ScoreResponse, ErrorRecord> decode_response(std::string_view line) {
  const auto j = parse_object(line, "response");
  if (const auto err = j.find("error"); err != j.end()) {
    ErrorRecord e;
    if (const auto id = j.find("id"); id != j.end() && id->is_number_unsigned())
      e.id = id->get<std::uint64_t>();
    e.message = err->is_string() ? err->get<std::string>() : err->dump();
    return e;
  }
  ScoreResponse r;
  r.id = read_id(j, line);
  if (const auto it = j.find("sentence_logprob"); it != j.end())
    r.sentence_logprob = read_number(*it, "sentence_logprob", line);
  if (const auto it = j.find("token_logprobs"); it != j.end()) {
    if (!it->is_array())
      throw BackendError("token_logprobs is not an array in: " +
                         std::string(line));
    std::vector<double> lps;
    for (const auto& v : *it) lps.push_back(read_number(v, "token_logprobs", line));
    r.token_logprobs = std::move(lps);
  }
  if (const auto it = j.find("attention"); it != j.end()) {
    if (!it->is_object())
      throw BackendError("attention is not an object in: " + std::string(line));
    AttentionPayload a;
    try {
      a.src_subwords = read_strings(it->at("src_subwords"), "src_subwords", line);
      a.tgt_subwords = read_strings(it->at("tgt_subwords"), "tgt_subwords", line);
      const auto& m = it->at("matrix");
      if (!m.is_array() || m.size() != a.tgt_subwords.size())
        throw BackendError("attention matrix row count mismatch in: " +
                           std::string(line));
      for (const auto& row : m) {
        if (!row.is_array() || row.size() != a.src_subwords.size())
          throw BackendError("attention matrix column count mismatch in: " +
                             std::string(line));
        for (const auto& v : row) a.matrix.push_back(read_number(v, "attention", line));
      }
    } catch (const json::exception&) {
      throw BackendError("incomplete attention payload in: " + std::string(line));
    }
    r.attention = std::move(a);
  }
  return r;
}

}  // namespace alignkit::wire
