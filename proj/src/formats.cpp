// src/formats.cpp

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

#include "alignkit/formats.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "alignkit/error.hpp"
#include "alignkit/text.hpp"
#include "alignkit/wire.hpp"

namespace alignkit {

// Pharaoh

std::size_t PharaohLinks::min_rows() const {
  std::size_t n = 0;
  for (const auto* v : {&sure, &possible_only})
    for (const auto& l : *v) n = std::max<std::size_t>(n, l.src + 1);
  return n;
}

std::size_t PharaohLinks::min_cols() const {
  std::size_t n = 0;
  for (const auto* v : {&sure, &possible_only})
    for (const auto& l : *v) n = std::max<std::size_t>(n, l.tgt + 1);
  return n;
}

PharaohLinks parse_pharaoh(std::string_view line) {
  PharaohLinks out;
  for (const auto& item : split_whitespace(line)) {
    const auto sep = item.find_first_of("-?");
    if (sep == std::string::npos || sep == 0 || sep + 1 == item.size())
      throw MalformedInput("bad alignment item '" + item + "'");
    long long i = 0, j = 0;
    try {
      i = parse_integer(std::string_view(item).substr(0, sep));
      j = parse_integer(std::string_view(item).substr(sep + 1));
    } catch (const MalformedInput&) {
      throw MalformedInput("bad alignment item '" + item + "'");
    }
    if (i < 0 || j < 0 || i > UINT32_MAX || j > UINT32_MAX)
      throw MalformedInput("bad alignment item '" + item + "'");
    const Link l{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
    (item[sep] == '-' ? out.sure : out.possible_only).push_back(l);
  }
  return out;
}

HardAlignment parse_pharaoh_hypothesis(std::string_view line, std::size_t rows,
                                       std::size_t cols) {
  auto links = parse_pharaoh(line);
  if (!links.possible_only.empty())
    throw MalformedInput("hypothesis alignments cannot mark possible links");
  return HardAlignment(rows, cols, std::move(links.sure));
}

GoldAlignment parse_pharaoh_gold(std::string_view line, std::size_t rows,
                                 std::size_t cols) {
  auto links = parse_pharaoh(line);
  return GoldAlignment(rows, cols, std::move(links.sure),
                       std::move(links.possible_only));
}

std::string emit_pharaoh(const HardAlignment& a) {
  std::string out;
  for (const auto& l : a.links()) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.src) + '-' + std::to_string(l.tgt);
  }
  return out;
}

std::string emit_pharaoh(const GoldAlignment& g) {
  std::string out;
  for (const auto& l : g.possible().links()) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.src) + (g.sure().contains(l) ? '-' : '?') +
           std::to_string(l.tgt);
  }
  return out;
}

// Score interchange

std::string encode_score_record(const ScoreRecord& record) {
  const auto& s = record.scores;
  std::string out = "{\"id\": " + std::to_string(record.id) +
                    ", \"rows\": " + std::to_string(s.rows()) +
                    ", \"cols\": " + std::to_string(s.cols()) +
                    ", \"space\": \"" + std::string(to_string(s.space())) +
                    "\", \"scores\": [";
  for (std::size_t i = 0; i < s.rows(); ++i) {
    if (i) out += ',';
    out += '[';
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (j) out += ',';
      out += format_real_shortest(s(i, j));
    }
    out += ']';
  }
  return out + "]}";
}

ScoreRecord decode_score_record(std::string_view line) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception&) {
    throw MalformedInput("malformed score record: " + std::string(line));
  }
  try {
    ScoreRecord rec;
    if (!j.at("id").is_number_unsigned())
      throw MalformedInput("score record id must be a non-negative integer");
    rec.id = j.at("id").get<std::uint64_t>();
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    const auto space = parse_score_space(j.at("space").get<std::string>());
    const auto& m = j.at("scores");
    if (!m.is_array() || m.size() != rows)
      throw MalformedInput("score record " + std::to_string(rec.id) +
                           ": row count does not match 'rows'");
    std::vector<double> values;
    values.reserve(rows * cols);
    for (const auto& row : m) {
      if (!row.is_array() || row.size() != cols)
        throw MalformedInput("score record " + std::to_string(rec.id) +
                             ": column count does not match 'cols'");
      for (const auto& v : row) {
        if (!v.is_number())
          throw MalformedInput("score record " + std::to_string(rec.id) +
                               ": non-numeric score");
        values.push_back(v.get<double>());
      }
    }
    rec.scores = SoftAlignment(rows, cols, space, std::move(values));
    return rec;
  } catch (const json::exception&) {
    throw MalformedInput("incomplete score record: " + std::string(line));
  }
}

ScoreFileReader::ScoreFileReader(const std::string& path)
    : path_(path), in_(std::make_unique<std::ifstream>(path)) {
  if (!*in_) throw MalformedInput("cannot read " + path);
}

ScoreFileReader::~ScoreFileReader() = default;
ScoreFileReader::ScoreFileReader(ScoreFileReader&&) noexcept = default;

std::optional<ScoreRecord> ScoreFileReader::next() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_no_;
    if (line.empty()) continue;
    try {
      return decode_score_record(line);
    } catch (const MalformedInput& e) {
      throw MalformedInput(path_ + ":" + std::to_string(line_no_) + ": " +
                           e.what());
    }
  }
  return std::nullopt;
}

std::vector<ScoreRecord> read_score_file(const std::string& path) {
  ScoreFileReader reader(path);
  std::vector<ScoreRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

std::vector<std::pair<std::uint64_t, AttentionPayload>> read_attention_file(
    const std::string& path) {
  std::vector<std::pair<std::uint64_t, AttentionPayload>> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    try {
      auto rec = wire::decode_response(line);
      auto* resp = std::get_if<ScoreResponse>(&rec);
      if (resp == nullptr || !resp->attention)
        throw MalformedInput("record has no attention payload");
      resp->attention->validate();
      out.emplace_back(resp->id, std::move(*resp->attention));
    } catch (const Error& e) {
      throw MalformedInput(where + e.what());
    }
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::size_t count_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot read " + path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace alignkit
