// alignkit/formats.hpp

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

// Line-oriented file formats.
//
// Pharaoh alignments: one line per sentence pair, space-separated `i-j`
// (sure) and `i?j` (possible only) items, 0-based.  Hypotheses are always
// written with `-` and sorted by (i, j).
//
// Soft scores: one JSON record per line,
//   {"id": 3, "rows": 2, "cols": 2, "space": "log", "scores": [[-0.7,-2.3],[-1.9,-0.4]]}

#ifndef ALIGNKIT_FORMATS_HPP_
#define ALIGNKIT_FORMATS_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alignkit/core.hpp"
#include "alignkit/scorer.hpp"

namespace alignkit {

struct PharaohLinks {
  std::vector<Link> sure;
  std::vector<Link> possible_only;

  /// Smallest shape containing every link.
  std::size_t min_rows() const;
  std::size_t min_cols() const;
};

PharaohLinks parse_pharaoh(std::string_view line);

/// Hypothesis line; `i?j` items are rejected.
HardAlignment parse_pharaoh_hypothesis(std::string_view line, std::size_t rows,
                                       std::size_t cols);
GoldAlignment parse_pharaoh_gold(std::string_view line, std::size_t rows,
                                 std::size_t cols);

std::string emit_pharaoh(const HardAlignment& a);
std::string emit_pharaoh(const GoldAlignment& g);

struct ScoreRecord {
  std::uint64_t id = 0;
  SoftAlignment scores;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

std::string encode_score_record(const ScoreRecord& record);
ScoreRecord decode_score_record(std::string_view line);

/// Streams score records from a file, one per line.
class ScoreFileReader {
 public:
  explicit ScoreFileReader(const std::string& path);
  ~ScoreFileReader();
  ScoreFileReader(ScoreFileReader&&) noexcept;

  std::optional<ScoreRecord> next();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::unique_ptr<std::istream> in_;
  std::size_t line_no_ = 0;
};

std::vector<ScoreRecord> read_score_file(const std::string& path);

/// Attention file: scorer response lines carrying an "attention" object.
std::vector<std::pair<std::uint64_t, AttentionPayload>> read_attention_file(
    const std::string& path);

std::vector<std::string> read_lines(const std::string& path);
std::size_t count_lines(const std::string& path);

}  // namespace alignkit

#endif  // ALIGNKIT_FORMATS_HPP_
