// tests/unit/test_formats.cpp

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


#include <doctest.h>

#include "alignkit/formats.hpp"
#include "alignkit/wire.hpp"
#include "test_support.hpp"

using namespace alignkit;
using testing::LinkSet;
using testing::to_set;

TEST_CASE("pharaoh lines") {
  const auto links = parse_pharaoh("0-0 2?1  1-3");
  CHECK(links.sure.size() == 2);
  CHECK(links.possible_only.size() == 1);
  CHECK(links.min_rows() == 3);
  CHECK(links.min_cols() == 4);
  CHECK(parse_pharaoh("").sure.empty());

  const auto h = parse_pharaoh_hypothesis("1-1 0-0 1-1", 2, 2);
  CHECK(emit_pharaoh(h) == "0-0 1-1");
  CHECK(emit_pharaoh(HardAlignment(2, 2)) == "");

  const auto g = parse_pharaoh_gold("0-0 1?1 0?1", 2, 2);
  CHECK(g.sure().size() == 1);
  CHECK(g.possible().size() == 3);
  CHECK(emit_pharaoh(g) == "0-0 0?1 1?1");

  for (const char* bad : {"0-", "-1", "a-b", "01", "0--1", "-1-2", "1-2-3", "0:1"})
    CHECK_THROWS_AS(parse_pharaoh(bad), MalformedInput);
  CHECK_THROWS_AS(parse_pharaoh_hypothesis("0?1", 2, 2), MalformedInput);
  CHECK_THROWS_AS(parse_pharaoh_hypothesis("2-0", 2, 2), MalformedInput);
  CHECK_THROWS_AS(parse_pharaoh_gold("0-5", 2, 2), MalformedInput);
}

TEST_CASE("pharaoh round trip on random alignments") {
  Rng rng(13);
  for (int k = 0; k < 200; ++k) {
    const auto rows = 1 + rng.index(8), cols = 1 + rng.index(8);
    const auto h = testing::from_set(rows, cols, testing::random_links(rng, rows, cols, 0.3));
    CHECK(parse_pharaoh_hypothesis(emit_pharaoh(h), rows, cols) == h);

    const auto sure = testing::random_links(rng, rows, cols, 0.2);
    const auto extra = testing::random_links(rng, rows, cols, 0.2);
    const GoldAlignment g(rows, cols, testing::from_set(rows, cols, sure).links(),
                          testing::from_set(rows, cols, extra).links());
    const auto back = parse_pharaoh_gold(emit_pharaoh(g), rows, cols);
    CHECK(back.sure() == g.sure());
    CHECK(back.possible() == g.possible());
  }
}

TEST_CASE("score record text") {
  const ScoreRecord rec{3, testing::matrix(1, 2, {-1.5, 0.25}, ScoreSpace::Log)};
  CHECK(encode_score_record(rec) ==
        "{\"id\": 3, \"rows\": 1, \"cols\": 2, \"space\": \"log\", \"scores\": [[-1.5,0.25]]}");
  CHECK(decode_score_record(encode_score_record(rec)) == rec);
}

TEST_CASE("score record round trip is exact") {
  Rng rng(14);
  for (int k = 0; k < 200; ++k) {
    auto m = testing::random_matrix(rng, 6, k % 2 == 0);
    if (k % 3 == 0) {
      std::vector<double> v(m.rows() * m.cols());
      for (auto& x : v) x = std::log(rng.uniform() + 1e-300) * 1.0 / 3.0;
      m = SoftAlignment(m.rows(), m.cols(), ScoreSpace::Log, v);
    }
    const ScoreRecord rec{static_cast<std::uint64_t>(k), m};
    CHECK(decode_score_record(encode_score_record(rec)) == rec);
  }
}

TEST_CASE("malformed score records") {
  for (const char* bad :
       {"{", "{\"id\": 1}", "{\"id\": -1, \"rows\": 1, \"cols\": 1, \"space\": \"log\", \"scores\": [[0]]}",
        "{\"id\": 1, \"rows\": 2, \"cols\": 1, \"space\": \"log\", \"scores\": [[0]]}",
        "{\"id\": 1, \"rows\": 1, \"cols\": 2, \"space\": \"log\", \"scores\": [[0]]}",
        "{\"id\": 1, \"rows\": 1, \"cols\": 1, \"space\": \"log\", \"scores\": [[\"x\"]]}",
        "{\"id\": 1, \"rows\": 1, \"cols\": 1, \"space\": \"odds\", \"scores\": [[0]]}",
        "{\"id\": 1, \"rows\": 1, \"cols\": 1, \"space\": \"probability\", \"scores\": [[2]]}"})
    CHECK_THROWS_AS(decode_score_record(bad), Error);
}

TEST_CASE("score files") {
  testing::TempDir dir;
  const auto path = dir.file("scores.jsonl");
  const ScoreRecord a{0, testing::matrix(1, 1, {0.5})};
  const ScoreRecord b{1, testing::matrix(2, 1, {-1, -2}, ScoreSpace::LogitDiff)};
  testing::write_text(path, encode_score_record(a) + "\n\n" + encode_score_record(b) + "\n");
  ScoreFileReader reader(path);
  CHECK(*reader.next() == a);
  CHECK(*reader.next() == b);
  CHECK(!reader.next());
  CHECK(read_score_file(path).size() == 2);

  testing::write_text(path, encode_score_record(a) + "\n{\"id\": 1}\n");
  try {
    read_score_file(path);
    FAIL("expected MalformedInput");
  } catch (const MalformedInput& e) {
    CHECK(std::string(e.what()).find(path + ":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(ScoreFileReader(dir.file("missing")), MalformedInput);
}

TEST_CASE("attention files") {
  testing::TempDir dir;
  const auto path = dir.file("attn.jsonl");
  ScoreResponse r;
  r.id = 5;
  r.attention = AttentionPayload{{"ab@@", "cd"}, {"x"}, {0.4, 0.6}};
  testing::write_text(path, wire::encode_response(r) + "\n");
  const auto got = read_attention_file(path);
  REQUIRE(got.size() == 1);
  CHECK(got[0].first == 5);
  CHECK(got[0].second.src_subwords == std::vector<std::string>{"ab@@", "cd"});
  CHECK(got[0].second.matrix == std::vector<double>{0.4, 0.6});

  ScoreResponse plain;
  plain.id = 1;
  plain.sentence_logprob = -1.0;
  testing::write_text(path, wire::encode_response(plain) + "\n");
  CHECK_THROWS_AS(read_attention_file(path), MalformedInput);
}

TEST_CASE("line utilities") {
  testing::TempDir dir;
  const auto path = dir.file("lines");
  testing::write_text(path, "a\r\n\nb\n");
  CHECK(read_lines(path) == std::vector<std::string>{"a", "", "b"});
  CHECK(count_lines(path) == 3);
  testing::write_text(path, "no newline");
  CHECK(count_lines(path) == 1);
}
