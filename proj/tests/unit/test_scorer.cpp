// tests/unit/test_scorer.cpp

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

#include <cmath>
#include <thread>

#include "alignkit/ibm.hpp"
#include "alignkit/scorer.hpp"
#include "alignkit/wire.hpp"
#include "test_support.hpp"

using namespace alignkit;

namespace {

const std::string kMock = ALIGNKIT_MOCK_SCORER;

std::shared_ptr<ibm::LexiconModel> dictionary_model() {
  return std::make_shared<ibm::LexiconModel>(ibm::LexiconModel::from_entries(
      0.0, {{"a", "b", 1.0}, {"c", "d", 0.5}, {"c", "b", 0.5}}));
}

ScoreRequest request(std::uint64_t id, std::vector<std::string> src,
                     std::vector<std::string> tgt,
                     NeedSet need = {Need::SentenceLogprob, Need::TokenLogprobs}) {
  return {id, std::move(src), std::move(tgt), need};
}

std::string mock(const std::string& args) { return kMock + " " + args; }

}  // namespace

TEST_CASE("builtin scorer evaluates the lexicon sum") {
  BuiltinScorer s(dictionary_model());
  const auto r = s.score(request(0, {"a"}, {"b"}));
  REQUIRE(r.sentence_logprob);
  CHECK(*r.sentence_logprob == doctest::Approx(std::log(0.5)));
  REQUIRE(r.token_logprobs);
  CHECK(r.token_logprobs->size() == 1);
}

TEST_CASE("token scores add up to the sentence score") {
  BuiltinScorer s(dictionary_model());
  for (const auto& req : {request(1, {"a", "c"}, {"b", "d", "b"}), request(2, {"c"}, {"x", "d"})}) {
    const auto r = s.score(req);
    double sum = 0.0;
    for (double v : *r.token_logprobs) sum += v;
    CHECK(std::abs(sum - *r.sentence_logprob) <= 1e-6);
    CHECK_NOTHROW(check_response(req, r));
  }
}

TEST_CASE("builtin scorer refuses attention") {
  BuiltinScorer s(dictionary_model());
  try {
    s.score(request(0, {"a"}, {"b"}, {Need::Attention}));
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()) == "attention unsupported");
    CHECK(dynamic_cast<const CapabilityError*>(&e) != nullptr);
  }
}

TEST_CASE("requests are validated before scoring") {
  BuiltinScorer s(dictionary_model());
  std::vector<ScoreRequest> dup{request(1, {"a"}, {"b"}), request(1, {"c"}, {"d"})};
  CHECK_THROWS_AS(s.score_batch(dup), MalformedInput);
  CHECK_THROWS_AS(s.score(request(1, {}, {"b"})), MalformedInput);
  CHECK_THROWS_AS(s.score(request(1, {"a"}, {"b"}, {})), MalformedInput);
}

TEST_CASE("batch scoring equals one-by-one scoring") {
  BuiltinScorer s(dictionary_model());
  Rng rng(2);
  const std::vector<std::string> words{"a", "c", "b", "d", "z"};
  std::vector<ScoreRequest> batch;
  for (std::uint64_t id = 0; id < 40; ++id) {
    std::vector<std::string> src, tgt;
    for (std::size_t n = 1 + rng.index(4); n > 0; --n) src.push_back(words[rng.index(5)]);
    for (std::size_t n = 1 + rng.index(4); n > 0; --n) tgt.push_back(words[rng.index(5)]);
    batch.push_back(request(id * 3 + 1, src, tgt));
  }
  const auto all = s.score_batch(batch);
  REQUIRE(all.size() == batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) CHECK(all[k] == s.score(batch[k]));

  std::vector<ScoreRequest> same;
  for (std::uint64_t id = 0; id < 5; ++id) same.push_back(request(id, {"a", "c"}, {"b"}));
  const auto copies = s.score_batch(same);
  for (const auto& r : copies) {
    CHECK(r.sentence_logprob == copies[0].sentence_logprob);
    CHECK(r.token_logprobs == copies[0].token_logprobs);
  }
}

TEST_CASE("cache forwards each distinct request once") {
  auto inner = std::make_shared<testing::CountingScorer>();
  CachedScorer cached(inner);
  const auto r1 = cached.score(request(0, {"a"}, {"b"}));
  const auto r2 = cached.score(request(5, {"a"}, {"b"}));
  CHECK(inner->calls == 1);
  CHECK(r2.id == 5);
  CHECK(r1.sentence_logprob == r2.sentence_logprob);
  CHECK(cached.hits() == 1);

  cached.score(request(6, {"a"}, {"b"}, {Need::SentenceLogprob}));
  CHECK(inner->calls == 2);

  std::vector<ScoreRequest> batch{request(7, {"x"}, {"y"}), request(8, {"x"}, {"y"}),
                                  request(9, {"a"}, {"b"})};
  cached.score_batch(batch);
  CHECK(inner->calls == 3);
}

TEST_CASE("cache is transparent") {
  testing::CountingScorer plain;
  CachedScorer cached(std::make_shared<testing::CountingScorer>());
  Rng rng(8);
  for (std::uint64_t id = 0; id < 200; ++id) {
    std::vector<std::string> src{"s" + std::to_string(rng.index(4))};
    std::vector<std::string> tgt{"t" + std::to_string(rng.index(3)), "u"};
    const auto req = request(id, src, tgt);
    CHECK(cached.score(req) == plain.score(req));
  }
}

TEST_CASE("cache is safe under concurrent use") {
  auto inner = std::make_shared<testing::CountingScorer>();
  CachedScorer cached(inner);
  std::vector<std::jthread> pool;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      testing::CountingScorer reference;
      for (std::uint64_t k = 0; k < 200; ++k) {
        const auto req = request(k, {"s" + std::to_string(k % 7)}, {"t" + std::to_string((k + t) % 5)});
        if (!(cached.score(req) == reference.score(req))) ++mismatches;
      }
    });
  pool.clear();
  CHECK(mismatches == 0);
  CHECK(inner->calls <= 35);
}

TEST_CASE("wire records have the documented shape") {
  CHECK(wire::encode_handshake({Need::SentenceLogprob, Need::TokenLogprobs, Need::Attention}) ==
        R"({"alignkit_scorer": 1, "supports": ["sentence_logprob","token_logprobs","attention"]})");
  const ScoreRequest req{7, {"Choose", "the", "option"}, {"W\xc3\xa4hlen", "Sie"}, {Need::TokenLogprobs}};
  CHECK(wire::encode_request(req) ==
        "{\"id\": 7, \"src\": [\"Choose\",\"the\",\"option\"], \"tgt\": [\"W\xc3\xa4hlen\",\"Sie\"], "
        "\"need\": [\"token_logprobs\"]}");
  ScoreResponse resp;
  resp.id = 7;
  resp.token_logprobs = std::vector<double>{-1.2, -0.3};
  CHECK(wire::encode_response(resp) == R"({"id": 7, "token_logprobs": [-1.2, -0.3]})");
}

TEST_CASE("wire records round trip") {
  const auto caps = wire::decode_handshake(
      R"({"alignkit_scorer": 1, "supports": ["sentence_logprob","token_logprobs","attention"]})");
  CHECK(caps == NeedSet{Need::SentenceLogprob, Need::TokenLogprobs, Need::Attention});

  const ScoreRequest req{9, {"a", "\"q\""}, {"b"}, {Need::SentenceLogprob, Need::Attention}};
  const auto back = wire::decode_request(wire::encode_request(req));
  CHECK(back.id == 9);
  CHECK(back.src == req.src);
  CHECK(back.tgt == req.tgt);
  CHECK(back.need == req.need);

  ScoreResponse resp;
  resp.id = 3;
  resp.sentence_logprob = -0.1 - 0.2;
  resp.token_logprobs = std::vector<double>{-0.1, -0.2 + 1e-17, -1e-300};
  resp.attention = AttentionPayload{{"a", "b"}, {"x"}, {0.25, 0.75}};
  const auto decoded = wire::decode_response(wire::encode_response(resp));
  REQUIRE(std::holds_alternative<ScoreResponse>(decoded));
  CHECK(std::get<ScoreResponse>(decoded) == resp);

  const auto err = wire::decode_response(wire::encode_error({4, "bad \"input\""}));
  REQUIRE(std::holds_alternative<wire::ErrorRecord>(err));
  CHECK(std::get<wire::ErrorRecord>(err).id == 4u);
  CHECK(std::get<wire::ErrorRecord>(err).message == "bad \"input\"");
}

TEST_CASE("malformed wire records are rejected") {
  CHECK_THROWS_AS(wire::decode_handshake("{\"alignkit_scorer\": 2, \"supports\": []}"), BackendError);
  CHECK_THROWS_AS(wire::decode_handshake("{\"supports\": []}"), BackendError);
  CHECK_THROWS_AS(wire::decode_handshake("{\"alignkit_scorer\": 1, \"supports\": [\"x\"]}"), BackendError);
  CHECK_THROWS_AS(wire::decode_response("not json"), BackendError);
  CHECK_THROWS_AS(wire::decode_response("{\"sentence_logprob\": -1}"), BackendError);
  CHECK_THROWS_AS(wire::decode_response("{\"id\": -1, \"sentence_logprob\": -1}"), BackendError);
  CHECK_THROWS_AS(wire::decode_response("{\"id\": 1, \"sentence_logprob\": \"x\"}"), BackendError);
  CHECK_THROWS_AS(wire::decode_response("{\"id\": 1, \"token_logprobs\": [1, null]}"), BackendError);
  CHECK_THROWS_AS(wire::decode_response(
                      R"({"id": 1, "attention": {"src_subwords": ["a"], "tgt_subwords": ["x"], "matrix": [[0.5, 0.5]]}})"),
                  BackendError);
  CHECK_THROWS_AS(wire::decode_request("{\"id\": 1}"), MalformedInput);
}

TEST_CASE("responses are checked against their requests") {
  const auto req = request(1, {"a"}, {"b", "c"});
  ScoreResponse ok{1, -3.0, std::vector<double>{-1.0, -2.0}, std::nullopt};
  CHECK_NOTHROW(check_response(req, ok));
  auto missing = ok;
  missing.token_logprobs.reset();
  CHECK_THROWS_AS(check_response(req, missing), BackendError);
  auto short_list = ok;
  short_list.token_logprobs = std::vector<double>{-3.0};
  CHECK_THROWS_AS(check_response(req, short_list), BackendError);
  auto off = ok;
  off.sentence_logprob = -3.1;
  CHECK_THROWS_AS(check_response(req, off), BackendError);

  const auto att = request(2, {"a"}, {"b"}, {Need::Attention});
  ScoreResponse bad_rows{2, std::nullopt, std::nullopt, AttentionPayload{{"a", "b"}, {"x"}, {0.3, 0.3}}};
  CHECK_THROWS_AS(check_response(att, bad_rows), BackendError);
}

TEST_CASE("external scorer matches the builtin on the same lexicon") {
  testing::TempDir dir;
  const auto path = dir.file("m.ibm");
  ibm::save_model(*dictionary_model(), path);
  ExternalScorer ext(mock("--model " + path));
  BuiltinScorer builtin(std::make_shared<ibm::LexiconModel>(ibm::load_model(path)));
  CHECK(ext.capabilities() == NeedSet{Need::SentenceLogprob, Need::TokenLogprobs});
  std::vector<ScoreRequest> batch;
  for (std::uint64_t k = 0; k < 50; ++k)
    batch.push_back(request(k, {k % 2 ? "a" : "c", "z"}, {"b", k % 3 ? "d" : "b"}));
  CHECK(ext.score_batch(batch) == builtin.score_batch(batch));
  CHECK(ext.score(batch[3]) == builtin.score(batch[3]));
}

TEST_CASE("external replies are matched by id") {
  ExternalScorer ext(mock("--mode reverse"));
  testing::CountingScorer reference;
  std::vector<ScoreRequest> batch;
  for (std::uint64_t k = 0; k < 30; ++k)
    batch.push_back(request(100 - k, {"s" + std::to_string(k)}, {"t", "u"}));
  const auto got = ext.score_batch(batch);
  REQUIRE(got.size() == batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    CHECK(got[k].id == batch[k].id);
    CHECK(got[k] == reference.score(batch[k]));
  }
}

TEST_CASE("external in-flight window") {
  ExternalScorerOptions opts;
  opts.max_in_flight = 3;
  ExternalScorer ext(mock(""), opts);
  testing::CountingScorer reference;
  std::vector<ScoreRequest> batch;
  for (std::uint64_t k = 0; k < 20; ++k) batch.push_back(request(k, {"s" + std::to_string(k)}, {"t"}));
  const auto got = ext.score_batch(batch);
  for (std::size_t k = 0; k < batch.size(); ++k) CHECK(got[k] == reference.score(batch[k]));
  opts.max_in_flight = 0;
  CHECK_THROWS_AS(ExternalScorer(mock(""), opts), ConfigError);
}

TEST_CASE("external protocol violations are diagnosed") {
  const std::vector<ScoreRequest> batch{request(1, {"a"}, {"b"}), request(2, {"c"}, {"d"})};
  const auto fails_with = [&](const std::string& mode, const std::string& fragment) {
    ExternalScorer ext(mock("--mode " + mode));
    try {
      ext.score_batch(batch);
      FAIL("expected failure for mode " << mode);
    } catch (const BackendError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
    // The child is shut down after a failure; later calls fail fast.
    CHECK_THROWS_AS(ext.score_batch(batch), BackendError);
  };
  fails_with("bad-id", "unknown id 1001");
  fails_with("dup-id", "duplicate reply for id 1");
  fails_with("non-numeric", "non-numeric sentence_logprob");
  fails_with("bad-sum", "do not sum");
  fails_with("error", "model exploded");
  fails_with("die", "exited before answering id(s) 1");
}

TEST_CASE("external scorer death names the last protocol line") {
  ExternalScorer ext(mock("--mode die"));
  try {
    ext.score(request(4, {"a"}, {"b"}));
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()).find("alignkit_scorer") != std::string::npos);
  }
}

TEST_CASE("external handshake problems") {
  CHECK_THROWS_AS(ExternalScorer(mock("--mode garbage-handshake")), BackendError);
  CHECK_THROWS_AS(ExternalScorer(mock("--mode old-version")), BackendError);
  CHECK_THROWS_AS(ExternalScorer("exit 0"), BackendError);
  ExternalScorerOptions opts;
  opts.timeout = std::chrono::milliseconds(200);
  CHECK_THROWS_AS(ExternalScorer(mock("--mode silent"), opts), TimeoutError);
}

TEST_CASE("external timeouts") {
  ExternalScorerOptions opts;
  opts.timeout = std::chrono::milliseconds(200);
  ExternalScorer ext(mock("--mode stall"), opts);
  try {
    ext.score(request(42, {"a"}, {"b"}));
    FAIL("expected a timeout");
  } catch (const TimeoutError& e) {
    CHECK(std::string(e.what()).find("42") != std::string::npos);
  }
}

TEST_CASE("external capability negotiation") {
  ExternalScorer ext(mock("--supports sentence_logprob"));
  CHECK(ext.capabilities() == NeedSet{Need::SentenceLogprob});
  CHECK_THROWS_AS(ext.score(request(1, {"a"}, {"b"}, {Need::TokenLogprobs})), CapabilityError);
  // A client-side refusal leaves the child usable.
  CHECK_NOTHROW(ext.score(request(2, {"a"}, {"b"}, {Need::SentenceLogprob})));
}

TEST_CASE("external scorer shared between threads") {
  auto ext = std::make_shared<ExternalScorer>(mock(""));
  std::atomic<int> mismatches{0};
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 4; ++t)
      pool.emplace_back([&, t] {
        testing::CountingScorer reference;
        for (std::uint64_t k = 0; k < 25; ++k) {
          const auto req = request(k, {"s" + std::to_string(t)}, {"t" + std::to_string(k)});
          if (!(ext->score(req) == reference.score(req))) ++mismatches;
        }
      });
  }
  CHECK(mismatches == 0);
}

TEST_CASE("scorer specs") {
  testing::TempDir dir;
  const auto path = dir.file("m.ibm");
  ibm::save_model(*dictionary_model(), path);
  CHECK(dynamic_cast<BuiltinScorer*>(make_scorer("builtin:" + path).get()) != nullptr);
  CHECK(dynamic_cast<ExternalScorer*>(make_scorer("external:" + mock("")).get()) != nullptr);
  CHECK_THROWS_AS(make_scorer("remote:x"), ConfigError);
  CHECK_THROWS_AS(make_scorer("builtin:" + dir.file("missing")), MalformedInput);
}

TEST_CASE("need names") {
  for (auto n : {Need::SentenceLogprob, Need::TokenLogprobs, Need::Attention})
    CHECK(parse_need(to_string(n)) == n);
  CHECK_THROWS_AS(parse_need("logits"), ConfigError);
}
