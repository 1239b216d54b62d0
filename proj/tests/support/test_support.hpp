// tests/support/test_support.hpp

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

// Helpers shared by the unit and acceptance tests.  The oracles here are
// written from the definitions with plain loops and share no code with the
// library beyond its value types.

#ifndef ALIGNKIT_TESTS_SUPPORT_HPP_
#define ALIGNKIT_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "alignkit/core.hpp"
#include "alignkit/random.hpp"
#include "alignkit/scorer.hpp"

namespace testing {

using LinkSet = std::set<std::pair<std::size_t, std::size_t>>;

inline LinkSet to_set(const alignkit::HardAlignment& a) {
  LinkSet s;
  for (const auto& l : a.links()) s.emplace(l.src, l.tgt);
  return s;
}

inline alignkit::HardAlignment from_set(std::size_t rows, std::size_t cols,
                                        const LinkSet& s) {
  std::vector<alignkit::Link> links;
  for (const auto& [i, j] : s)
    links.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
  return {rows, cols, std::move(links)};
}

inline alignkit::SoftAlignment matrix(std::size_t rows, std::size_t cols,
                                      std::vector<double> v,
                                      alignkit::ScoreSpace space = alignkit::ScoreSpace::Probability) {
  return {rows, cols, space, std::move(v)};
}

// Random matrix drawn from a small value grid half of the time so that
// ties occur often.
inline alignkit::SoftAlignment random_matrix(alignkit::Rng& rng, std::size_t max_dim = 7,
                                             bool signed_values = false) {
  const std::size_t rows = 1 + rng.index(max_dim);
  const std::size_t cols = 1 + rng.index(max_dim);
  const bool grid = rng.bernoulli(0.5);
  std::vector<double> v(rows * cols);
  for (auto& x : v) {
    x = grid ? static_cast<double>(rng.index(5)) / 4.0 : rng.uniform();
    if (signed_values) x = 4.0 * x - 2.0;
  }
  return {rows, cols,
          signed_values ? alignkit::ScoreSpace::LogitDiff : alignkit::ScoreSpace::Probability,
          std::move(v)};
}

inline alignkit::SoftAlignment transpose(const alignkit::SoftAlignment& m) {
  std::vector<double> v(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) v[j * m.rows() + i] = m(i, j);
  return {m.cols(), m.rows(), m.space(), std::move(v)};
}

inline LinkSet transpose(const LinkSet& s) {
  LinkSet t;
  for (const auto& [i, j] : s) t.emplace(j, i);
  return t;
}

// Extractor oracles, straight from the threshold formulas.
inline LinkSet oracle_a1(const alignkit::SoftAlignment& m) {
  LinkSet s;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double best = m(i, 0);
    for (std::size_t j = 1; j < m.cols(); ++j) best = std::max(best, m(i, j));
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) == best) s.emplace(i, j);
  }
  return s;
}

inline LinkSet oracle_a2(const alignkit::SoftAlignment& m, double alpha) {
  LinkSet s;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) >= alpha) s.emplace(i, j);
  return s;
}

inline LinkSet oracle_a3(const alignkit::SoftAlignment& m, double alpha) {
  LinkSet s;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double best = m(i, 0);
    for (std::size_t j = 1; j < m.cols(); ++j) best = std::max(best, m(i, j));
    const double threshold = std::min(best * alpha, best / alpha);
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) >= threshold) s.emplace(i, j);
  }
  return s;
}

inline LinkSet oracle_a4(const alignkit::SoftAlignment& m, double alpha) {
  LinkSet s;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double best = m(0, j);
    for (std::size_t i = 1; i < m.rows(); ++i) best = std::max(best, m(i, j));
    const double threshold = std::min(best * alpha, best / alpha);
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (m(i, j) >= threshold) s.emplace(i, j);
  }
  return s;
}

struct Counts {
  std::size_t a = 0, s = 0, a_s = 0, a_p = 0;
};

// Counts by scanning every cell of the sentence grid.
inline Counts brute_counts(std::size_t rows, std::size_t cols, const LinkSet& hyp,
                           const LinkSet& sure, const LinkSet& possible) {
  Counts c;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const bool in_a = hyp.count({i, j}) > 0;
      const bool in_s = sure.count({i, j}) > 0;
      const bool in_p = in_s || possible.count({i, j}) > 0;
      c.a += in_a;
      c.s += in_s;
      c.a_s += in_a && in_s;
      c.a_p += in_a && in_p;
    }
  }
  return c;
}

inline double oracle_precision(const Counts& c) {
  return c.a == 0 ? 1.0 : static_cast<double>(c.a_p) / static_cast<double>(c.a);
}
inline double oracle_recall(const Counts& c) {
  return static_cast<double>(c.a_s) / static_cast<double>(c.s);
}
inline double oracle_aer(const Counts& c) {
  return 1.0 - static_cast<double>(c.a_s + c.a_p) / static_cast<double>(c.s + c.a);
}

inline LinkSet random_links(alignkit::Rng& rng, std::size_t rows, std::size_t cols,
                            double density) {
  LinkSet s;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (rng.bernoulli(density)) s.emplace(i, j);
  return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("alignkit-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// In-process backend that counts what it is asked.  Sentence and token
// scores are a deterministic function of the strings.
class CountingScorer : public alignkit::Scorer {
 public:
  explicit CountingScorer(alignkit::NeedSet caps = {alignkit::Need::SentenceLogprob,
                                                    alignkit::Need::TokenLogprobs})
      : caps_(caps) {}

  alignkit::NeedSet capabilities() const override { return caps_; }

  std::vector<alignkit::ScoreResponse> score_batch(
      std::span<const alignkit::ScoreRequest> requests) override {
    check_requests(requests);
    ++batches;
    std::vector<alignkit::ScoreResponse> out;
    for (const auto& r : requests) {
      ++calls;
      seen.push_back(r);
      alignkit::ScoreResponse resp;
      resp.id = r.id;
      std::vector<double> tok;
      for (std::size_t j = 0; j < r.tgt.size(); ++j) tok.push_back(token_score(r, j));
      double sum = 0.0;
      for (double t : tok) sum += t;
      if (r.need.contains(alignkit::Need::TokenLogprobs)) resp.token_logprobs = tok;
      if (r.need.contains(alignkit::Need::SentenceLogprob)) resp.sentence_logprob = sum;
      out.push_back(std::move(resp));
    }
    return out;
  }

  static double token_score(const alignkit::ScoreRequest& r, std::size_t j) {
    std::size_t h = std::hash<std::string>{}(r.tgt[j]) % 97;
    for (const auto& s : r.src) h = (h * 31 + std::hash<std::string>{}(s) % 89) % 1009;
    h = (h * 7 + r.src.size() * 13 + r.tgt.size()) % 1009;
    return -0.01 - static_cast<double>(h) / 100.0;
  }

  std::size_t calls = 0;
  std::size_t batches = 0;
  std::vector<alignkit::ScoreRequest> seen;

 private:
  alignkit::NeedSet caps_;
};

}  // namespace testing

#endif  // ALIGNKIT_TESTS_SUPPORT_HPP_
