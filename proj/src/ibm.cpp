// src/ibm.cpp

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

#include "alignkit/ibm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "alignkit/error.hpp"
#include "alignkit/parallel.hpp"
#include "alignkit/text.hpp"

namespace alignkit::ibm {

// Vocab

WordId Vocab::add(std::string_view word) {
  const auto it = ids_.find(std::string(word));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  ids_.emplace(std::string(word), id);
  words_.emplace_back(word);
  return id;
}

WordId Vocab::find(std::string_view word, WordId unk) const {
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? unk : it->second;
}

// LexiconModel

LexiconModel::LexiconModel() : LexiconModel(0.0) {}

LexiconModel::LexiconModel(double diagonal_tension)
    : diagonal_tension_(diagonal_tension) {
  if (!(diagonal_tension >= 0.0) || !std::isfinite(diagonal_tension))
    throw ConfigError("diagonal tension must be a finite value >= 0");
  grow(src_vocab_.add(kNullToken));
  grow(src_vocab_.add(kUnkToken));
  tgt_vocab_.add(kUnkToken);
}

LexiconModel LexiconModel::from_entries(
    double diagonal_tension, const std::vector<LexiconEntry>& entries) {
  LexiconModel model(diagonal_tension);
  for (const auto& e : entries) {
    if (!(e.prob >= 0.0) || !std::isfinite(e.prob))
      throw MalformedInput("invalid probability for " + e.src + " -> " +
                           e.tgt);
    const auto s = model.add_src_word(e.src);
    const auto t = model.add_tgt_word(e.tgt);
    model.set_prob(s, t, e.prob);
  }
  return model;
}

WordId LexiconModel::grow(WordId id) {
  if (table_.size() <= id) table_.resize(id + 1);
  return id;
}

double LexiconModel::prob(WordId src, WordId tgt) const {
  if (src >= table_.size()) return 0.0;
  const auto& row = table_[src];
  const auto it = row.find(tgt);
  return it == row.end() ? 0.0 : it->second;
}

void LexiconModel::set_prob(WordId src, WordId tgt, double p) {
  grow(src);
  table_[src][tgt] = p;
}

std::vector<LexiconEntry> LexiconModel::entries() const {
  std::vector<LexiconEntry> out;
  for (WordId s = 0; s < table_.size(); ++s)
    for (const auto& [t, p] : table_[s])
      out.push_back({src_vocab_.word(s), tgt_vocab_.word(t), p});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.src != b.src ? a.src < b.src : a.tgt < b.tgt;
  });
  return out;
}

double LexiconModel::normalization_error() const {
  double worst = 0.0;
  for (const auto& row : table_) {
    if (row.empty()) continue;
    double sum = 0.0;
    for (const auto& [t, p] : row) sum += p;
    worst = std::max(worst, std::abs(1.0 - sum));
  }
  return worst;
}

// Alignment prior

void alignment_prior(std::size_t src_len, std::size_t tgt_len, std::size_t j,
                     double diagonal_tension, std::span<double> out) {
  const double uniform = 1.0 / static_cast<double>(src_len + 1);
  out[0] = uniform;
  if (diagonal_tension == 0.0) {
    for (std::size_t i = 0; i < src_len; ++i) out[1 + i] = uniform;
    return;
  }
  const double jpos = static_cast<double>(j) / static_cast<double>(tgt_len);
  double norm = 0.0;
  for (std::size_t i = 0; i < src_len; ++i) {
    const double ipos = static_cast<double>(i) / static_cast<double>(src_len);
    out[1 + i] = std::exp(-diagonal_tension * std::abs(ipos - jpos));
    norm += out[1 + i];
  }
  const double share = static_cast<double>(src_len) * uniform / norm;
  for (std::size_t i = 0; i < src_len; ++i) out[1 + i] *= share;
}

namespace {

struct EncodedPair {
  std::vector<WordId> src;  // NULL first
  std::vector<WordId> tgt;
};

EncodedPair encode(const LexiconModel& model, const SentencePair& pair) {
  EncodedPair e;
  e.src.reserve(pair.src.size() + 1);
  e.src.push_back(LexiconModel::kNullId);
  for (const auto& t : pair.src) e.src.push_back(model.src_id(t.text));
  e.tgt.reserve(pair.tgt.size());
  for (const auto& t : pair.tgt) e.tgt.push_back(model.tgt_id(t.text));
  return e;
}

// Unnormalized alignment weights prior * t for target j; returns their sum.
double column_weights(const LexiconModel& model, const EncodedPair& e,
                      std::size_t j, std::span<double> w) {
  const auto src_len = e.src.size() - 1;
  alignment_prior(src_len, e.tgt.size(), j, model.diagonal_tension(), w);
  double z = 0.0;
  for (std::size_t k = 0; k < e.src.size(); ++k) {
    w[k] *= std::max(model.prob(e.src[k], e.tgt[j]), kProbFloor);
    z += w[k];
  }
  return z;
}

constexpr std::size_t kEmChunks = 8;

}  // namespace

TrainedLexicon train_em(std::span<const SentencePair> corpus, int iterations,
                        double diagonal_tension,
                        const std::function<void(const EmIteration&)>& on_iteration) {
  if (corpus.empty()) throw MalformedInput("train_em: empty corpus");
  if (iterations < 1) throw ConfigError("train_em: iterations must be >= 1");

  TrainedLexicon result{LexiconModel(diagonal_tension), {}};
  auto& model = result.model;

  // Sparse parameter slots, one per co-occurring (source, target) pair.
  std::unordered_map<std::uint64_t, std::uint32_t> slot_of;
  std::vector<WordId> slot_src;
  std::vector<WordId> slot_tgt;
  std::vector<EncodedPair> encoded;
  std::vector<std::vector<std::uint32_t>> slots;  // per pair, (|S|+1) x |T|
  encoded.reserve(corpus.size());
  slots.reserve(corpus.size());
  for (const auto& pair : corpus) {
    pair.validate();
    EncodedPair e;
    e.src.push_back(LexiconModel::kNullId);
    for (const auto& t : pair.src) e.src.push_back(model.add_src_word(t.text));
    for (const auto& t : pair.tgt) e.tgt.push_back(model.add_tgt_word(t.text));
    std::vector<std::uint32_t> s(e.src.size() * e.tgt.size());
    for (std::size_t i = 0; i < e.src.size(); ++i) {
      for (std::size_t j = 0; j < e.tgt.size(); ++j) {
        const auto key = (static_cast<std::uint64_t>(e.src[i]) << 32) | e.tgt[j];
        auto [it, inserted] =
            slot_of.emplace(key, static_cast<std::uint32_t>(slot_src.size()));
        if (inserted) {
          slot_src.push_back(e.src[i]);
          slot_tgt.push_back(e.tgt[j]);
        }
        s[i * e.tgt.size() + j] = it->second;
      }
    }
    encoded.push_back(std::move(e));
    slots.push_back(std::move(s));
  }
  const auto n_slots = slot_src.size();
  const auto n_src = model.src_vocab().size();

  std::vector<double> prob(n_slots);
  {
    std::vector<std::size_t> fanout(n_src, 0);
    for (auto s : slot_src) ++fanout[s];
    for (std::size_t k = 0; k < n_slots; ++k)
      prob[k] = 1.0 / static_cast<double>(fanout[slot_src[k]]);
  }

  const auto n_chunks = std::min(kEmChunks, corpus.size());
  std::vector<std::vector<double>> chunk_counts(n_chunks);
  std::vector<double> chunk_ll(n_chunks);

  for (int iter = 1; iter <= iterations; ++iter) {
    parallel_for(n_chunks, [&](std::size_t c) {
      auto& counts = chunk_counts[c];
      counts.assign(n_slots, 0.0);
      double ll = 0.0;
      const auto begin = corpus.size() * c / n_chunks;
      const auto end = corpus.size() * (c + 1) / n_chunks;
      std::vector<double> w;
      for (auto p = begin; p < end; ++p) {
        const auto& e = encoded[p];
        const auto& s = slots[p];
        const auto src_len = e.src.size() - 1;
        const auto tgt_len = e.tgt.size();
        w.resize(e.src.size());
        for (std::size_t j = 0; j < tgt_len; ++j) {
          alignment_prior(src_len, tgt_len, j, diagonal_tension, w);
          double z = 0.0;
          for (std::size_t i = 0; i < e.src.size(); ++i) {
            w[i] *= std::max(prob[s[i * tgt_len + j]], kProbFloor);
            z += w[i];
          }
          ll += std::log(z);
          for (std::size_t i = 0; i < e.src.size(); ++i)
            counts[s[i * tgt_len + j]] += w[i] / z;
        }
      }
      chunk_ll[c] = ll;
    });

    double ll = 0.0;
    std::vector<double> counts(n_slots, 0.0);
    for (std::size_t c = 0; c < n_chunks; ++c) {
      ll += chunk_ll[c];
      for (std::size_t k = 0; k < n_slots; ++k) counts[k] += chunk_counts[c][k];
    }
    std::vector<double> totals(n_src, 0.0);
    for (std::size_t k = 0; k < n_slots; ++k) totals[slot_src[k]] += counts[k];
    for (std::size_t k = 0; k < n_slots; ++k)
      prob[k] = counts[k] / totals[slot_src[k]];

    result.log_likelihood.push_back(ll);
    if (on_iteration) on_iteration({iter, ll});
  }

  for (std::size_t k = 0; k < n_slots; ++k)
    model.set_prob(slot_src[k], slot_tgt[k], prob[k]);
  return result;
}

double corpus_log_likelihood(const LexiconModel& model,
                             std::span<const SentencePair> corpus) {
  double ll = 0.0;
  std::vector<double> w;
  for (const auto& pair : corpus) {
    const auto e = encode(model, pair);
    w.resize(e.src.size());
    for (std::size_t j = 0; j < e.tgt.size(); ++j)
      ll += std::log(column_weights(model, e, j, w));
  }
  return ll;
}

SoftAlignment posterior_matrix(const LexiconModel& model,
                               const SentencePair& pair) {
  pair.validate();
  const auto e = encode(model, pair);
  SoftAlignment out(pair.src.size(), pair.tgt.size(), ScoreSpace::Probability);
  std::vector<double> w(e.src.size());
  for (std::size_t j = 0; j < e.tgt.size(); ++j) {
    const double z = column_weights(model, e, j, w);
    for (std::size_t i = 0; i < pair.src.size(); ++i)
      out.set(i, j, std::min(1.0, w[1 + i] / z));
  }
  return out;
}

HardAlignment viterbi_align(const LexiconModel& model,
                            const SentencePair& pair) {
  pair.validate();
  const auto e = encode(model, pair);
  std::vector<Link> links;
  std::vector<double> w(e.src.size());
  for (std::size_t j = 0; j < e.tgt.size(); ++j) {
    column_weights(model, e, j, w);
    std::size_t best = 0;
    for (std::size_t i = 1; i < pair.src.size(); ++i)
      if (w[1 + i] > w[1 + best]) best = i;
    if (w[0] > w[1 + best]) continue;
    links.push_back({static_cast<std::uint32_t>(best),
                     static_cast<std::uint32_t>(j)});
  }
  return HardAlignment(pair.src.size(), pair.tgt.size(), std::move(links));
}

SentenceScore sentence_logprob(const LexiconModel& model,
                               std::span<const std::string> src,
                               std::span<const std::string> tgt) {
  if (src.empty() || tgt.empty())
    throw MalformedInput("sentence_logprob: empty sentence");
  std::vector<WordId> src_ids{LexiconModel::kNullId};
  for (const auto& s : src) src_ids.push_back(model.src_id(s));
  SentenceScore out;
  out.token_logprobs.reserve(tgt.size());
  std::vector<double> prior(src_ids.size());
  for (std::size_t j = 0; j < tgt.size(); ++j) {
    alignment_prior(src.size(), tgt.size(), j, model.diagonal_tension(), prior);
    const auto t = model.tgt_id(tgt[j]);
    double sum = 0.0;
    for (std::size_t k = 0; k < src_ids.size(); ++k)
      sum += prior[k] * model.prob(src_ids[k], t);
    const double lp = std::log(std::max(sum, kProbFloor));
    out.token_logprobs.push_back(lp);
    out.sentence_logprob += lp;
  }
  return out;
}

// Persistence

namespace {
constexpr std::string_view kModelHeader = "ALIGNKIT-IBM v1 lambda=";
}

void save_model(const LexiconModel& model, std::ostream& out) {
  out << kModelHeader << format_real17(model.diagonal_tension()) << '\n';
  for (const auto& e : model.entries())
    out << e.src << '\t' << e.tgt << '\t' << format_real17(e.prob) << '\n';
}

LexiconModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kModelHeader))
    throw MalformedInput("not an alignkit IBM model (bad header)");
  const double lambda = parse_real(std::string_view(line).substr(kModelHeader.size()));
  std::vector<LexiconEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, "\t");
    if (fields.size() != 3)
      throw MalformedInput("IBM model line " + std::to_string(line_no) +
                           ": expected 3 tab-separated fields");
    entries.push_back({fields[0], fields[1], parse_real(fields[2])});
  }
  return LexiconModel::from_entries(lambda, entries);
}

void save_model(const LexiconModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MalformedInput("cannot write " + path);
  save_model(model, out);
}

LexiconModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot read " + path);
  return load_model(in);
}

}  // namespace alignkit::ibm
