// src/corpus.cpp

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

#include "alignkit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "alignkit/error.hpp"
#include "alignkit/formats.hpp"
#include "alignkit/random.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

void check_line_counts(const std::vector<std::string>& paths) {
  if (paths.empty()) return;
  std::vector<std::size_t> counts;
  for (const auto& p : paths) counts.push_back(count_lines(p));
  if (std::adjacent_find(counts.begin(), counts.end(),
                         std::not_equal_to<>()) == counts.end())
    return;
  std::string msg = "line counts differ:";
  for (std::size_t k = 0; k < paths.size(); ++k)
    msg += " " + paths[k] + "=" + std::to_string(counts[k]);
  throw MalformedInput(msg);
}

namespace {

std::vector<Token> tokenize(const std::string& line,
                            const std::string* subword_line,
                            const std::string& sep, const std::string& where) {
  const auto words = split_whitespace(line);
  if (words.empty()) throw MalformedInput(where + ": empty sentence");
  std::vector<Token> tokens;
  tokens.reserve(words.size());
  if (subword_line == nullptr) {
    for (const auto& w : words) tokens.emplace_back(w);
    return tokens;
  }
  const auto pieces = split_whitespace(*subword_line);
  if (pieces.size() != words.size())
    throw MalformedInput(where + ": " + std::to_string(words.size()) +
                         " tokens but " + std::to_string(pieces.size()) +
                         " segmented tokens");
  for (std::size_t k = 0; k < words.size(); ++k) {
    try {
      tokens.emplace_back(words[k], split(pieces[k], sep));
    } catch (const MalformedInput& e) {
      throw MalformedInput(where + ": " + e.what());
    }
  }
  return tokens;
}

std::string join_subwords(const Token& t, const std::string& sep) {
  if (!t.has_subwords()) return t.text;
  std::string out;
  for (std::size_t k = 0; k < t.subwords->size(); ++k) {
    if (k) out += sep;
    out += (*t.subwords)[k];
  }
  return out;
}

}  // namespace

Corpus load_corpus(const CorpusFiles& files) {
  if (files.subwords_src.has_value() != files.subwords_tgt.has_value())
    throw ConfigError("subword files must be given for both sides or neither");
  std::vector<std::string> paths{files.src, files.tgt};
  if (files.subwords_src) {
    paths.push_back(*files.subwords_src);
    paths.push_back(*files.subwords_tgt);
  }
  if (files.gold) paths.push_back(*files.gold);
  check_line_counts(paths);

  const auto src = read_lines(files.src);
  const auto tgt = read_lines(files.tgt);
  std::vector<std::string> sub_src, sub_tgt;
  if (files.subwords_src) {
    sub_src = read_lines(*files.subwords_src);
    sub_tgt = read_lines(*files.subwords_tgt);
  }
  Corpus corpus;
  corpus.pairs.reserve(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) {
    SentencePair pair;
    pair.id = k;
    pair.src = tokenize(src[k], files.subwords_src ? &sub_src[k] : nullptr,
                        files.subword_separator,
                        files.src + ":" + std::to_string(k + 1));
    pair.tgt = tokenize(tgt[k], files.subwords_tgt ? &sub_tgt[k] : nullptr,
                        files.subword_separator,
                        files.tgt + ":" + std::to_string(k + 1));
    corpus.pairs.push_back(std::move(pair));
  }
  if (files.gold) corpus.gold = load_gold(*files.gold, corpus.pairs);
  return corpus;
}

std::vector<GoldAlignment> load_gold(const std::string& path,
                                     const std::vector<SentencePair>& pairs) {
  const auto lines = read_lines(path);
  if (lines.size() != pairs.size())
    throw MalformedInput(path + " has " + std::to_string(lines.size()) +
                         " lines for " + std::to_string(pairs.size()) +
                         " sentence pairs");
  std::vector<GoldAlignment> gold;
  gold.reserve(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    try {
      gold.push_back(parse_pharaoh_gold(lines[k], pairs[k].src.size(),
                                        pairs[k].tgt.size()));
    } catch (const MalformedInput& e) {
      throw MalformedInput(path + ":" + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return gold;
}

void write_corpus(const CorpusFiles& files, const std::vector<SentencePair>& pairs,
                  const std::vector<GoldAlignment>& gold) {
  const auto open = [](const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MalformedInput("cannot write " + path);
    return out;
  };
  auto src = open(files.src);
  auto tgt = open(files.tgt);
  std::ofstream sub_src, sub_tgt, gold_out;
  if (files.subwords_src) sub_src = open(*files.subwords_src);
  if (files.subwords_tgt) sub_tgt = open(*files.subwords_tgt);
  if (files.gold) gold_out = open(*files.gold);
  const auto write_side = [](std::ostream& out, const std::vector<Token>& toks,
                             const std::string* sep) {
    for (std::size_t k = 0; k < toks.size(); ++k) {
      if (k) out << ' ';
      out << (sep ? join_subwords(toks[k], *sep) : toks[k].text);
    }
    out << '\n';
  };
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    write_side(src, pairs[k].src, nullptr);
    write_side(tgt, pairs[k].tgt, nullptr);
    if (files.subwords_src) write_side(sub_src, pairs[k].src, &files.subword_separator);
    if (files.subwords_tgt) write_side(sub_tgt, pairs[k].tgt, &files.subword_separator);
    if (files.gold && k < gold.size()) gold_out << emit_pharaoh(gold[k]) << '\n';
  }
}

namespace {

std::string random_word(Rng& rng, std::size_t length) {
  std::string w;
  for (std::size_t k = 0; k < length; ++k)
    w += static_cast<char>('a' + rng.index(26));
  return w;
}

Token synthetic_token(const std::string& word, bool subwords) {
  if (!subwords) return Token(word);
  std::vector<std::string> pieces;
  for (std::size_t k = 0; k < word.size(); k += 3) pieces.push_back(word.substr(k, 3));
  return Token(word, std::move(pieces));
}

std::vector<std::pair<std::string, std::string>> make_dictionary(
    const SyntheticConfig& config, Rng& rng) {
  std::set<std::string> src_seen, tgt_seen;
  std::vector<std::pair<std::string, std::string>> dict;
  while (dict.size() < config.vocabulary) {
    auto src = random_word(rng, 3 + rng.index(6));
    if (!src_seen.insert(src).second) continue;
    std::string tgt;
    do {
      if (rng.bernoulli(config.cognate_probability)) {
        tgt = src;
        if (rng.bernoulli(0.5))
          tgt[rng.index(tgt.size())] = static_cast<char>('a' + rng.index(26));
      } else {
        const auto len = src.size() - 1 + rng.index(3);
        tgt = random_word(rng, len);
      }
    } while (!tgt_seen.insert(tgt).second);
    dict.emplace_back(std::move(src), std::move(tgt));
  }
  return dict;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config) {
  if (config.vocabulary < config.max_length || config.min_length < 1 ||
      config.min_length > config.max_length)
    throw ConfigError("synthetic corpus: need 1 <= min_length <= max_length <= vocabulary");
  Rng rng(config.seed);
  SyntheticCorpus out;
  out.dictionary = make_dictionary(config, rng);

  constexpr std::size_t kFillers = 4;
  constexpr auto kFiller = static_cast<std::size_t>(-1);
  for (std::size_t p = 0; p < config.pairs; ++p) {
    const auto len =
        config.min_length + rng.index(config.max_length - config.min_length + 1);
    std::vector<std::size_t> words(config.vocabulary);
    for (std::size_t k = 0; k < words.size(); ++k) words[k] = k;
    rng.shuffle(words);
    words.resize(len);

    std::vector<std::size_t> order(len);
    for (std::size_t k = 0; k < len; ++k) order[k] = k;
    for (std::size_t k = 0; k + 1 < len; ++k)
      if (rng.bernoulli(config.swap_probability)) std::swap(order[k], order[k + 1]);
    // target slots hold a source position, or kFiller
    std::vector<std::size_t> slots;
    for (auto o : order) {
      if (rng.bernoulli(config.filler_probability)) slots.push_back(kFiller);
      slots.push_back(o);
    }

    SentencePair pair;
    pair.id = p;
    std::vector<Link> links;
    for (auto w : words)
      pair.src.push_back(synthetic_token(out.dictionary[w].first, config.subwords));
    for (std::size_t j = 0; j < slots.size(); ++j) {
      if (slots[j] == kFiller) {
        pair.tgt.push_back(synthetic_token(
            "q" + std::to_string(rng.index(kFillers)), config.subwords));
        continue;
      }
      pair.tgt.push_back(
          synthetic_token(out.dictionary[words[slots[j]]].second, config.subwords));
      links.push_back({static_cast<std::uint32_t>(slots[j]),
                       static_cast<std::uint32_t>(j)});
    }
    out.corpus.gold.emplace_back(pair.src.size(), pair.tgt.size(), std::move(links),
                                 std::vector<Link>{});
    out.corpus.pairs.push_back(std::move(pair));
  }
  return out;
}

Corpus reverse_corpus(const Corpus& corpus) {
  Corpus out;
  out.pairs.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) {
    SentencePair r;
    r.id = p.id;
    r.src = p.tgt;
    r.tgt = p.src;
    out.pairs.push_back(std::move(r));
  }
  for (const auto& g : corpus.gold) {
    std::vector<Link> sure, possible;
    for (const auto& l : g.sure().links()) sure.push_back({l.tgt, l.src});
    for (const auto& l : g.possible().links()) possible.push_back({l.tgt, l.src});
    out.gold.emplace_back(g.cols(), g.rows(), std::move(sure), std::move(possible));
  }
  return out;
}

}  // namespace alignkit
