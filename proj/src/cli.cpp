// src/cli.cpp

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

#include "alignkit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>

#include "alignkit/corpus.hpp"
#include "alignkit/ensemble.hpp"
#include "alignkit/error.hpp"
#include "alignkit/extract.hpp"
#include "alignkit/formats.hpp"
#include "alignkit/ibm.hpp"
#include "alignkit/nmt_scores.hpp"
#include "alignkit/scorer.hpp"
#include "alignkit/text.hpp"

#ifndef ALIGNKIT_VERSION
#define ALIGNKIT_VERSION "0.0.0"
#endif

namespace alignkit::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const CapabilityError*>(&e)) return kConfigError;
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const MalformedInput*>(&e)) return kInputError;
  if (dynamic_cast<const UndefinedMetric*>(&e)) return kInputError;
  return kRuntimeError;
}

namespace {

// Output goes to `fallback` when the path is empty or "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw MalformedInput("cannot write " + path);
    stream_ = file_.get();
  }
  ~Output() { stream_->flush(); }

  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::string env_name(const std::string& lname) {
  std::string out = "ALIGNKIT_";
  for (char c : lname) out += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return out;
}

bool truthy(const std::string& v) {
  return !(v.empty() || v == "0" || v == "false" || v == "no" || v == "off");
}

// Environment values become explicit arguments of the subcommand they
// belong to, placed right after its name, unless the flag is already there.
// CLI11 applies the config file before the environment, so this is what
// keeps the file below the environment.
std::vector<std::string> inject_environment(CLI::App& app,
                                            std::vector<std::string> args) {
  std::vector<std::pair<CLI::App*, std::size_t>> chain{{&app, 0}};
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k].starts_with("-")) continue;
    if (auto* sub = chain.back().first->get_subcommand_no_throw(args[k]))
      chain.emplace_back(sub, k + 1);
  }
  const auto present = [&](const std::string& lname) {
    const auto flag = "--" + lname;
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.starts_with(flag + "=");
    });
  };
  std::size_t shift = 0;
  for (auto& [sub, at] : chain) {
    std::vector<std::string> extra;
    for (const auto* opt : sub->get_options()) {
      for (const auto& lname : opt->get_lnames()) {
        if (lname == "help" || lname == "version" || lname == "help-json") continue;
        const char* value = std::getenv(env_name(lname).c_str());
        if (value == nullptr || present(lname)) continue;
        if (opt->get_expected_max() == 0) {
          if (truthy(value)) extra.push_back("--" + lname);
        } else {
          extra.push_back("--" + lname + "=" + value);
        }
      }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at + shift), extra.begin(),
                extra.end());
    shift += extra.size();
  }
  return args;
}

nlohmann::ordered_json describe(const CLI::App& app) {
  nlohmann::ordered_json j;
  j["name"] = app.get_name().empty() ? "alignkit" : app.get_name();
  j["description"] = app.get_description();
  auto options = nlohmann::ordered_json::array();
  for (const auto* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    nlohmann::ordered_json o;
    o["name"] = "--" + opt->get_lnames().front();
    o["description"] = opt->get_description();
    o["takes_value"] = opt->get_expected_max() != 0;
    o["multiple"] = opt->get_expected_max() > 1 ||
                    opt->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeAll;
    o["required"] = opt->get_required();
    if (!opt->get_default_str().empty()) o["default"] = opt->get_default_str();
    const auto& lname = opt->get_lnames().front();
    if (lname != "help" && lname != "version" && lname != "help-json")
      o["env"] = env_name(lname);
    options.push_back(std::move(o));
  }
  j["options"] = std::move(options);
  auto subs = nlohmann::ordered_json::array();
  for (const auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    subs.push_back(describe(*sub));
  if (!subs.empty()) j["subcommands"] = std::move(subs);
  return j;
}

ExternalScorerOptions scorer_options(long timeout_ms) {
  ExternalScorerOptions o;
  o.timeout = std::chrono::milliseconds(timeout_ms);
  return o;
}

std::vector<std::string> subcommand_path(const CLI::App& app) {
  std::vector<std::string> path;
  const CLI::App* cur = &app;
  while (true) {
    const auto parsed = cur->get_subcommands();
    if (parsed.empty()) break;
    cur = parsed.front();
    path.push_back(cur->get_name());
  }
  return path;
}

// Commands

struct TrainIbmArgs {
  std::string src, tgt, out;
  int iters = 5;
  double lambda = 0.0;
};

void cmd_train_ibm(const TrainIbmArgs& a, std::ostream& out) {
  if (a.iters <= 0) throw ConfigError("--iters must be positive");
  CorpusFiles files;
  files.src = a.src;
  files.tgt = a.tgt;
  const auto corpus = load_corpus(files);
  const auto trained = ibm::train_em(
      corpus.pairs, a.iters, a.lambda, [&](const ibm::EmIteration& it) {
        out << "iteration " << it.iteration << " log_likelihood "
            << format_real17(it.log_likelihood) << '\n';
      });
  ibm::save_model(trained.model, a.out);
}

struct CorpusArgs {
  std::string src, tgt, subwords_src, subwords_tgt, separator = "@@";

  CorpusFiles files() const {
    CorpusFiles f;
    f.src = src;
    f.tgt = tgt;
    if (!subwords_src.empty()) f.subwords_src = subwords_src;
    if (!subwords_tgt.empty()) f.subwords_tgt = subwords_tgt;
    f.subword_separator = separator;
    return f;
  }
};

void add_corpus_options(CLI::App* sub, CorpusArgs& c) {
  sub->add_option("--src", c.src, "Source sentences, one per line")->required();
  sub->add_option("--tgt", c.tgt, "Target sentences, one per line")->required();
  sub->add_option("--subwords-src", c.subwords_src, "Segmented source sentences");
  sub->add_option("--subwords-tgt", c.subwords_tgt, "Segmented target sentences");
  sub->add_option("--separator", c.separator, "Subword separator inside a token")
      ->capture_default_str();
}

struct ScoreArgs {
  CorpusArgs corpus;
  std::string method, scorer, out, attention_file;
  long timeout_ms = 60000;
};

SoftAlignment score_pair(ScoreMethod method, Scorer& scorer, const SentencePair& pair) {
  using M = ObscureMode;
  switch (method) {
    case ScoreMethod::M1: return m1_scores(scorer, pair);
    case ScoreMethod::M2a: return m2_scores(scorer, pair, M::Delete);
    case ScoreMethod::M2b: return m2_scores(scorer, pair, M::Substitute);
    case ScoreMethod::M3aa: return m3_scores(scorer, pair, M::Delete, M::Delete);
    case ScoreMethod::M3ab: return m3_scores(scorer, pair, M::Delete, M::Substitute);
    case ScoreMethod::M3ba: return m3_scores(scorer, pair, M::Substitute, M::Delete);
    case ScoreMethod::M3bb: return m3_scores(scorer, pair, M::Substitute, M::Substitute);
    default: break;
  }
  throw ConfigError("method needs no scorer dispatch");
}

Need required_need(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::M1:
    case ScoreMethod::M3aa:
    case ScoreMethod::M3ab:
    case ScoreMethod::M3ba:
    case ScoreMethod::M3bb: return Need::SentenceLogprob;
    case ScoreMethod::M2a:
    case ScoreMethod::M2b: return Need::TokenLogprobs;
    default: return Need::Attention;
  }
}

void cmd_score(const ScoreArgs& a, std::ostream& stdout_stream) {
  const auto method = parse_score_method(a.method);
  if (needs_attention(method) &&
      (a.corpus.subwords_src.empty() || a.corpus.subwords_tgt.empty()))
    throw ConfigError(std::string(to_string(method)) +
                         " needs --subwords-src and --subwords-tgt");
  const auto corpus = load_corpus(a.corpus.files());
  Output out(a.out, stdout_stream);
  const auto emit = [&](std::size_t k, SoftAlignment m) {
    *out << encode_score_record({k, std::move(m)}) << '\n';
  };

  if (method == ScoreMethod::IbmPosterior) {
    if (!a.scorer.starts_with("builtin:"))
      throw ConfigError("ibm-posterior needs a builtin:<model> scorer");
    const auto model = ibm::load_model(a.scorer.substr(8));
    for (std::size_t k = 0; k < corpus.pairs.size(); ++k)
      emit(k, ibm::posterior_matrix(model, corpus.pairs[k]));
    return;
  }

  if (needs_attention(method)) {
    const auto agg = method == ScoreMethod::AttnMax ? AttentionAggregation::Max
                                                    : AttentionAggregation::Avg;
    if (!a.attention_file.empty()) {
      const auto payloads = read_attention_file(a.attention_file);
      if (payloads.size() != corpus.pairs.size())
        throw MalformedInput(a.attention_file + " has " +
                             std::to_string(payloads.size()) + " records for " +
                             std::to_string(corpus.pairs.size()) + " sentence pairs");
      for (std::size_t k = 0; k < corpus.pairs.size(); ++k) {
        if (payloads[k].first != k)
          throw MalformedInput(a.attention_file + ": record " + std::to_string(k) +
                               " has id " + std::to_string(payloads[k].first));
        emit(k, attention_scores(payloads[k].second, corpus.pairs[k], agg));
      }
      return;
    }
    if (a.scorer.empty()) throw ConfigError("--scorer or --attention-file is required");
    auto scorer = make_scorer(a.scorer, scorer_options(a.timeout_ms));
    if (!scorer->capabilities().contains(Need::Attention))
      throw CapabilityError("scorer does not support attention");
    for (std::size_t k = 0; k < corpus.pairs.size(); ++k) {
      const auto resp = scorer->score(attention_request(k, corpus.pairs[k]));
      try {
        emit(k, attention_scores(*resp.attention, corpus.pairs[k], agg));
      } catch (const MalformedInput& e) {
        throw MalformedInput("sentence " + std::to_string(k) + ": " + e.what());
      }
    }
    return;
  }

  if (a.scorer.empty()) throw ConfigError("--scorer is required");
  auto scorer = std::make_shared<CachedScorer>(
      make_scorer(a.scorer, scorer_options(a.timeout_ms)));
  const auto need = required_need(method);
  if (!scorer->capabilities().contains(need))
    throw CapabilityError("scorer does not support " + std::string(to_string(need)));
  for (std::size_t k = 0; k < corpus.pairs.size(); ++k)
    emit(k, score_pair(method, *scorer, corpus.pairs[k]));
}

SetOp parse_set_op(const std::string& name) {
  if (name == "union") return SetOp::Union;
  if (name == "intersect") return SetOp::Intersect;
  throw ConfigError("unknown combination '" + name + "'");
}

std::vector<ExtractorSpec> parse_specs(const std::vector<std::string>& texts) {
  std::vector<ExtractorSpec> specs;
  for (const auto& t : texts) specs.push_back(ExtractorSpec::parse(t));
  return specs;
}

// Reads several score files in lockstep; records must agree on id and shape.
class LockstepReader {
 public:
  explicit LockstepReader(const std::vector<std::string>& paths) : paths_(paths) {
    for (const auto& p : paths) readers_.emplace_back(p);
  }

  std::optional<std::vector<ScoreRecord>> next() {
    std::vector<ScoreRecord> recs;
    std::size_t ended = 0;
    for (auto& r : readers_) {
      auto rec = r.next();
      if (!rec) {
        ++ended;
        continue;
      }
      recs.push_back(std::move(*rec));
    }
    if (ended == readers_.size()) return std::nullopt;
    if (ended != 0) throw MalformedInput("score files have different numbers of records");
    for (std::size_t k = 1; k < recs.size(); ++k) {
      if (recs[k].id != recs[0].id)
        throw MalformedInput("mismatched ids: " + paths_[0] + " has " +
                             std::to_string(recs[0].id) + ", " + paths_[k] + " has " +
                             std::to_string(recs[k].id));
      if (recs[k].scores.rows() != recs[0].scores.rows() ||
          recs[k].scores.cols() != recs[0].scores.cols())
        throw MalformedInput("record " + std::to_string(recs[0].id) +
                             ": matrix shapes differ between score files");
    }
    return recs;
  }

 private:
  std::vector<std::string> paths_;
  std::vector<ScoreFileReader> readers_;
};

struct ExtractArgs {
  std::vector<std::string> scores, extractors{"a1"};
  std::string combine = "intersect", out;
};

void cmd_extract(const ExtractArgs& a, std::ostream& stdout_stream) {
  const auto specs = parse_specs(a.extractors);
  const auto op = parse_set_op(a.combine);
  LockstepReader reader(a.scores);
  Output out(a.out, stdout_stream);
  while (auto recs = reader.next()) {
    std::vector<HardAlignment> parts;
    for (const auto& rec : *recs)
      for (const auto& spec : specs) parts.push_back(extract(rec.scores, spec));
    *out << emit_pharaoh(combine(parts, op)) << '\n';
  }
}

struct SymmetrizeArgs {
  std::string fwd, rev, method = "add", out, fit;
  std::vector<double> betas;
  std::vector<std::string> extractors{"a1"};
};

void cmd_symmetrize(const SymmetrizeArgs& a, std::ostream& stdout_stream,
                    std::ostream& err) {
  SymSpec spec;
  spec.method = parse_sym_method(a.method);
  if (!a.betas.empty()) {
    if (a.betas.size() != 3) throw ConfigError("--betas needs three values");
    std::copy(a.betas.begin(), a.betas.end(), spec.betas.begin());
  }
  if (!a.fit.empty()) {
    if (spec.method != SymMethod::Linear)
      throw ConfigError("--fit applies to the linear method only");
    const auto fwd = read_score_file(a.fwd);
    const auto rev = read_score_file(a.rev);
    const auto gold_lines = read_lines(a.fit);
    if (fwd.size() != rev.size() || fwd.size() != gold_lines.size())
      throw MalformedInput("--fwd, --rev and --fit have different lengths");
    std::vector<LinearSymSample> samples;
    for (std::size_t k = 0; k < fwd.size(); ++k) {
      const auto& f = fwd[k].scores;
      const auto& r = rev[k].scores;
      if (r.rows() != f.cols() || r.cols() != f.rows())
        throw MalformedInput("record " + std::to_string(k) +
                             ": reverse matrix is not the transposed shape");
      const auto gold = parse_pharaoh_gold(gold_lines[k], f.rows(), f.cols());
      for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t j = 0; j < f.cols(); ++j)
          samples.push_back({f(i, j), r(j, i),
                             gold.possible().contains({static_cast<std::uint32_t>(i),
                                                       static_cast<std::uint32_t>(j)})
                                 ? 1.0
                                 : 0.0});
    }
    spec.betas = fit_linear_sym(samples);
    err << "betas " << format_real17(spec.betas[0]) << ' '
        << format_real17(spec.betas[1]) << ' ' << format_real17(spec.betas[2]) << '\n';
  }

  ScoreFileReader fwd(a.fwd), rev(a.rev);
  Output out(a.out, stdout_stream);
  const auto specs = parse_specs(a.extractors);
  while (true) {
    auto f = fwd.next();
    auto r = rev.next();
    if (!f && !r) break;
    if (!f || !r) throw MalformedInput("--fwd and --rev have different numbers of records");
    if (f->id != r->id)
      throw MalformedInput("mismatched ids: " + std::to_string(f->id) + " and " +
                           std::to_string(r->id));
    if (spec.method == SymMethod::Intersect) {
      const auto hf = extract_chain(f->scores, specs, SetOp::Intersect);
      const auto hr = extract_chain(r->scores, specs, SetOp::Intersect);
      *out << emit_pharaoh(symmetrize_hard(hf, hr)) << '\n';
    } else {
      *out << encode_score_record({f->id, symmetrize_scores(f->scores, r->scores, spec)})
           << '\n';
    }
  }
}

// Shapes for Pharaoh files read without a corpus: the smallest grid that
// holds every link of the line pair.
std::pair<std::size_t, std::size_t> implied_shape(const PharaohLinks& a,
                                                  const PharaohLinks& b) {
  return {std::max(a.min_rows(), b.min_rows()), std::max(a.min_cols(), b.min_cols())};
}

struct EvalArgs {
  std::string hyp, gold, src, tgt;
  bool macro = false;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  std::vector<std::string> paths{a.hyp, a.gold};
  std::optional<Corpus> corpus;
  if (!a.src.empty() || !a.tgt.empty()) {
    if (a.src.empty() || a.tgt.empty())
      throw ConfigError("--src and --tgt must be given together");
    paths.push_back(a.src);
    paths.push_back(a.tgt);
  }
  check_line_counts(paths);
  if (!a.src.empty()) {
    CorpusFiles files;
    files.src = a.src;
    files.tgt = a.tgt;
    corpus = load_corpus(files);
  }
  const auto hyp_lines = read_lines(a.hyp);
  const auto gold_lines = read_lines(a.gold);
  std::vector<HardAlignment> hyps;
  std::vector<GoldAlignment> golds;
  for (std::size_t k = 0; k < hyp_lines.size(); ++k) {
    const auto where = [&](const std::string& file) {
      return file + ":" + std::to_string(k + 1) + ": ";
    };
    PharaohLinks h, g;
    try {
      h = parse_pharaoh(hyp_lines[k]);
    } catch (const MalformedInput& e) {
      throw MalformedInput(where(a.hyp) + e.what());
    }
    try {
      g = parse_pharaoh(gold_lines[k]);
    } catch (const MalformedInput& e) {
      throw MalformedInput(where(a.gold) + e.what());
    }
    auto [rows, cols] = implied_shape(h, g);
    if (corpus) {
      rows = corpus->pairs[k].src.size();
      cols = corpus->pairs[k].tgt.size();
    }
    try {
      hyps.push_back(parse_pharaoh_hypothesis(hyp_lines[k], rows, cols));
    } catch (const MalformedInput& e) {
      throw MalformedInput(where(a.hyp) + e.what());
    }
    try {
      golds.push_back(parse_pharaoh_gold(gold_lines[k], rows, cols));
    } catch (const MalformedInput& e) {
      throw MalformedInput(where(a.gold) + e.what());
    }
  }
  const auto m = corpus_eval(hyps, golds, a.macro ? Averaging::Macro : Averaging::Micro);
  out << format_fixed(m.precision, 4) << ' ' << format_fixed(m.recall, 4) << ' '
      << format_fixed(m.aer, 4) << '\n';
}

struct SweepArgs {
  std::string scores, gold, kind = "a3", csv;
  std::vector<double> alphas;
};

void cmd_sweep(const SweepArgs& a, std::ostream& stdout_stream) {
  ExtractorKind kind;
  if (a.kind == "a2")
    kind = ExtractorKind::A2;
  else if (a.kind == "a3")
    kind = ExtractorKind::A3;
  else if (a.kind == "a4")
    kind = ExtractorKind::A4;
  else
    throw ConfigError("--kind must be a2, a3 or a4");
  if (a.alphas.empty()) throw ConfigError("--alphas is empty");
  for (double alpha : a.alphas) check_alpha(kind, alpha);
  check_line_counts({a.gold});
  const auto recs = read_score_file(a.scores);
  const auto gold_lines = read_lines(a.gold);
  if (recs.size() != gold_lines.size())
    throw MalformedInput(a.scores + " has " + std::to_string(recs.size()) +
                         " records but " + a.gold + " has " +
                         std::to_string(gold_lines.size()) + " lines");
  std::vector<SoftAlignment> scores;
  std::vector<GoldAlignment> golds;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    scores.push_back(recs[k].scores);
    try {
      golds.push_back(parse_pharaoh_gold(gold_lines[k], recs[k].scores.rows(),
                                         recs[k].scores.cols()));
    } catch (const MalformedInput& e) {
      throw MalformedInput(a.gold + ":" + std::to_string(k + 1) + ": " + e.what());
    }
  }
  const auto rows = alpha_sweep(scores, golds, kind, a.alphas);
  Output out(a.csv, stdout_stream);
  *out << sweep_csv(rows);
}

struct FeaturesArgs {
  CorpusArgs corpus;
  std::string gold, m1, m2b, m3aa, m3bb, attention, fastalign, fastalign_model, m1_rev,
      out;
};

std::vector<SoftAlignment> load_scores_for(const std::string& path,
                                           const std::vector<SentencePair>& pairs,
                                           bool transposed) {
  if (path.empty()) return {};
  const auto recs = read_score_file(path);
  if (recs.size() != pairs.size())
    throw MalformedInput(path + " has " + std::to_string(recs.size()) +
                         " records for " + std::to_string(pairs.size()) +
                         " sentence pairs");
  std::vector<SoftAlignment> out;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    if (recs[k].id != k)
      throw MalformedInput(path + ": record " + std::to_string(k) + " has id " +
                           std::to_string(recs[k].id));
    const auto rows = transposed ? pairs[k].tgt.size() : pairs[k].src.size();
    const auto cols = transposed ? pairs[k].src.size() : pairs[k].tgt.size();
    if (recs[k].scores.rows() != rows || recs[k].scores.cols() != cols)
      throw MalformedInput(path + ": sentence " + std::to_string(k) +
                           " matrix shape does not match the corpus");
    out.push_back(recs[k].scores);
  }
  return out;
}

void cmd_features(const FeaturesArgs& a, std::ostream& stdout_stream) {
  auto files = a.corpus.files();
  if (!a.gold.empty()) files.gold = a.gold;
  const auto corpus = load_corpus(files);
  FeatureSources sources;
  sources.m1 = load_scores_for(a.m1, corpus.pairs, false);
  sources.m2b = load_scores_for(a.m2b, corpus.pairs, false);
  sources.m3aa = load_scores_for(a.m3aa, corpus.pairs, false);
  sources.m3bb = load_scores_for(a.m3bb, corpus.pairs, false);
  sources.attention = load_scores_for(a.attention, corpus.pairs, false);
  sources.m1_reverse = load_scores_for(a.m1_rev, corpus.pairs, true);
  sources.subwords = !a.corpus.subwords_src.empty();
  if (!a.fastalign.empty() && !a.fastalign_model.empty())
    throw ConfigError("--fastalign and --fastalign-model are exclusive");
  if (!a.fastalign.empty()) {
    check_line_counts({a.corpus.src, a.fastalign});
    const auto lines = read_lines(a.fastalign);
    for (std::size_t k = 0; k < lines.size(); ++k) {
      try {
        sources.fastalign.push_back(parse_pharaoh_hypothesis(
            lines[k], corpus.pairs[k].src.size(), corpus.pairs[k].tgt.size()));
      } catch (const MalformedInput& e) {
        throw MalformedInput(a.fastalign + ":" + std::to_string(k + 1) + ": " + e.what());
      }
    }
  } else if (!a.fastalign_model.empty()) {
    const auto model = ibm::load_model(a.fastalign_model);
    for (const auto& p : corpus.pairs) sources.fastalign.push_back(ibm::viterbi_align(model, p));
  }
  const auto table = assemble_features(corpus.pairs, sources, corpus.gold);
  Output out(a.out, stdout_stream);
  write_feature_table(table, *out);
}

struct EnsembleTrainArgs {
  std::string features, out, labels = "sure+possible";
  TrainConfig config;
};

void cmd_ensemble_train(EnsembleTrainArgs a, std::ostream& out) {
  if (a.labels == "sure")
    a.config.labels = LabelPolicy::SureOnly;
  else if (a.labels != "sure+possible")
    throw ConfigError("--labels must be sure or sure+possible");
  const auto table = read_feature_table(a.features);
  const auto result = train_ensemble(table, a.config);
  for (const auto& e : result.log) {
    out << "epoch " << e.epoch << " loss " << format_fixed(e.train_loss, 6)
        << " validation_aer " << format_fixed(e.validation_aer, 6)
        << (e.epoch == result.best_epoch ? " *" : "") << '\n';
  }
  out << "selected epoch " << result.best_epoch << '\n';
  save_ensemble(result.model, a.out);
}

struct EnsembleApplyArgs {
  std::string model, features, out, scores_out;
};

void cmd_ensemble_apply(const EnsembleApplyArgs& a, std::ostream& stdout_stream) {
  const auto model = load_ensemble(a.model);
  const auto table = read_feature_table(a.features);
  const auto scores = ensemble_scores(model, table);
  if (!a.scores_out.empty()) {
    Output s(a.scores_out, stdout_stream);
    for (std::size_t k = 0; k < scores.size(); ++k)
      *s << encode_score_record({table.sentences[k].id, scores[k]}) << '\n';
  }
  Output out(a.out, stdout_stream);
  const auto chain = ensemble_extractor_chain();
  for (const auto& m : scores) *out << emit_pharaoh(extract_chain(m, chain, SetOp::Intersect)) << '\n';
}

struct SynthArgs {
  std::string prefix;
  SyntheticConfig config;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto synth = make_synthetic_corpus(a.config);
  CorpusFiles files;
  files.src = a.prefix + ".src";
  files.tgt = a.prefix + ".tgt";
  files.gold = a.prefix + ".gold";
  if (a.config.subwords) {
    files.subwords_src = a.prefix + ".sub.src";
    files.subwords_tgt = a.prefix + ".sub.tgt";
  }
  write_corpus(files, synth.corpus.pairs, synth.corpus.gold);
  std::ofstream dict(a.prefix + ".dict");
  if (!dict) throw MalformedInput("cannot write " + a.prefix + ".dict");
  for (const auto& [s, t] : synth.dictionary) dict << s << '\t' << t << '\n';
  out << synth.corpus.pairs.size() << " sentence pairs written to " << a.prefix
      << ".{src,tgt,gold}\n";
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  CLI::App app("Word alignment from sentence-pair scores", "alignkit");
  app.set_version_flag("--version", "alignkit " ALIGNKIT_VERSION);
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);
  app.add_flag_callback(
      "--help-json",
      [&] {
        out << describe(app).dump(2) << '\n';
        throw CLI::Success();
      },
      "Print the command-line interface as JSON");

  TrainIbmArgs train_ibm;
  auto* s_train = app.add_subcommand("train-ibm", "Train the lexical model with EM");
  s_train->add_option("--src", train_ibm.src, "Source sentences")->required();
  s_train->add_option("--tgt", train_ibm.tgt, "Target sentences")->required();
  s_train->add_option("--out", train_ibm.out, "Model file")->required();
  s_train->add_option("--iters", train_ibm.iters, "EM iterations")->capture_default_str();
  s_train->add_option("--lambda", train_ibm.lambda, "Diagonal tension (0 = no prior)")
      ->capture_default_str();

  ScoreArgs score;
  auto* s_score = app.add_subcommand("score", "Compute soft alignment scores");
  add_corpus_options(s_score, score.corpus);
  s_score->add_option("--method", score.method,
                      "m1|m2a|m2b|m3aa|m3ab|m3ba|m3bb|attn-max|attn-avg|ibm-posterior")
      ->required();
  s_score->add_option("--scorer", score.scorer, "builtin:<model> or external:<command>");
  s_score->add_option("--attention-file", score.attention_file,
                      "Attention responses to use instead of a scorer");
  s_score->add_option("--timeout-ms", score.timeout_ms, "External scorer reply timeout")
      ->capture_default_str();
  s_score->add_option("--out", score.out, "Score file (default stdout)");

  ExtractArgs ex;
  auto* s_extract = app.add_subcommand("extract", "Turn scores into hard alignments");
  s_extract->add_option("--scores", ex.scores, "Score file (repeatable)")->required();
  s_extract->add_option("--extractor", ex.extractors, "a1|a2:x|a3:x|a4:x (repeatable)")
      ->capture_default_str();
  s_extract->add_option("--combine", ex.combine, "union|intersect")->capture_default_str();
  s_extract->add_option("--out", ex.out, "Pharaoh file (default stdout)");

  SymmetrizeArgs sym;
  auto* s_sym = app.add_subcommand("symmetrize", "Combine the two alignment directions");
  s_sym->add_option("--fwd", sym.fwd, "Forward score file")->required();
  s_sym->add_option("--rev", sym.rev, "Reverse-direction score file")->required();
  s_sym->add_option("--method", sym.method, "reverse|add|multiply|linear|intersect")
      ->capture_default_str();
  s_sym->add_option("--betas", sym.betas, "Linear coefficients b0,b1,b2")->delimiter(',');
  s_sym->add_option("--fit", sym.fit, "Gold file to fit the linear coefficients on");
  s_sym->add_option("--extractor", sym.extractors,
                    "Extractors applied to each direction before intersecting")
      ->capture_default_str();
  s_sym->add_option("--out", sym.out, "Output file (default stdout)");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Precision, recall and AER");
  s_eval->add_option("--hyp", ev.hyp, "Hypothesis Pharaoh file")->required();
  s_eval->add_option("--gold", ev.gold, "Gold Pharaoh file (i-j sure, i?j possible)")
      ->required();
  s_eval->add_option("--src", ev.src, "Source sentences, for bounds checking");
  s_eval->add_option("--tgt", ev.tgt, "Target sentences, for bounds checking");
  s_eval->add_flag("--macro", ev.macro, "Average per sentence instead of pooling counts");

  SweepArgs sw;
  auto* s_sweep = app.add_subcommand("sweep", "Metrics across extractor parameters");
  s_sweep->add_option("--scores", sw.scores, "Score file")->required();
  s_sweep->add_option("--gold", sw.gold, "Gold Pharaoh file")->required();
  s_sweep->add_option("--kind", sw.kind, "a2|a3|a4")->capture_default_str();
  s_sweep->add_option("--alphas", sw.alphas, "Comma-separated values")
      ->required()
      ->delimiter(',');
  s_sweep->add_option("--csv", sw.csv, "CSV output (default stdout)");

  auto* s_ens = app.add_subcommand("ensemble", "Feature tables and the score network");
  s_ens->require_subcommand(1);

  FeaturesArgs feat;
  auto* s_feat = s_ens->add_subcommand("features", "Assemble a feature table");
  add_corpus_options(s_feat, feat.corpus);
  s_feat->add_option("--gold", feat.gold, "Gold Pharaoh file for labels");
  s_feat->add_option("--m1", feat.m1, "m1 score file");
  s_feat->add_option("--m2b", feat.m2b, "m2b score file");
  s_feat->add_option("--m3aa", feat.m3aa, "m3aa score file");
  s_feat->add_option("--m3bb", feat.m3bb, "m3bb score file");
  s_feat->add_option("--attention", feat.attention, "attn-avg score file");
  s_feat->add_option("--fastalign", feat.fastalign, "Baseline Pharaoh file");
  s_feat->add_option("--fastalign-model", feat.fastalign_model,
                     "Lexical model whose Viterbi links are the baseline");
  s_feat->add_option("--m1-rev", feat.m1_rev, "Reverse-direction m1 score file");
  s_feat->add_option("--out", feat.out, "Feature table (default stdout)");

  EnsembleTrainArgs etrain;
  auto* s_etrain = s_ens->add_subcommand("train", "Train the score network");
  s_etrain->add_option("--features", etrain.features, "Labeled feature table")->required();
  s_etrain->add_option("--out", etrain.out, "Model file")->required();
  s_etrain->add_option("--epochs", etrain.config.epochs)->capture_default_str();
  s_etrain->add_option("--lr", etrain.config.learning_rate)->capture_default_str();
  s_etrain->add_option("--batch", etrain.config.batch_size)->capture_default_str();
  s_etrain->add_option("--seed", etrain.config.seed)->capture_default_str();
  s_etrain->add_option("--validation-fraction", etrain.config.validation_fraction,
                       "Share of sentences held out for epoch selection")
      ->capture_default_str();
  s_etrain->add_option("--dropout", etrain.config.dropout)->capture_default_str();
  s_etrain->add_option("--labels", etrain.labels, "sure|sure+possible")
      ->capture_default_str();

  EnsembleApplyArgs eapply;
  auto* s_eapply = s_ens->add_subcommand("apply", "Align with a trained network");
  s_eapply->add_option("--model", eapply.model, "Model file")->required();
  s_eapply->add_option("--features", eapply.features, "Feature table")->required();
  s_eapply->add_option("--out", eapply.out, "Pharaoh file (default stdout)");
  s_eapply->add_option("--scores-out", eapply.scores_out, "Also write the network scores");

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Write a synthetic dictionary corpus");
  s_synth->add_option("--out-prefix", synth.prefix, "Writes <prefix>.src/.tgt/.gold/.dict")
      ->required();
  s_synth->add_option("--pairs", synth.config.pairs)->capture_default_str();
  s_synth->add_option("--vocab", synth.config.vocabulary)->capture_default_str();
  s_synth->add_option("--min-len", synth.config.min_length)->capture_default_str();
  s_synth->add_option("--max-len", synth.config.max_length)->capture_default_str();
  s_synth->add_option("--swap", synth.config.swap_probability)->capture_default_str();
  s_synth->add_option("--filler", synth.config.filler_probability)->capture_default_str();
  s_synth->add_option("--cognate", synth.config.cognate_probability)->capture_default_str();
  s_synth->add_flag("--subwords", synth.config.subwords, "Also write subword files");
  s_synth->add_option("--seed", synth.config.seed)->capture_default_str();

  try {
    auto args = inject_environment(app, raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const auto path = subcommand_path(app);
    const auto& cmd = path.at(0);
    if (cmd == "train-ibm") cmd_train_ibm(train_ibm, out);
    else if (cmd == "score") cmd_score(score, out);
    else if (cmd == "extract") cmd_extract(ex, out);
    else if (cmd == "symmetrize") cmd_symmetrize(sym, out, err);
    else if (cmd == "eval") cmd_eval(ev, out);
    else if (cmd == "sweep") cmd_sweep(sw, out);
    else if (cmd == "synth") cmd_synth(synth, out);
    else if (path.at(1) == "features") cmd_features(feat, out);
    else if (path.at(1) == "train") cmd_ensemble_train(etrain, out);
    else cmd_ensemble_apply(eapply, out);
  } catch (const std::exception& e) {
    out.flush();
    err << "alignkit: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  out.flush();
  return kOk;
}

}  // namespace alignkit::cli
