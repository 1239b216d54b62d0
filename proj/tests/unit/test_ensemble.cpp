// tests/unit/test_ensemble.cpp

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
#include <sstream>

#include "alignkit/corpus.hpp"
#include "alignkit/ensemble.hpp"
#include "test_support.hpp"

using namespace alignkit;

namespace {

// Log-space m1 that is 0 on gold links and -5 elsewhere, plus `noise`.
FeatureSources indicator_sources(const SyntheticCorpus& syn, Rng& rng, double noise) {
  FeatureSources src;
  for (std::size_t k = 0; k < syn.corpus.pairs.size(); ++k) {
    const auto& g = syn.corpus.gold[k];
    SoftAlignment m(g.rows(), g.cols(), ScoreSpace::Log);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j)
        m.set(i, j,
              (g.sure().contains({std::uint32_t(i), std::uint32_t(j)}) ? 0.0 : -5.0) +
                  noise * rng.normal());
    src.m1.push_back(std::move(m));
  }
  return src;
}

SyntheticCorpus small_corpus(std::size_t pairs, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.pairs = pairs;
  cfg.seed = seed;
  return make_synthetic_corpus(cfg);
}

}  // namespace

TEST_CASE("manual features") {
  const auto p = make_pair(0, {"Prague", "abc"}, {"prague", "a"});
  const auto same = manual_features(p, 0, 0, false);
  CHECK(same.string_equal == 1.0);
  CHECK(same.levenshtein_norm == 0.0);
  CHECK(same.len_diff == 0.0);
  CHECK(same.pos_diff == 0.0);
  const auto short_ = manual_features(p, 1, 1, false);
  CHECK(short_.len_diff == 2.0);
  CHECK(short_.levenshtein_norm == doctest::Approx(2.0 / 3.0));
  CHECK(short_.string_equal == 0.0);
  CHECK(manual_features(p, 1, 0, false).pos_diff == 0.5);
  CHECK(short_.subword_overlap == 0.0);
  CHECK_THROWS_AS(manual_features(p, 2, 0, false), MalformedInput);
  CHECK_THROWS_AS(manual_features(p, 0, 0, true), MalformedInput);

  SentencePair s;
  s.src = {Token("abcd", {"ab@@", "cd"})};
  s.tgt = {Token("abx", {"ab", "x"}), Token("q", {"q"})};
  const auto f = manual_features(s, 0, 0, true);
  CHECK(f.subword_overlap == 1.0);
  CHECK(f.subword_count_diff == 0.0);
  CHECK(manual_features(s, 0, 1, true).subword_count_diff == 1.0);

  CHECK(levenshtein(U"kitten", U"sitting") == 3);
  CHECK(levenshtein(U"", U"abc") == 3);
  CHECK(levenshtein(U"é", U"e") == 1);
}

TEST_CASE("feature names and groups") {
  CHECK(feature_name(kM1) == "m1");
  CHECK(feature_name(kStringEqual) == "string_equal");
  CHECK(groups_to_string(0) == "-");
  CHECK(groups_to_string(kGroupM1 | kGroupFastalign) == "m1,fastalign");
  for (std::uint32_t g = 0; g < (1u << kGroupCount); g += 7)
    CHECK(parse_groups(groups_to_string(g)) == g);
  CHECK_THROWS_AS(parse_groups("m1,m9"), MalformedInput);
}

TEST_CASE("feature table of a 2x2 pair") {
  const std::vector<SentencePair> pairs{make_pair(4, {"a", "b"}, {"a", "c"})};
  FeatureSources src;
  src.m1 = {testing::matrix(2, 2, {kLogZero, -1, -2, -3}, ScoreSpace::Log)};
  src.m1_reverse = {testing::matrix(2, 2, {-10, -20, -30, -40}, ScoreSpace::Log)};
  src.fastalign = {testing::from_set(2, 2, {{1, 0}})};
  const std::vector<GoldAlignment> gold{GoldAlignment(2, 2, {{0, 0}}, {{1, 1}})};
  const auto t = assemble_features(pairs, src, gold);
  REQUIRE(t.size() == 4);
  CHECK(t.groups == (kGroupM1 | kGroupM1Reverse | kGroupFastalign));
  CHECK(t.sentences[0] == SentenceBlock{4, 2, 2, 0});
  CHECK(t.row(0)[kM1] == -kFeatureClamp);
  CHECK(t.row(1)[kM1] == -1.0);
  CHECK(t.row(1)[kM1Reverse] == -30.0);
  CHECK(t.row(2)[kM1Reverse] == -20.0);
  CHECK(t.row(2)[kFastalignBinary] == 1.0);
  CHECK(t.row(3)[kFastalignBinary] == 0.0);
  CHECK(t.row(0)[kStringEqual] == 1.0);
  CHECK(t.row(0)[kM2b] == 0.0);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t b = 0; b < kGroupCount; ++b)
      CHECK(t.row(r)[kFeatureCount + b] == double((t.groups >> b) & 1u));
  CHECK(t.sure == std::vector<std::uint8_t>{1, 0, 0, 0});
  CHECK(t.possible == std::vector<std::uint8_t>{1, 0, 0, 1});
  CHECK(t.gold(0).possible() == gold[0].possible());

  auto bad = src;
  bad.m1 = {testing::matrix(1, 2, {0, 0}, ScoreSpace::Log)};
  try {
    assemble_features(pairs, bad);
    FAIL("expected MalformedInput");
  } catch (const MalformedInput& e) {
    CHECK(std::string(e.what()).find("sentence 4") != std::string::npos);
  }
  bad = src;
  bad.m1.push_back(bad.m1[0]);
  CHECK_THROWS_AS(assemble_features(pairs, bad), MalformedInput);
}

TEST_CASE("positive rate and subsets on the synthetic corpus") {
  const auto syn = small_corpus(60, 5);
  Rng rng(1);
  const auto t = assemble_features(syn.corpus.pairs, indicator_sources(syn, rng, 0.0),
                                   syn.corpus.gold);
  std::size_t cells = 0, words = 0;
  for (const auto& p : syn.corpus.pairs) {
    cells += p.src.size() * p.tgt.size();
    words += p.src.size();
  }
  CHECK(t.size() == cells);
  const auto positives = std::count(t.sure.begin(), t.sure.end(), std::uint8_t{1});
  CHECK(static_cast<std::size_t>(positives) == words);

  const std::vector<std::size_t> pick{7, 2};
  const auto sub = t.subset(pick);
  CHECK(sub.sentences.size() == 2);
  CHECK(sub.sentences[0].id == 7);
  CHECK(sub.gold(1).sure() == syn.corpus.gold[2].sure());
  CHECK(sub.row(0)[kM1] == t.row(t.sentences[7].offset)[kM1]);
}

TEST_CASE("normalizer") {
  const auto syn = small_corpus(40, 6);
  Rng rng(2);
  const auto t = assemble_features(syn.corpus.pairs, indicator_sources(syn, rng, 0.3),
                                   syn.corpus.gold);
  const auto norm = fit_normalizer(t);
  std::vector<double> mean(kInputWidth, 0.0), sq(kInputWidth, 0.0), out(kInputWidth);
  for (std::size_t r = 0; r < t.size(); ++r) {
    norm.apply(t.row(r), out);
    for (std::size_t f = 0; f < kInputWidth; ++f) {
      mean[f] += out[f];
      sq[f] += out[f] * out[f];
    }
  }
  const double n = static_cast<double>(t.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) CHECK(std::abs(mean[f] / n) < 1e-9);
  CHECK(sq[kM1] / n == doctest::Approx(1.0));
  CHECK(norm.scale[kM2b] == 1.0);
  CHECK(mean[kFeatureCount] / n == 1.0);
  CHECK(mean[kFeatureCount + 1] == 0.0);
}

TEST_CASE("feature table file round trip") {
  const auto syn = small_corpus(12, 8);
  Rng rng(3);
  auto src = indicator_sources(syn, rng, 0.7);
  for (const auto& p : syn.corpus.pairs)
    src.fastalign.push_back(testing::from_set(p.src.size(), p.tgt.size(),
                                              testing::random_links(rng, p.src.size(), p.tgt.size(), 0.2)));
  for (bool labeled : {true, false}) {
    const auto t = labeled ? assemble_features(syn.corpus.pairs, src, syn.corpus.gold)
                           : assemble_features(syn.corpus.pairs, src);
    std::stringstream ss;
    write_feature_table(t, ss);
    const auto text = ss.str();
    CHECK(text.starts_with("ALIGNKIT-FEATURES v1 groups=m1,fastalign labels="));
    const auto back = read_feature_table(ss);
    CHECK(back == t);
    std::stringstream again;
    write_feature_table(back, again);
    CHECK(again.str() == text);
  }
  std::stringstream bad("ALIGNKIT-FEATURES v1 groups=-\nsentence\ti\n");
  CHECK_THROWS_AS(read_feature_table(bad), MalformedInput);
  std::stringstream none("hello\n");
  CHECK_THROWS_AS(read_feature_table(none), MalformedInput);
}

TEST_CASE("pass-through network") {
  const auto syn = small_corpus(30, 9);
  Rng rng(4);
  const auto src = indicator_sources(syn, rng, 1.0);
  const auto t = assemble_features(syn.corpus.pairs, src, syn.corpus.gold);

  EnsembleModel model;
  model.groups = t.groups;
  model.normalizer = fit_normalizer(t);
  model.net = make_mlp(kInputWidth, rng);
  for (std::size_t k = 0; k < model.net.layers(); ++k) {
    std::fill(model.net.weights[k].begin(), model.net.weights[k].end(), 0.0);
    std::fill(model.net.biases[k].begin(), model.net.biases[k].end(), 0.0);
    model.net.weights[k][k == 0 ? kM1 : 0] = 1.0;
  }
  const auto scores = ensemble_scores(model, t);
  for (std::size_t s = 0; s < scores.size(); ++s) {
    const auto& m = src.m1[s];
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        double z = (m(i, j) - model.normalizer.mean[kM1]) / model.normalizer.scale[kM1];
        for (int l = 0; l < 4; ++l) z = std::tanh(z);
        CHECK(scores[s](i, j) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
      }
    }
    const std::vector<ExtractorSpec> a1{ExtractorSpec::parse("a1")};
    CHECK(ensemble_align(model, t, a1)[s] == extract_a1(m));
  }

  for (std::size_t k = 0; k < model.net.layers(); ++k)
    std::fill(model.net.weights[k].begin(), model.net.weights[k].end(), 0.0);
  model.net.biases.back()[0] = 0.7;
  const auto flat = ensemble_align(model, t);
  for (std::size_t s = 0; s < flat.size(); ++s)
    CHECK(flat[s].size() == t.sentences[s].rows * t.sentences[s].cols);

  model.groups = kGroupM2b;
  CHECK_THROWS_AS(ensemble_scores(model, t), MalformedInput);
}

TEST_CASE("training separates an indicator feature") {
  const auto syn = small_corpus(150, 10);
  Rng rng(5);
  const auto t = assemble_features(syn.corpus.pairs, indicator_sources(syn, rng, 0.2),
                                   syn.corpus.gold);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 3;
  std::size_t seen = 0;
  const auto res = train_ensemble(t, cfg, [&](const EpochLog& e) { CHECK(e.epoch == ++seen); });
  CHECK(seen == 10);
  REQUIRE(res.log.size() == 10);
  CHECK(res.best_epoch >= 1);
  const double best = res.log[res.best_epoch - 1].validation_aer;
  for (const auto& e : res.log) CHECK(best <= e.validation_aer);
  CHECK(best == 0.0);
  CHECK(res.validation_sentences.size() == 15);
  CHECK(res.model.groups == kGroupM1);
  CHECK(res.log.back().train_loss < res.log.front().train_loss);

  std::vector<GoldAlignment> val_gold;
  for (auto k : res.validation_sentences) val_gold.push_back(syn.corpus.gold[k]);
  const auto hyps = ensemble_align(res.model, t.subset(res.validation_sentences));
  CHECK(corpus_eval(hyps, val_gold).aer == best);

  const auto again = train_ensemble(t, cfg);
  CHECK(again.model == res.model);
  CHECK(again.best_epoch == res.best_epoch);

  std::stringstream ss;
  save_ensemble(res.model, ss);
  const auto text = ss.str();
  CHECK(text.starts_with("ALIGNKIT-ENSEMBLE v1\nseed 3\ngroups m1\nlabels sure+possible\n"));
  const auto loaded = load_ensemble(ss);
  CHECK(loaded == res.model);
  std::stringstream again_text;
  save_ensemble(loaded, again_text);
  CHECK(again_text.str() == text);
}

TEST_CASE("training errors") {
  const auto syn = small_corpus(20, 11);
  Rng rng(6);
  const auto labeled = assemble_features(syn.corpus.pairs, indicator_sources(syn, rng, 0.0),
                                         syn.corpus.gold);
  const auto unlabeled = assemble_features(syn.corpus.pairs, indicator_sources(syn, rng, 0.0));
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train_ensemble(unlabeled, cfg), TrainingError);
  CHECK_THROWS_AS(train_ensemble(labeled.subset(std::vector<std::size_t>{0}), cfg),
                  TrainingError);
  auto one_class = labeled;
  std::fill(one_class.sure.begin(), one_class.sure.end(), 0);
  std::fill(one_class.possible.begin(), one_class.possible.end(), 0);
  CHECK_THROWS_AS(train_ensemble(one_class, cfg), TrainingError);

  for (auto tweak : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& c) { c.epochs = 0; }, [](TrainConfig& c) { c.learning_rate = 0; },
           [](TrainConfig& c) { c.batch_size = 0; },
           [](TrainConfig& c) { c.validation_fraction = 1.0; },
           [](TrainConfig& c) { c.dropout = 1.0; }, [](TrainConfig& c) { c.selection = {}; }}) {
    TrainConfig c;
    tweak(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}

TEST_CASE("model file errors") {
  std::stringstream none("ALIGNKIT-ENSEMBLE v2\n");
  CHECK_THROWS_AS(load_ensemble(none), MalformedInput);
  std::stringstream widths(
      "ALIGNKIT-ENSEMBLE v1\nseed 1\ngroups m1\nlabels sure\ndropout 0.2\nwidths 20 1\n");
  CHECK_THROWS_AS(load_ensemble(widths), MalformedInput);
  std::stringstream labels("ALIGNKIT-ENSEMBLE v1\nseed 1\ngroups m1\nlabels maybe\n");
  CHECK_THROWS_AS(load_ensemble(labels), MalformedInput);
}

TEST_CASE("feature correlations on the synthetic corpus") {
  SyntheticConfig cfg;
  cfg.pairs = 200;
  cfg.cognate_probability = 0.5;
  cfg.swap_probability = 0.1;
  cfg.seed = 12;
  const auto syn = make_synthetic_corpus(cfg);
  const auto t = assemble_features(syn.corpus.pairs, FeatureSources{}, syn.corpus.gold);
  std::vector<double> label(t.sure.begin(), t.sure.end());
  const auto column = [&](std::size_t f) {
    std::vector<double> v;
    for (std::size_t r = 0; r < t.size(); ++r) v.push_back(t.row(r)[f]);
    return v;
  };
  CHECK(pearson(column(kStringEqual), label) > 0.1);
  CHECK(pearson(column(kLevenshteinNorm), label) < -0.1);
  CHECK(pearson(column(kPosDiff), label) < -0.1);
  CHECK(pearson(column(kLenDiff), label) < 0.0);
}
