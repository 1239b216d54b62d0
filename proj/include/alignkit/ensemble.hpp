// alignkit/ensemble.hpp

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

// Per-pair feature tables and the network that combines them into one
// alignment score.

#ifndef ALIGNKIT_ENSEMBLE_HPP_
#define ALIGNKIT_ENSEMBLE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alignkit/core.hpp"
#include "alignkit/extract.hpp"
#include "alignkit/mlp.hpp"

namespace alignkit {

enum Feature : std::size_t {
  kM1,
  kM2b,
  kM3aa,
  kM3bb,
  kAttentionAvg,
  kFastalignBinary,
  kM1Reverse,
  kPosDiff,
  kLenDiff,
  kSubwordCountDiff,
  kLevenshteinNorm,
  kSubwordOverlap,
  kStringEqual,
  kFeatureCount
};

/// Optional feature groups; each absent group is zero-filled and its mask
/// bit is 0.
enum FeatureGroup : std::uint32_t {
  kGroupM1 = 1u << 0,
  kGroupM2b = 1u << 1,
  kGroupM3aa = 1u << 2,
  kGroupM3bb = 1u << 3,
  kGroupAttention = 1u << 4,
  kGroupFastalign = 1u << 5,
  kGroupM1Reverse = 1u << 6,
  kGroupSubword = 1u << 7,
};

inline constexpr std::size_t kGroupCount = 8;
/// Feature values followed by one mask bit per group.
inline constexpr std::size_t kInputWidth = kFeatureCount + kGroupCount;

std::string_view feature_name(std::size_t feature);
std::string_view group_name(std::size_t bit_index);
/// Comma-separated group names, e.g. "m1,fastalign".
std::string groups_to_string(std::uint32_t groups);
std::uint32_t parse_groups(std::string_view text);

/// Manual features of the six surface comparisons.
struct ManualFeatures {
  double pos_diff = 0.0;
  double len_diff = 0.0;
  double subword_count_diff = 0.0;
  double levenshtein_norm = 0.0;
  double subword_overlap = 0.0;
  double string_equal = 0.0;
};

/// Subword features are left at 0 unless `subwords` is set, in which case
/// both tokens must carry a segmentation.
ManualFeatures manual_features(const SentencePair& pair, std::size_t i,
                               std::size_t j, bool subwords);

/// Levenshtein distance over code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

/// Per-sentence score sources.  Each vector is empty when the group is
/// absent.  `m1_reverse` is given in its own orientation (|T| x |S|).
struct FeatureSources {
  std::vector<SoftAlignment> m1;
  std::vector<SoftAlignment> m2b;
  std::vector<SoftAlignment> m3aa;
  std::vector<SoftAlignment> m3bb;
  std::vector<SoftAlignment> attention;
  std::vector<HardAlignment> fastalign;
  std::vector<SoftAlignment> m1_reverse;
  bool subwords = false;

  std::uint32_t groups() const;
};

struct SentenceBlock {
  std::size_t id = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;  // first table row

  friend bool operator==(const SentenceBlock&, const SentenceBlock&) = default;
};

struct FeatureTable {
  std::uint32_t groups = 0;
  std::vector<SentenceBlock> sentences;
  std::vector<double> values;        // size() x kInputWidth, raw
  std::vector<std::uint8_t> sure;     // empty when unlabeled
  std::vector<std::uint8_t> possible;

  std::size_t size() const { return values.size() / kInputWidth; }
  bool has_gold() const { return !sure.empty(); }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * kInputWidth, kInputWidth};
  }
  /// Gold of one sentence rebuilt from the row labels.
  GoldAlignment gold(std::size_t sentence) const;
  /// Rows of the given sentences, in the given order.
  FeatureTable subset(std::span<const std::size_t> sentence_indices) const;

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

inline constexpr double kFeatureClamp = 100.0;

/// One row per (sentence, i, j) in row-major order.  Score features are
/// clamped to [-kFeatureClamp, kFeatureClamp] so kLogZero cells do not
/// dominate the normalization.
FeatureTable assemble_features(std::span<const SentencePair> pairs,
                               const FeatureSources& sources,
                               std::span<const GoldAlignment> gold = {});

/// TSV with a version line and a header row; values at 17 digits.
void write_feature_table(const FeatureTable& table, std::ostream& out);
FeatureTable read_feature_table(std::istream& in);
void write_feature_table(const FeatureTable& table, const std::string& path);
FeatureTable read_feature_table(const std::string& path);

enum class LabelPolicy { SurePossible, SureOnly };

struct Normalizer {
  std::vector<double> mean;   // kFeatureCount entries
  std::vector<double> scale;

  /// Mask columns pass through unchanged.
  void apply(std::span<const double> raw, std::span<double> out) const;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// z-scoring statistics over all rows; constant columns get scale 1.
Normalizer fit_normalizer(const FeatureTable& table);

struct EnsembleModel {
  Mlp net;
  Normalizer normalizer;
  std::uint32_t groups = 0;
  LabelPolicy labels = LabelPolicy::SurePossible;
  std::uint64_t seed = 0;

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

void save_ensemble(const EnsembleModel& model, std::ostream& out);
EnsembleModel load_ensemble(std::istream& in);
void save_ensemble(const EnsembleModel& model, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.01;
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;
  /// Share of sentences held out for epoch selection.
  double validation_fraction = 0.1;
  double dropout = 0.2;
  LabelPolicy labels = LabelPolicy::SurePossible;
  std::vector<ExtractorSpec> selection = ensemble_extractor_chain();

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // from 1
  double train_loss = 0.0;
  double validation_aer = 0.0;
};

struct TrainResult {
  EnsembleModel model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  std::vector<std::size_t> validation_sentences;
};

/// Splits sentences with the seed; see the overload for explicit splits.
TrainResult train_ensemble(const FeatureTable& table, const TrainConfig& config,
                           const std::function<void(const EpochLog&)>& on_epoch = {});

TrainResult train_ensemble(const FeatureTable& train, const FeatureTable& validation,
                           const TrainConfig& config,
                           const std::function<void(const EpochLog&)>& on_epoch = {});

/// Probability-space matrices, one per sentence of the table.
std::vector<SoftAlignment> ensemble_scores(const EnsembleModel& model,
                                           const FeatureTable& table);

/// ensemble_scores followed by `chain` intersected.
std::vector<HardAlignment> ensemble_align(
    const EnsembleModel& model, const FeatureTable& table,
    const std::vector<ExtractorSpec>& chain = ensemble_extractor_chain());

}  // namespace alignkit

#endif  // ALIGNKIT_ENSEMBLE_HPP_
