// src/ensemble.cpp

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

#include "alignkit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "alignkit/error.hpp"
#include "alignkit/parallel.hpp"
#include "alignkit/random.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "m1",       "m2b",      "m3aa",
    "m3bb",     "attention_avg", "fastalign_binary",
    "m1_reverse", "pos_diff", "len_diff",
    "subword_count_diff", "levenshtein_norm", "subword_overlap",
    "string_equal"};

constexpr std::array<std::string_view, kGroupCount> kGroupNames = {
    "m1", "m2b", "m3aa", "m3bb", "attn", "fastalign", "m1_rev", "subword"};

}  // namespace

std::string_view feature_name(std::size_t feature) {
  return kFeatureNames.at(feature);
}

std::string_view group_name(std::size_t bit_index) {
  return kGroupNames.at(bit_index);
}

std::string groups_to_string(std::uint32_t groups) {
  std::string out;
  for (std::size_t b = 0; b < kGroupCount; ++b) {
    if (!(groups & (1u << b))) continue;
    if (!out.empty()) out += ',';
    out += kGroupNames[b];
  }
  return out.empty() ? "-" : out;
}

std::uint32_t parse_groups(std::string_view text) {
  if (text == "-" || text.empty()) return 0;
  std::uint32_t groups = 0;
  for (const auto& name : split(text, ",")) {
    const auto it = std::find(kGroupNames.begin(), kGroupNames.end(), name);
    if (it == kGroupNames.end())
      throw MalformedInput("unknown feature group '" + name + "'");
    groups |= 1u << (it - kGroupNames.begin());
  }
  return groups;
}

// Manual features

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    prev.swap(cur);
  }
  return prev[b.size()];
}

ManualFeatures manual_features(const SentencePair& pair, std::size_t i,
                               std::size_t j, bool subwords) {
  if (i >= pair.src.size() || j >= pair.tgt.size())
    throw MalformedInput("token index out of range in sentence " +
                         std::to_string(pair.id));
  const auto& s = pair.src[i];
  const auto& t = pair.tgt[j];
  ManualFeatures f;
  f.pos_diff = std::abs(static_cast<double>(i) / pair.src.size() -
                        static_cast<double>(j) / pair.tgt.size());
  const auto s_len = decode_utf8(s.text).size();
  const auto t_len = decode_utf8(t.text).size();
  f.len_diff = std::abs(static_cast<double>(s_len) - static_cast<double>(t_len));
  const auto s_fold = fold_case_utf8(s.text);
  const auto t_fold = fold_case_utf8(t.text);
  f.levenshtein_norm = static_cast<double>(levenshtein(s_fold, t_fold)) /
                       static_cast<double>(std::max(s_fold.size(), t_fold.size()));
  f.string_equal = s_fold == t_fold ? 1.0 : 0.0;
  if (subwords) {
    if (!s.has_subwords() || !t.has_subwords())
      throw MalformedInput("sentence " + std::to_string(pair.id) +
                           ": subword features need segmented tokens");
    f.subword_count_diff = std::abs(static_cast<double>(s.subwords->size()) -
                                    static_cast<double>(t.subwords->size()));
    std::set<std::string> s_units, t_units;
    for (const auto& p : *s.subwords) s_units.insert(strip_segmentation_markers(p));
    for (const auto& p : *t.subwords) t_units.insert(strip_segmentation_markers(p));
    f.subword_overlap = static_cast<double>(std::count_if(
        s_units.begin(), s_units.end(),
        [&](const std::string& u) { return t_units.count(u) > 0; }));
  }
  return f;
}

// Feature tables

std::uint32_t FeatureSources::groups() const {
  std::uint32_t g = 0;
  if (!m1.empty()) g |= kGroupM1;
  if (!m2b.empty()) g |= kGroupM2b;
  if (!m3aa.empty()) g |= kGroupM3aa;
  if (!m3bb.empty()) g |= kGroupM3bb;
  if (!attention.empty()) g |= kGroupAttention;
  if (!fastalign.empty()) g |= kGroupFastalign;
  if (!m1_reverse.empty()) g |= kGroupM1Reverse;
  if (subwords) g |= kGroupSubword;
  return g;
}

GoldAlignment FeatureTable::gold(std::size_t sentence) const {
  if (!has_gold()) throw MalformedInput("feature table has no gold labels");
  const auto& b = sentences.at(sentence);
  std::vector<Link> s, p;
  for (std::size_t r = 0; r < b.rows * b.cols; ++r) {
    const Link l{static_cast<std::uint32_t>(r / b.cols),
                 static_cast<std::uint32_t>(r % b.cols)};
    if (sure[b.offset + r]) s.push_back(l);
    if (possible[b.offset + r]) p.push_back(l);
  }
  return GoldAlignment(b.rows, b.cols, std::move(s), std::move(p));
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> indices) const {
  FeatureTable out;
  out.groups = groups;
  for (auto k : indices) {
    auto b = sentences.at(k);
    const auto n = b.rows * b.cols;
    const auto from = b.offset;
    b.offset = out.size();
    out.sentences.push_back(b);
    out.values.insert(out.values.end(), values.begin() + from * kInputWidth,
                      values.begin() + (from + n) * kInputWidth);
    if (has_gold()) {
      out.sure.insert(out.sure.end(), sure.begin() + from, sure.begin() + from + n);
      out.possible.insert(out.possible.end(), possible.begin() + from,
                          possible.begin() + from + n);
    }
  }
  return out;
}

namespace {

double clamp_score(double v) { return std::clamp(v, -kFeatureClamp, kFeatureClamp); }

template <typename T>
void check_source(const std::vector<T>& source, std::size_t n, const char* name) {
  if (!source.empty() && source.size() != n)
    throw MalformedInput(std::string(name) + " has " + std::to_string(source.size()) +
                         " sentences for a corpus of " + std::to_string(n));
}

template <typename T>
void check_shape(const T& m, std::size_t rows, std::size_t cols,
                 const SentencePair& pair, const char* name) {
  if (m.rows() != rows || m.cols() != cols)
    throw MalformedInput("sentence " + std::to_string(pair.id) + ": " + name +
                         " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace

FeatureTable assemble_features(std::span<const SentencePair> pairs,
                               const FeatureSources& sources,
                               std::span<const GoldAlignment> gold) {
  const auto n = pairs.size();
  check_source(sources.m1, n, "m1");
  check_source(sources.m2b, n, "m2b");
  check_source(sources.m3aa, n, "m3aa");
  check_source(sources.m3bb, n, "m3bb");
  check_source(sources.attention, n, "attention");
  check_source(sources.fastalign, n, "fastalign");
  check_source(sources.m1_reverse, n, "m1_reverse");
  if (!gold.empty() && gold.size() != n)
    throw MalformedInput("gold has " + std::to_string(gold.size()) +
                         " sentences for a corpus of " + std::to_string(n));

  FeatureTable table;
  table.groups = sources.groups();
  std::vector<std::vector<double>> blocks(n);
  parallel_for(n, [&](std::size_t k) {
    const auto& pair = pairs[k];
    pair.validate();
    const auto rows = pair.src.size();
    const auto cols = pair.tgt.size();
    const auto soft = [&](const std::vector<SoftAlignment>& src, const char* name,
                          bool transposed) -> const SoftAlignment* {
      if (src.empty()) return nullptr;
      check_shape(src[k], transposed ? cols : rows, transposed ? rows : cols, pair,
                  name);
      return &src[k];
    };
    const auto* m1 = soft(sources.m1, "m1", false);
    const auto* m2b = soft(sources.m2b, "m2b", false);
    const auto* m3aa = soft(sources.m3aa, "m3aa", false);
    const auto* m3bb = soft(sources.m3bb, "m3bb", false);
    const auto* attn = soft(sources.attention, "attention", false);
    const auto* m1r = soft(sources.m1_reverse, "m1_reverse", true);
    const HardAlignment* fa = nullptr;
    if (!sources.fastalign.empty()) {
      check_shape(sources.fastalign[k], rows, cols, pair, "fastalign");
      fa = &sources.fastalign[k];
    }
    if (!gold.empty()) check_shape(gold[k], rows, cols, pair, "gold");

    auto& out = blocks[k];
    out.assign(rows * cols * kInputWidth, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        double* x = out.data() + (i * cols + j) * kInputWidth;
        if (m1) x[kM1] = clamp_score((*m1)(i, j));
        if (m2b) x[kM2b] = clamp_score((*m2b)(i, j));
        if (m3aa) x[kM3aa] = clamp_score((*m3aa)(i, j));
        if (m3bb) x[kM3bb] = clamp_score((*m3bb)(i, j));
        if (attn) x[kAttentionAvg] = (*attn)(i, j);
        if (fa)
          x[kFastalignBinary] = fa->contains({static_cast<std::uint32_t>(i),
                                              static_cast<std::uint32_t>(j)})
                                    ? 1.0
                                    : 0.0;
        if (m1r) x[kM1Reverse] = clamp_score((*m1r)(j, i));
        const auto f = manual_features(pair, i, j, sources.subwords);
        x[kPosDiff] = f.pos_diff;
        x[kLenDiff] = f.len_diff;
        x[kSubwordCountDiff] = f.subword_count_diff;
        x[kLevenshteinNorm] = f.levenshtein_norm;
        x[kSubwordOverlap] = f.subword_overlap;
        x[kStringEqual] = f.string_equal;
        for (std::size_t b = 0; b < kGroupCount; ++b)
          x[kFeatureCount + b] = (table.groups >> b) & 1u ? 1.0 : 0.0;
      }
    }
  });

  for (std::size_t k = 0; k < n; ++k) {
    const auto rows = pairs[k].src.size();
    const auto cols = pairs[k].tgt.size();
    table.sentences.push_back({pairs[k].id, rows, cols, table.size()});
    table.values.insert(table.values.end(), blocks[k].begin(), blocks[k].end());
    if (gold.empty()) continue;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const Link l{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
        table.sure.push_back(gold[k].sure().contains(l));
        table.possible.push_back(gold[k].possible().contains(l));
      }
    }
  }
  return table;
}

// Feature table files

namespace {

constexpr std::string_view kTableMagic = "ALIGNKIT-FEATURES v1";

}  // namespace

void write_feature_table(const FeatureTable& table, std::ostream& out) {
  out << kTableMagic << " groups=" << groups_to_string(table.groups)
      << " labels=" << (table.has_gold() ? "yes" : "no") << '\n';
  out << "sentence\ti\tj\tsure\tpossible";
  for (auto name : kFeatureNames) out << '\t' << name;
  out << '\n';
  for (const auto& b : table.sentences) {
    for (std::size_t r = 0; r < b.rows * b.cols; ++r) {
      const auto row = b.offset + r;
      out << b.id << '\t' << r / b.cols << '\t' << r % b.cols << '\t'
          << (table.has_gold() ? int(table.sure[row]) : 0) << '\t'
          << (table.has_gold() ? int(table.possible[row]) : 0);
      const auto x = table.row(row);
      for (std::size_t f = 0; f < kFeatureCount; ++f) out << '\t' << format_real17(x[f]);
      out << '\n';
    }
  }
}

FeatureTable read_feature_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kTableMagic))
    throw MalformedInput("not a feature table (missing '" + std::string(kTableMagic) +
                         "' line)");
  FeatureTable table;
  bool labeled = false;
  for (const auto& field : split_whitespace(line.substr(kTableMagic.size()))) {
    if (field.starts_with("groups="))
      table.groups = parse_groups(std::string_view(field).substr(7));
    else if (field == "labels=yes")
      labeled = true;
    else if (field != "labels=no")
      throw MalformedInput("unknown feature table attribute '" + field + "'");
  }
  if (!std::getline(in, line)) throw MalformedInput("feature table has no header");
  if (split(line, "\t").size() != 5 + kFeatureCount)
    throw MalformedInput("feature table header has the wrong number of columns");

  std::size_t line_no = 2;
  const auto fail = [&](const std::string& msg) {
    throw MalformedInput("feature table line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, "\t");
    if (fields.size() != 5 + kFeatureCount) fail("wrong number of columns");
    std::vector<long long> ints(5);
    try {
      for (std::size_t c = 0; c < 5; ++c) ints[c] = parse_integer(fields[c]);
    } catch (const MalformedInput&) {
      fail("bad index or label");
    }
    if (std::any_of(ints.begin(), ints.end(), [](long long v) { return v < 0; }) ||
        ints[3] > 1 || ints[4] > 1 || ints[3] > ints[4])
      fail("bad index or label");
    const auto id = static_cast<std::size_t>(ints[0]);
    const auto i = static_cast<std::size_t>(ints[1]);
    const auto j = static_cast<std::size_t>(ints[2]);
    if (table.sentences.empty() || table.sentences.back().id != id ||
        (i == 0 && j == 0)) {
      if (i != 0 || j != 0) fail("sentence " + std::to_string(id) + " must start at 0 0");
      table.sentences.push_back({id, 0, 0, table.size()});
    }
    auto& b = table.sentences.back();
    const auto p = table.size() - b.offset;
    if (i == 0 && b.rows <= 1) {
      if (j != p) fail("cells must be complete and in row-major order");
      b.rows = 1;
      b.cols = p + 1;
    } else {
      if (i != p / b.cols || j != p % b.cols)
        fail("cells must be complete and in row-major order");
      b.rows = i + 1;
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      try {
        table.values.push_back(parse_real(fields[5 + f]));
      } catch (const MalformedInput&) {
        fail("non-numeric feature");
      }
    }
    for (std::size_t g = 0; g < kGroupCount; ++g)
      table.values.push_back((table.groups >> g) & 1u ? 1.0 : 0.0);
    if (labeled) {
      table.sure.push_back(static_cast<std::uint8_t>(ints[3]));
      table.possible.push_back(static_cast<std::uint8_t>(ints[4]));
    }
  }
  for (const auto& b : table.sentences) {
    const auto next = &b == &table.sentences.back()
                          ? table.size()
                          : (&b + 1)->offset;
    if (next - b.offset != b.rows * b.cols)
      throw MalformedInput("feature table sentence " + std::to_string(b.id) +
                           " is not a complete grid");
  }
  return table;
}

void write_feature_table(const FeatureTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MalformedInput("cannot write " + path);
  write_feature_table(table, out);
}

FeatureTable read_feature_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot read " + path);
  try {
    return read_feature_table(in);
  } catch (const MalformedInput& e) {
    throw MalformedInput(path + ": " + e.what());
  }
}

// Normalization

void Normalizer::apply(std::span<const double> raw, std::span<double> out) const {
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    out[f] = (raw[f] - mean[f]) / scale[f];
  for (std::size_t f = kFeatureCount; f < kInputWidth; ++f) out[f] = raw[f];
}

Normalizer fit_normalizer(const FeatureTable& table) {
  Normalizer norm;
  norm.mean.assign(kFeatureCount, 0.0);
  norm.scale.assign(kFeatureCount, 1.0);
  const auto n = table.size();
  if (n == 0) return norm;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += table.values[r * kInputWidth + f];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = table.values[r * kInputWidth + f] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    norm.mean[f] = mean;
    norm.scale[f] = sd > 1e-12 ? sd : 1.0;
  }
  return norm;
}

// Model files

namespace {

constexpr std::string_view kModelMagic = "ALIGNKIT-ENSEMBLE v1";

void write_reals(std::ostream& out, std::string_view key, const std::vector<double>& v) {
  out << key;
  for (double x : v) out << ' ' << format_real17(x);
  out << '\n';
}

std::vector<std::string> expect_line(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line))
    throw MalformedInput("ensemble model: missing '" + std::string(key) + "' line");
  auto fields = split_whitespace(line);
  if (fields.empty() || fields[0] != key)
    throw MalformedInput("ensemble model: expected '" + std::string(key) + "' line");
  fields.erase(fields.begin());
  return fields;
}

std::vector<double> read_reals(std::istream& in, std::string_view key,
                               std::size_t count) {
  const auto fields = expect_line(in, key);
  if (fields.size() != count)
    throw MalformedInput("ensemble model: '" + std::string(key) + "' needs " +
                         std::to_string(count) + " values");
  std::vector<double> v;
  for (const auto& f : fields) {
    v.push_back(parse_real(f));
    if (!std::isfinite(v.back()))
      throw MalformedInput("ensemble model: non-finite parameter");
  }
  return v;
}

}  // namespace

void save_ensemble(const EnsembleModel& model, std::ostream& out) {
  out << kModelMagic << '\n';
  out << "seed " << model.seed << '\n';
  out << "groups " << groups_to_string(model.groups) << '\n';
  out << "labels "
      << (model.labels == LabelPolicy::SurePossible ? "sure+possible" : "sure") << '\n';
  out << "dropout " << format_real17(model.net.dropout) << '\n';
  out << "widths";
  for (auto w : model.net.widths) out << ' ' << w;
  out << '\n';
  write_reals(out, "mean", model.normalizer.mean);
  write_reals(out, "scale", model.normalizer.scale);
  for (std::size_t k = 0; k < model.net.layers(); ++k) {
    write_reals(out, "weights", model.net.weights[k]);
    write_reals(out, "biases", model.net.biases[k]);
  }
}

EnsembleModel load_ensemble(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelMagic)
    throw MalformedInput("not an ensemble model (missing '" +
                         std::string(kModelMagic) + "' line)");
  EnsembleModel model;
  const auto one = [&](std::string_view key) {
    const auto f = expect_line(in, key);
    if (f.size() != 1)
      throw MalformedInput("ensemble model: '" + std::string(key) + "' needs one value");
    return f[0];
  };
  const auto seed = parse_integer(one("seed"));
  if (seed < 0) throw MalformedInput("ensemble model: negative seed");
  model.seed = static_cast<std::uint64_t>(seed);
  model.groups = parse_groups(one("groups"));
  const auto labels = one("labels");
  if (labels == "sure+possible")
    model.labels = LabelPolicy::SurePossible;
  else if (labels == "sure")
    model.labels = LabelPolicy::SureOnly;
  else
    throw MalformedInput("ensemble model: unknown label policy '" + labels + "'");
  model.net.dropout = parse_real(one("dropout"));
  for (const auto& w : expect_line(in, "widths")) {
    const auto v = parse_integer(w);
    if (v <= 0) throw MalformedInput("ensemble model: widths must be positive");
    model.net.widths.push_back(static_cast<std::size_t>(v));
  }
  if (model.net.widths.size() < 2 || model.net.widths.front() != kInputWidth ||
      model.net.widths.back() != 1)
    throw MalformedInput("ensemble model: widths must run from " +
                         std::to_string(kInputWidth) + " to 1");
  model.normalizer.mean = read_reals(in, "mean", kFeatureCount);
  model.normalizer.scale = read_reals(in, "scale", kFeatureCount);
  for (double s : model.normalizer.scale)
    if (s <= 0.0) throw MalformedInput("ensemble model: scale must be positive");
  for (std::size_t k = 0; k + 1 < model.net.widths.size(); ++k) {
    const auto in_w = model.net.widths[k];
    const auto out_w = model.net.widths[k + 1];
    model.net.weights.push_back(read_reals(in, "weights", in_w * out_w));
    model.net.biases.push_back(read_reals(in, "biases", out_w));
  }
  return model;
}

void save_ensemble(const EnsembleModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MalformedInput("cannot write " + path);
  save_ensemble(model, out);
}

EnsembleModel load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot read " + path);
  try {
    return load_ensemble(in);
  } catch (const MalformedInput& e) {
    throw MalformedInput(path + ": " + e.what());
  }
}

// Training and inference

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must be in (0, 1)");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (selection.empty()) throw ConfigError("selection chain is empty");
  for (const auto& s : selection) check_alpha(s.kind, s.alpha);
}

namespace {

std::vector<double> normalized(const Normalizer& norm, const FeatureTable& table) {
  std::vector<double> x(table.values.size());
  for (std::size_t r = 0; r < table.size(); ++r)
    norm.apply(table.row(r), std::span<double>(x.data() + r * kInputWidth, kInputWidth));
  return x;
}

std::vector<SoftAlignment> score_normalized(const Mlp& net, const FeatureTable& table,
                                            const std::vector<double>& x) {
  std::vector<SoftAlignment> out(table.sentences.size());
  parallel_for(out.size(), [&](std::size_t k) {
    const auto& b = table.sentences[k];
    std::vector<double> scores(b.rows * b.cols);
    for (std::size_t r = 0; r < scores.size(); ++r)
      scores[r] = mlp_forward(
          net, std::span<const double>(x.data() + (b.offset + r) * kInputWidth,
                                       kInputWidth));
    out[k] = SoftAlignment(b.rows, b.cols, ScoreSpace::Probability, std::move(scores));
  });
  return out;
}

std::vector<HardAlignment> extract_all(const std::vector<SoftAlignment>& scores,
                                       const std::vector<ExtractorSpec>& chain) {
  std::vector<HardAlignment> out(scores.size());
  parallel_for(out.size(), [&](std::size_t k) {
    out[k] = extract_chain(scores[k], chain, SetOp::Intersect);
  });
  return out;
}

void check_groups(const EnsembleModel& model, const FeatureTable& table) {
  if (model.groups != table.groups)
    throw MalformedInput("feature groups '" + groups_to_string(table.groups) +
                         "' do not match the model's '" +
                         groups_to_string(model.groups) + "'");
}

}  // namespace

TrainResult train_ensemble(const FeatureTable& table, const TrainConfig& config,
                           const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  const auto n = table.sentences.size();
  if (n < 2) throw TrainingError("need at least two sentences to hold out a validation split");
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  Rng split_rng(config.seed);
  split_rng.shuffle(order);
  auto held = static_cast<std::size_t>(
      std::llround(config.validation_fraction * static_cast<double>(n)));
  held = std::clamp<std::size_t>(held, 1, n - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + held);
  std::vector<std::size_t> train(order.begin() + held, order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  auto result = train_ensemble(table.subset(train), table.subset(val), config, on_epoch);
  result.validation_sentences = std::move(val);
  return result;
}

TrainResult train_ensemble(const FeatureTable& train, const FeatureTable& validation,
                           const TrainConfig& config,
                           const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (!train.has_gold() || !validation.has_gold())
    throw TrainingError("training needs gold labels");
  if (train.groups != validation.groups)
    throw MalformedInput("training and validation feature groups differ");
  if (validation.size() == 0) throw TrainingError("validation split is empty");

  const auto& label_src =
      config.labels == LabelPolicy::SurePossible ? train.possible : train.sure;
  const auto n = train.size();
  std::vector<double> labels(label_src.begin(), label_src.end());
  const auto positives = static_cast<std::size_t>(
      std::count(label_src.begin(), label_src.end(), std::uint8_t{1}));
  if (positives == 0 || positives == n)
    throw TrainingError("training data has a single class");
  const double pos_weight =
      static_cast<double>(n - positives) / static_cast<double>(positives);
  std::vector<double> weights(n);
  for (std::size_t r = 0; r < n; ++r) weights[r] = labels[r] > 0.5 ? pos_weight : 1.0;

  std::vector<GoldAlignment> val_gold;
  for (std::size_t k = 0; k < validation.sentences.size(); ++k)
    val_gold.push_back(validation.gold(k));

  TrainResult result;
  auto& model = result.model;
  model.normalizer = fit_normalizer(train);
  model.groups = train.groups;
  model.labels = config.labels;
  model.seed = config.seed;
  const auto x_train = normalized(model.normalizer, train);
  const auto x_val = normalized(model.normalizer, validation);

  Rng rng(config.seed);
  Mlp net = make_mlp(kInputWidth, rng, config.dropout);
  MlpGradient grad(net);
  std::vector<std::size_t> order(n);
  for (std::size_t r = 0; r < n; ++r) order[r] = r;
  std::vector<double> xb, yb, wb;
  double best_aer = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const auto end = std::min(n, start + config.batch_size);
      xb.clear();
      yb.clear();
      wb.clear();
      for (auto p = start; p < end; ++p) {
        const auto r = order[p];
        xb.insert(xb.end(), x_train.begin() + r * kInputWidth,
                  x_train.begin() + (r + 1) * kInputWidth);
        yb.push_back(labels[r]);
        wb.push_back(weights[r]);
      }
      const auto masks = sample_dropout_masks(net, yb.size(), rng);
      grad.zero();
      const double loss = mlp_loss(net, xb, yb, wb, masks, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("epoch " + std::to_string(epoch) + ": loss is not finite");
      total += loss * static_cast<double>(yb.size());
      sgd_step(net, grad, config.learning_rate);
    }
    if (!all_finite(net))
      throw TrainingError("epoch " + std::to_string(epoch) + ": parameters diverged");

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = total / static_cast<double>(n);
    const auto hyps = extract_all(score_normalized(net, validation, x_val), config.selection);
    try {
      log.validation_aer = corpus_eval(hyps, val_gold).aer;
    } catch (const UndefinedMetric&) {
      throw TrainingError("validation split has no sure links");
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (log.validation_aer < best_aer) {
      best_aer = log.validation_aer;
      result.best_epoch = epoch;
      model.net = net;
    }
  }
  return result;
}

std::vector<SoftAlignment> ensemble_scores(const EnsembleModel& model,
                                           const FeatureTable& table) {
  check_groups(model, table);
  if (model.net.input_width() != kInputWidth)
    throw MalformedInput("model input width does not match the feature layout");
  return score_normalized(model.net, table, normalized(model.normalizer, table));
}

std::vector<HardAlignment> ensemble_align(const EnsembleModel& model,
                                          const FeatureTable& table,
                                          const std::vector<ExtractorSpec>& chain) {
  return extract_all(ensemble_scores(model, table), chain);
}

}  // namespace alignkit
