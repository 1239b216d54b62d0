// alignkit/extract.hpp

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

// Hard-alignment extraction from soft scores, alignment set algebra and
// symmetrization of the two translation directions.
//
// Extractors (p is the soft matrix, rows are source tokens):
//   A1        every t attaining max_r p(s, r), per source s
//   A2(a)     every (s, t) with p(s, t) >= a
//   A3(a)     p(s, t) >= min(max_r p(s, r) * a, max_r p(s, r) / a), a in (0,1]
//   A4(a)     as A3 over columns: threshold from max_r p(r, t)
// Ties at a threshold are included.  A3(1) is A1.

#ifndef ALIGNKIT_EXTRACT_HPP_
#define ALIGNKIT_EXTRACT_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alignkit/core.hpp"

namespace alignkit {

enum class ExtractorKind { A1, A2, A3, A4 };

struct ExtractorSpec {
  ExtractorKind kind = ExtractorKind::A1;
  double alpha = 1.0;

  /// Parses `a1`, `a2:<alpha>`, `a3:<alpha>` or `a4:<alpha>`; A3/A4 alphas
  /// must lie in (0,1].  Throws ConfigError.
  static ExtractorSpec parse(std::string_view text);
  std::string to_string() const;
};

/// Throws ConfigError when `alpha` is outside the extractor's domain.
void check_alpha(ExtractorKind kind, double alpha);

HardAlignment extract_a1(const SoftAlignment& scores);
HardAlignment extract_a2(const SoftAlignment& scores, double alpha);
HardAlignment extract_a3(const SoftAlignment& scores, double alpha);
HardAlignment extract_a4(const SoftAlignment& scores, double alpha);
HardAlignment extract(const SoftAlignment& scores, const ExtractorSpec& spec);

enum class SetOp { Union, Intersect };

HardAlignment combine(std::span<const HardAlignment> sets, SetOp op);
HardAlignment transpose_alignment(const HardAlignment& a);

/// Runs every extractor on `scores` and combines the results.
HardAlignment extract_chain(const SoftAlignment& scores,
                            std::span<const ExtractorSpec> chain, SetOp op);

/// The ensemble's fixed chain: A2(0.001) and A3(1) and A4(1), intersected.
std::vector<ExtractorSpec> ensemble_extractor_chain();

enum class SymMethod { Reverse, Add, Multiply, Intersect, Linear };

SymMethod parse_sym_method(std::string_view name);
std::string_view to_string(SymMethod method);

struct SymSpec {
  SymMethod method = SymMethod::Add;
  /// Linear only: p_sym = b0 * p(s,t) + b1 * p_rev(t,s) + b2 * p(s,t) * p_rev(t,s)
  std::array<double, 3> betas{1.0, 0.0, 0.0};
};

/// Combines forward scores with reverse-direction scores (shape |T| x |S|).
/// Add requires log or logit-diff scores, Multiply probability scores;
/// Intersect works on hard alignments (see symmetrize_hard).
SoftAlignment symmetrize_scores(const SoftAlignment& fwd,
                                const SoftAlignment& rev, const SymSpec& spec);

/// fwd intersected with the transposed reverse-direction alignment.
HardAlignment symmetrize_hard(const HardAlignment& fwd,
                              const HardAlignment& rev);

struct LinearSymSample {
  double fwd = 0.0;
  double rev = 0.0;
  double label = 0.0;
};

/// Least squares of label on (fwd, rev, fwd*rev) without intercept.
/// Throws FitError for fewer than 3 samples or a rank-deficient design.
std::array<double, 3> fit_linear_sym(std::span<const LinearSymSample> samples);

struct SweepRow {
  double alpha = 0.0;
  Metrics metrics;
  std::size_t hypothesis_links = 0;
};

/// Corpus micro metrics for each alpha of one extractor kind.
std::vector<SweepRow> alpha_sweep(std::span<const SoftAlignment> scores,
                                  std::span<const GoldAlignment> golds,
                                  ExtractorKind kind,
                                  std::span<const double> alphas);

/// `alpha,precision,recall,aer` with 6 decimals.
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace alignkit

#endif  // ALIGNKIT_EXTRACT_HPP_
