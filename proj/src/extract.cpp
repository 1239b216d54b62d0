// src/extract.cpp

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

#include "alignkit/extract.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "alignkit/error.hpp"
#include "alignkit/parallel.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

void check_alpha(ExtractorKind kind, double alpha) {
  switch (kind) {
    case ExtractorKind::A1:
      return;
    case ExtractorKind::A2:
      if (!std::isfinite(alpha)) throw ConfigError("A2 threshold must be finite");
      return;
    case ExtractorKind::A3:
    case ExtractorKind::A4:
      if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("A3/A4 alpha must lie in (0,1], got " +
                          format_real_shortest(alpha));
      return;
  }
}

ExtractorSpec ExtractorSpec::parse(std::string_view text) {
  ExtractorSpec spec;
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  if (name == "a1") {
    spec.kind = ExtractorKind::A1;
    if (colon != std::string_view::npos)
      throw ConfigError("a1 takes no parameter");
    return spec;
  }
  if (name == "a2") spec.kind = ExtractorKind::A2;
  else if (name == "a3") spec.kind = ExtractorKind::A3;
  else if (name == "a4") spec.kind = ExtractorKind::A4;
  else throw ConfigError("unknown extractor '" + std::string(text) + "'");
  if (colon == std::string_view::npos)
    throw ConfigError("extractor '" + std::string(name) + "' needs :<alpha>");
  try {
    spec.alpha = parse_real(text.substr(colon + 1));
  } catch (const MalformedInput&) {
    throw ConfigError("bad alpha in extractor '" + std::string(text) + "'");
  }
  check_alpha(spec.kind, spec.alpha);
  return spec;
}

std::string ExtractorSpec::to_string() const {
  switch (kind) {
    case ExtractorKind::A1: return "a1";
    case ExtractorKind::A2: return "a2:" + format_real_shortest(alpha);
    case ExtractorKind::A3: return "a3:" + format_real_shortest(alpha);
    case ExtractorKind::A4: return "a4:" + format_real_shortest(alpha);
  }
  return "";
}

namespace {

Link link(std::size_t i, std::size_t j) {
  return {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
}

double relative_threshold(double best, double alpha) {
  return std::min(best * alpha, best / alpha);
}

}  // namespace

HardAlignment extract_a1(const SoftAlignment& scores) {
  return extract_a3(scores, 1.0);
}

HardAlignment extract_a2(const SoftAlignment& scores, double alpha) {
  check_alpha(ExtractorKind::A2, alpha);
  std::vector<Link> links;
  for (std::size_t i = 0; i < scores.rows(); ++i)
    for (std::size_t j = 0; j < scores.cols(); ++j)
      if (scores(i, j) >= alpha) links.push_back(link(i, j));
  return HardAlignment(scores.rows(), scores.cols(), std::move(links));
}

HardAlignment extract_a3(const SoftAlignment& scores, double alpha) {
  check_alpha(ExtractorKind::A3, alpha);
  std::vector<Link> links;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    if (row.empty()) continue;
    const double threshold =
        relative_threshold(*std::max_element(row.begin(), row.end()), alpha);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j] >= threshold) links.push_back(link(i, j));
  }
  return HardAlignment(scores.rows(), scores.cols(), std::move(links));
}

HardAlignment extract_a4(const SoftAlignment& scores, double alpha) {
  check_alpha(ExtractorKind::A4, alpha);
  std::vector<Link> links;
  if (scores.rows() == 0) return HardAlignment(0, scores.cols());
  for (std::size_t j = 0; j < scores.cols(); ++j) {
    double best = scores(0, j);
    for (std::size_t i = 1; i < scores.rows(); ++i) best = std::max(best, scores(i, j));
    const double threshold = relative_threshold(best, alpha);
    for (std::size_t i = 0; i < scores.rows(); ++i)
      if (scores(i, j) >= threshold) links.push_back(link(i, j));
  }
  return HardAlignment(scores.rows(), scores.cols(), std::move(links));
}

HardAlignment extract(const SoftAlignment& scores, const ExtractorSpec& spec) {
  switch (spec.kind) {
    case ExtractorKind::A1: return extract_a1(scores);
    case ExtractorKind::A2: return extract_a2(scores, spec.alpha);
    case ExtractorKind::A3: return extract_a3(scores, spec.alpha);
    case ExtractorKind::A4: return extract_a4(scores, spec.alpha);
  }
  return {};
}

HardAlignment combine(std::span<const HardAlignment> sets, SetOp op) {
  if (sets.empty()) throw MalformedInput("combine: no alignments given");
  const auto rows = sets.front().rows();
  const auto cols = sets.front().cols();
  std::vector<Link> acc = sets.front().links();
  for (const auto& s : sets.subspan(1)) {
    if (s.rows() != rows || s.cols() != cols)
      throw MalformedInput("combine: alignments over different sentence shapes");
    std::vector<Link> next;
    if (op == SetOp::Union)
      std::set_union(acc.begin(), acc.end(), s.links().begin(), s.links().end(),
                     std::back_inserter(next));
    else
      std::set_intersection(acc.begin(), acc.end(), s.links().begin(),
                            s.links().end(), std::back_inserter(next));
    acc = std::move(next);
  }
  return HardAlignment(rows, cols, std::move(acc));
}

HardAlignment transpose_alignment(const HardAlignment& a) {
  std::vector<Link> links;
  links.reserve(a.size());
  for (const auto& l : a.links()) links.push_back({l.tgt, l.src});
  return HardAlignment(a.cols(), a.rows(), std::move(links));
}

HardAlignment extract_chain(const SoftAlignment& scores,
                            std::span<const ExtractorSpec> chain, SetOp op) {
  std::vector<HardAlignment> parts;
  parts.reserve(chain.size());
  for (const auto& spec : chain) parts.push_back(extract(scores, spec));
  return combine(parts, op);
}

std::vector<ExtractorSpec> ensemble_extractor_chain() {
  return {{ExtractorKind::A2, 0.001},
          {ExtractorKind::A3, 1.0},
          {ExtractorKind::A4, 1.0}};
}

SymMethod parse_sym_method(std::string_view name) {
  if (name == "reverse") return SymMethod::Reverse;
  if (name == "add") return SymMethod::Add;
  if (name == "multiply") return SymMethod::Multiply;
  if (name == "intersect") return SymMethod::Intersect;
  if (name == "linear") return SymMethod::Linear;
  throw ConfigError("unknown symmetrization method '" + std::string(name) + "'");
}

std::string_view to_string(SymMethod method) {
  switch (method) {
    case SymMethod::Reverse: return "reverse";
    case SymMethod::Add: return "add";
    case SymMethod::Multiply: return "multiply";
    case SymMethod::Intersect: return "intersect";
    case SymMethod::Linear: return "linear";
  }
  return "";
}

SoftAlignment symmetrize_scores(const SoftAlignment& fwd,
                                const SoftAlignment& rev, const SymSpec& spec) {
  if (rev.rows() != fwd.cols() || rev.cols() != fwd.rows())
    throw MalformedInput("reverse scores are " + std::to_string(rev.rows()) +
                         "x" + std::to_string(rev.cols()) + ", expected " +
                         std::to_string(fwd.cols()) + "x" +
                         std::to_string(fwd.rows()));
  if (spec.method == SymMethod::Reverse) return rev.transposed();
  if (spec.method == SymMethod::Intersect)
    throw ConfigError("intersect symmetrizes hard alignments, not scores");
  if (fwd.space() != rev.space())
    throw MalformedInput("cannot combine " + std::string(to_string(fwd.space())) +
                         " with " + std::string(to_string(rev.space())) +
                         " scores");
  if (spec.method == SymMethod::Add && fwd.space() == ScoreSpace::Probability)
    throw MalformedInput("add expects log or logit-diff scores; use multiply");
  if (spec.method == SymMethod::Multiply && fwd.space() != ScoreSpace::Probability)
    throw MalformedInput("multiply expects probability scores; use add");

  const auto out_space =
      spec.method == SymMethod::Linear ? ScoreSpace::LogitDiff : fwd.space();
  SoftAlignment out(fwd.rows(), fwd.cols(), out_space);
  const auto& [b0, b1, b2] = spec.betas;
  for (std::size_t i = 0; i < fwd.rows(); ++i) {
    for (std::size_t j = 0; j < fwd.cols(); ++j) {
      const double p = fwd(i, j);
      const double r = rev(j, i);
      switch (spec.method) {
        case SymMethod::Add: out.set(i, j, p + r); break;
        case SymMethod::Multiply: out.set(i, j, p * r); break;
        default: out.set(i, j, b0 * p + b1 * r + b2 * p * r); break;
      }
    }
  }
  return out;
}

HardAlignment symmetrize_hard(const HardAlignment& fwd,
                              const HardAlignment& rev) {
  const std::array<HardAlignment, 2> parts{fwd, transpose_alignment(rev)};
  return combine(parts, SetOp::Intersect);
}

std::array<double, 3> fit_linear_sym(std::span<const LinearSymSample> samples) {
  if (samples.size() < 3)
    throw FitError("linear symmetrization needs at least 3 samples");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(samples.size()), 3);
  Eigen::VectorXd labels(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    design(row, 0) = samples[k].fwd;
    design(row, 1) = samples[k].rev;
    design(row, 2) = samples[k].fwd * samples[k].rev;
    labels(row) = samples[k].label;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < 3)
    throw FitError("linear symmetrization design matrix is rank deficient");
  const Eigen::Vector3d beta = qr.solve(labels);
  return {beta(0), beta(1), beta(2)};
}

std::vector<SweepRow> alpha_sweep(std::span<const SoftAlignment> scores,
                                  std::span<const GoldAlignment> golds,
                                  ExtractorKind kind,
                                  std::span<const double> alphas) {
  if (scores.size() != golds.size())
    throw MalformedInput("sweep: " + std::to_string(scores.size()) +
                         " score matrices vs " + std::to_string(golds.size()) +
                         " gold alignments");
  for (double a : alphas) check_alpha(kind, a);
  std::vector<SweepRow> rows;
  rows.reserve(alphas.size());
  std::vector<AlignmentCounts> counts(scores.size());
  for (double alpha : alphas) {
    const ExtractorSpec spec{kind, alpha};
    parallel_for(scores.size(), [&](std::size_t k) {
      counts[k] = count_links(extract(scores[k], spec), golds[k]);
    });
    AlignmentCounts total;
    for (const auto& c : counts) total += c;
    rows.push_back({alpha, metrics_from_counts(total), total.hyp});
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "alpha,precision,recall,aer\n";
  for (const auto& r : rows)
    out << format_fixed(r.alpha, 6) << ',' << format_fixed(r.metrics.precision, 6)
        << ',' << format_fixed(r.metrics.recall, 6) << ','
        << format_fixed(r.metrics.aer, 6) << '\n';
  return out.str();
}

}  // namespace alignkit
