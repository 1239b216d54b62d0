// alignkit/mlp.hpp

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

// Small feed-forward regressor: tanh hidden layers, logistic output.

#ifndef ALIGNKIT_MLP_HPP_
#define ALIGNKIT_MLP_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "alignkit/random.hpp"

namespace alignkit {

inline const std::vector<std::size_t> kHiddenWidths = {32, 16, 16, 8};

/// Hidden layers whose outputs pass through dropout while training.
inline constexpr std::size_t kDropoutLayers = 2;

struct Mlp {
  std::vector<std::size_t> widths;           // input, hidden..., 1
  std::vector<std::vector<double>> weights;  // layer k: widths[k+1] x widths[k]
  std::vector<std::vector<double>> biases;
  double dropout = 0.2;

  std::size_t input_width() const { return widths.front(); }
  std::size_t layers() const { return weights.size(); }
  std::size_t parameter_count() const;
  /// Width of one sample's dropout mask.
  std::size_t dropout_width() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Glorot-uniform weights, zero biases.
Mlp make_mlp(std::size_t input_width, Rng& rng, double dropout = 0.2,
             const std::vector<std::size_t>& hidden = kHiddenWidths);

/// Evaluation-mode output, strictly inside (0, 1).
double mlp_forward(const Mlp& net, std::span<const double> x);

/// Pre-squash output.
double mlp_logit(const Mlp& net, std::span<const double> x);

struct MlpGradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  explicit MlpGradient(const Mlp& net);
  void zero();
};

/// Inverted-dropout multipliers (0 or 1/(1-p)) for `batch` samples.
std::vector<double> sample_dropout_masks(const Mlp& net, std::size_t batch,
                                         Rng& rng);

/// Weighted binary cross-entropy averaged over the batch.  `x` is
/// batch x input_width row-major; `masks` is empty (no dropout) or
/// batch x dropout_width().  Accumulates into `grad` when non-null.
double mlp_loss(const Mlp& net, std::span<const double> x,
                std::span<const double> labels, std::span<const double> weights,
                std::span<const double> masks, MlpGradient* grad);

/// net -= rate * grad
void sgd_step(Mlp& net, const MlpGradient& grad, double rate);

bool all_finite(const Mlp& net);

}  // namespace alignkit

#endif  // ALIGNKIT_MLP_HPP_
