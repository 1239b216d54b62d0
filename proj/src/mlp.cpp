// src/mlp.cpp

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

#include "alignkit/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alignkit/error.hpp"

namespace alignkit {

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < layers(); ++k) n += weights[k].size() + biases[k].size();
  return n;
}

std::size_t Mlp::dropout_width() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < kDropoutLayers && k + 1 < layers(); ++k)
    n += widths[k + 1];
  return n;
}

Mlp make_mlp(std::size_t input_width, Rng& rng, double dropout,
             const std::vector<std::size_t>& hidden) {
  if (input_width == 0) throw ConfigError("network input width must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  Mlp net;
  net.dropout = dropout;
  net.widths.push_back(input_width);
  net.widths.insert(net.widths.end(), hidden.begin(), hidden.end());
  net.widths.push_back(1);
  for (std::size_t k = 0; k + 1 < net.widths.size(); ++k) {
    const auto in = net.widths[k];
    const auto out = net.widths[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> w(in * out);
    for (auto& v : w) v = rng.uniform(-limit, limit);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(out, 0.0);
  }
  return net;
}

namespace {

void affine(const Mlp& net, std::size_t k, std::span<const double> in,
            std::vector<double>& out) {
  const auto n_in = net.widths[k];
  const auto n_out = net.widths[k + 1];
  out.assign(net.biases[k].begin(), net.biases[k].end());
  const double* w = net.weights[k].data();
  for (std::size_t r = 0; r < n_out; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n_in; ++c) s += w[r * n_in + c] * in[c];
    out[r] += s;
  }
}

double sigmoid(double z) {
  const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                          : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(p, std::numeric_limits<double>::min(),
                    1.0 - std::numeric_limits<double>::epsilon() / 2);
}

void check_width(const Mlp& net, std::size_t n) {
  if (n != net.input_width())
    throw MalformedInput("feature width " + std::to_string(n) +
                         " does not match network input width " +
                         std::to_string(net.input_width()));
}

}  // namespace

double mlp_logit(const Mlp& net, std::span<const double> x) {
  check_width(net, x.size());
  std::vector<double> a(x.begin(), x.end()), h;
  for (std::size_t k = 0; k < net.layers(); ++k) {
    affine(net, k, a, h);
    if (k + 1 < net.layers())
      for (auto& v : h) v = std::tanh(v);
    a.swap(h);
  }
  return a[0];
}

double mlp_forward(const Mlp& net, std::span<const double> x) {
  return sigmoid(mlp_logit(net, x));
}

MlpGradient::MlpGradient(const Mlp& net) {
  for (std::size_t k = 0; k < net.layers(); ++k) {
    weights.emplace_back(net.weights[k].size(), 0.0);
    biases.emplace_back(net.biases[k].size(), 0.0);
  }
}

void MlpGradient::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

std::vector<double> sample_dropout_masks(const Mlp& net, std::size_t batch,
                                         Rng& rng) {
  std::vector<double> masks(batch * net.dropout_width());
  const double keep = 1.0 / (1.0 - net.dropout);
  for (auto& m : masks) m = rng.bernoulli(net.dropout) ? 0.0 : keep;
  return masks;
}

double mlp_loss(const Mlp& net, std::span<const double> x,
                std::span<const double> labels, std::span<const double> weights,
                std::span<const double> masks, MlpGradient* grad) {
  const auto n_in = net.input_width();
  const auto batch = labels.size();
  if (batch == 0) return 0.0;
  if (x.size() != batch * n_in || weights.size() != batch)
    throw MalformedInput("batch shape does not match the network");
  const auto mask_width = net.dropout_width();
  if (!masks.empty() && masks.size() != batch * mask_width)
    throw MalformedInput("dropout mask shape does not match the batch");

  const auto L = net.layers();
  std::vector<std::vector<double>> acts(L + 1);  // acts[k] feeds layer k
  std::vector<double> delta, prev;
  double total = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    acts[0].assign(x.begin() + n * n_in, x.begin() + (n + 1) * n_in);
    std::size_t mask_pos = n * mask_width;
    for (std::size_t k = 0; k < L; ++k) {
      affine(net, k, acts[k], acts[k + 1]);
      if (k + 1 == L) break;
      for (auto& v : acts[k + 1]) v = std::tanh(v);
      if (!masks.empty() && k < kDropoutLayers)
        for (auto& v : acts[k + 1]) v *= masks[mask_pos++];
    }
    const double z = acts[L][0];
    const double y = labels[n];
    const double w = weights[n];
    total += w * (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
    if (grad == nullptr) continue;

    delta.assign(1, w * (sigmoid(z) - y) / static_cast<double>(batch));
    mask_pos = n * mask_width + mask_width;
    for (std::size_t k = L; k-- > 0;) {
      const auto n_out = net.widths[k + 1];
      const auto n_prev = net.widths[k];
      if (k + 1 < L) {
        // delta is w.r.t. this layer's (masked) output
        if (!masks.empty() && k < kDropoutLayers) {
          mask_pos -= n_out;
          for (std::size_t r = 0; r < n_out; ++r) {
            const double m = masks[mask_pos + r];
            const double t = m == 0.0 ? 0.0 : acts[k + 1][r] / m;
            delta[r] *= m * (1.0 - t * t);
          }
        } else {
          for (std::size_t r = 0; r < n_out; ++r)
            delta[r] *= 1.0 - acts[k + 1][r] * acts[k + 1][r];
        }
      }
      auto& gw = grad->weights[k];
      auto& gb = grad->biases[k];
      for (std::size_t r = 0; r < n_out; ++r) {
        gb[r] += delta[r];
        for (std::size_t c = 0; c < n_prev; ++c) gw[r * n_prev + c] += delta[r] * acts[k][c];
      }
      if (k == 0) break;
      prev.assign(n_prev, 0.0);
      const double* wk = net.weights[k].data();
      for (std::size_t r = 0; r < n_out; ++r)
        for (std::size_t c = 0; c < n_prev; ++c) prev[c] += wk[r * n_prev + c] * delta[r];
      delta.swap(prev);
    }
  }
  return total / static_cast<double>(batch);
}

void sgd_step(Mlp& net, const MlpGradient& grad, double rate) {
  for (std::size_t k = 0; k < net.layers(); ++k) {
    for (std::size_t p = 0; p < net.weights[k].size(); ++p)
      net.weights[k][p] -= rate * grad.weights[k][p];
    for (std::size_t p = 0; p < net.biases[k].size(); ++p)
      net.biases[k][p] -= rate * grad.biases[k][p];
  }
}

bool all_finite(const Mlp& net) {
  for (std::size_t k = 0; k < net.layers(); ++k) {
    for (double v : net.weights[k])
      if (!std::isfinite(v)) return false;
    for (double v : net.biases[k])
      if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace alignkit
