// tests/unit/test_mlp.cpp

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

#include "alignkit/error.hpp"
#include "alignkit/mlp.hpp"
#include "mlp_oracle.hpp"

using namespace alignkit;

TEST_CASE("layout") {
  Rng rng(1);
  const auto net = make_mlp(21, rng);
  CHECK(net.widths == std::vector<std::size_t>{21, 32, 16, 16, 8, 1});
  CHECK(net.parameter_count() == 21 * 32 + 32 + 32 * 16 + 16 + 16 * 16 + 16 + 16 * 8 + 8 + 8 + 1);
  CHECK(net.dropout_width() == 48);
  for (const auto& b : net.biases)
    for (double v : b) CHECK(v == 0.0);
  const double limit = std::sqrt(6.0 / 53.0);
  for (double v : net.weights[0]) CHECK(std::abs(v) <= limit);
  CHECK_THROWS_AS(make_mlp(0, rng), ConfigError);
  CHECK_THROWS_AS(make_mlp(3, rng, 1.0), ConfigError);
}

TEST_CASE("zero weights give one half") {
  Rng rng(2);
  auto net = make_mlp(5, rng);
  for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
  const std::vector<double> x{1, -2, 3, 0.5, 9};
  CHECK(mlp_forward(net, x) == 0.5);
}

TEST_CASE("forward matches the straight-line oracle") {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    auto net = make_mlp(21, rng);
    for (auto& b : net.biases)
      for (auto& v : b) v = rng.uniform(-0.5, 0.5);
    std::vector<double> x(21);
    for (auto& v : x) v = 2.0 * rng.normal();
    CHECK(std::abs(mlp_forward(net, x) - testing::oracle_output(net, x.data())) < 1e-10);
    CHECK(std::abs(mlp_logit(net, x) - testing::oracle_logit(net, x.data(), nullptr)) < 1e-10);
    const double p = mlp_forward(net, x);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  auto net = make_mlp(21, rng);
  CHECK_THROWS_AS(mlp_forward(net, std::vector<double>(20)), MalformedInput);
}

TEST_CASE("loss matches the oracle with and without dropout") {
  Rng rng(4);
  const auto net = make_mlp(7, rng, 0.3, {6, 5, 4});
  for (bool dropout : {false, true}) {
    const auto b = testing::random_gradient_batch(net, rng, 9, dropout);
    CHECK(mlp_loss(net, b.x, b.y, b.w, b.masks, nullptr) ==
          doctest::Approx(testing::oracle_loss(net, b.x, b.y, b.w, b.masks)).epsilon(1e-12));
  }
  const auto b = testing::random_gradient_batch(net, rng, 3, false);
  CHECK_THROWS_AS(mlp_loss(net, b.x, {b.y.data(), 2}, b.w, {}, nullptr), MalformedInput);
  const std::vector<double> short_masks(5, 1.0);
  CHECK_THROWS_AS(mlp_loss(net, b.x, b.y, b.w, short_masks, nullptr), MalformedInput);
}

TEST_CASE("gradient check") {
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    auto net = make_mlp(21, rng);
    for (auto& bias : net.biases)
      for (auto& v : bias) v = rng.uniform(-0.3, 0.3);
    const auto b = testing::random_gradient_batch(net, rng, 1 + rng.index(4), k % 2 == 0);
    CHECK(testing::gradient_relative_error(net, b) < 1e-4);
  }
}

TEST_CASE("dropout masks") {
  Rng rng(6);
  const auto net = make_mlp(21, rng, 0.2);
  const auto masks = sample_dropout_masks(net, 500, rng);
  CHECK(masks.size() == 500 * 48);
  std::size_t zeros = 0;
  for (double m : masks) {
    CHECK((m == 0.0 || m == doctest::Approx(1.25)));
    zeros += m == 0.0;
  }
  const double rate = static_cast<double>(zeros) / static_cast<double>(masks.size());
  CHECK(rate > 0.18);
  CHECK(rate < 0.22);

  const auto none = make_mlp(21, rng, 0.0);
  for (double m : sample_dropout_masks(none, 10, rng)) CHECK(m == 1.0);
}

TEST_CASE("sgd step moves against the gradient") {
  Rng rng(7);
  auto net = make_mlp(21, rng);
  const auto b = testing::random_gradient_batch(net, rng, 32, false);
  MlpGradient g(net);
  const double before = mlp_loss(net, b.x, b.y, b.w, {}, &g);
  const auto copy = net;
  sgd_step(net, g, 0.01);
  CHECK(net.weights[0][0] == copy.weights[0][0] - 0.01 * g.weights[0][0]);
  CHECK(mlp_loss(net, b.x, b.y, b.w, {}, nullptr) < before);
  CHECK(all_finite(net));
  net.biases[1][0] = std::nan("");
  CHECK(!all_finite(net));
  g.zero();
  for (const auto& w : g.weights)
    for (double v : w) CHECK(v == 0.0);
}
