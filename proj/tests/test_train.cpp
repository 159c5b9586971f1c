//------------------------------------------------------------------------------
//
//   Copyright 2026 The rulkit Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rulkit/data.hpp"
#include "rulkit/train.hpp"

using namespace rulkit;

namespace {

const IntervalScheme kScheme = IntervalScheme::make(10, 13.0);

std::vector<WindowSample> synthetic_windows(int n_units, double p_c,
                                            std::uint64_t seed,
                                            bool validation = false,
                                            int per_instance = 4) {
  DatasetBundle b = generate_synthetic(n_units, 0.05, p_c, seed, 0);
  build_features(b, DatasetProfile::synthetic);
  z_normalize(b);
  generate_windows(b, per_instance, seed);
  auto raw = validation
                 ? materialize_split(b.validation, b.validation_windows, 60)
                 : materialize_split(b.train, b.train_windows, 60);
  return usable_windows(raw, HeadKind::ordinal, kScheme, true);
}

bool same_params(const LstmStackParams& a, const LstmStackParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    if (a.layers[l].weight != b.layers[l].weight ||
        a.layers[l].bias != b.layers[l].bias)
      return false;
  return true;
}

}  // namespace

TEST_CASE("adam leaves parameters alone on zero gradients") {
  LstmStackParams params = LstmStackParams::zeros(2, 3, 1);
  for (double& v : params.layers[0].weight.data) v = 0.5;
  HeadParams head = HeadParams::zeros(HeadKind::ordinal, 3, 4);
  const LstmStackParams before = params;
  GradientBundle grads = GradientBundle::zeros_like(params, head);
  AdamState state;
  optimizer_step(params, head, grads, state, 0.01);
  CHECK(same_params(params, before));
}

TEST_CASE("first adam step moves each weight by about lr in the gradient direction") {
  LstmStackParams params = LstmStackParams::zeros(2, 3, 1);
  HeadParams head = HeadParams::zeros(HeadKind::ordinal, 3, 4);
  GradientBundle grads = GradientBundle::zeros_like(params, head);
  RngStream rng(4);
  for (double& v : grads.lstm.layers[0].weight.data)
    v = rng.uniform(0.2, 2.0) * (rng.next_double() < 0.5 ? -1.0 : 1.0);
  AdamState state;
  const double lr = 0.01;
  optimizer_step(params, head, grads, state, lr);
  for (std::size_t i = 0; i < params.layers[0].weight.data.size(); ++i) {
    const double g = grads.lstm.layers[0].weight.data[i];
    const double update = params.layers[0].weight.data[i];
    // bias-corrected first step: -lr * g / (|g| + eps) = -lr * sign(g)
    CHECK_THAT(update, Catch::Matchers::WithinAbs(-lr * (g > 0 ? 1.0 : -1.0),
                                                  1e-5));
  }
}

TEST_CASE("adam is deterministic and rejects non-finite gradients") {
  LstmStackParams pa = LstmStackParams::zeros(2, 2, 1);
  LstmStackParams pb = LstmStackParams::zeros(2, 2, 1);
  HeadParams ha = HeadParams::zeros(HeadKind::metric, 2, 0);
  HeadParams hb = ha;
  GradientBundle g = GradientBundle::zeros_like(pa, ha);
  for (double& v : g.lstm.layers[0].weight.data) v = 0.3;
  AdamState sa, sb;
  optimizer_step(pa, ha, g, sa, 0.005);
  optimizer_step(pb, hb, g, sb, 0.005);
  CHECK(same_params(pa, pb));

  g.head.bias[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(optimizer_step(pa, ha, g, sa, 0.005), std::invalid_argument);
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  const auto windows = synthetic_windows(8, 0.0, 11);
  TrainConfig cfg;
  cfg.hidden_size = 4;
  cfg.num_layers = 1;
  cfg.learning_rate = 0.0;
  cfg.dropout_rate = 0.0;
  cfg.batch_size = 4;
  cfg.max_iterations = 12;
  cfg.seed = 5;
  const TrainedModel m = train(cfg, HeadKind::ordinal, kScheme, windows, {});

  RngStream init(cfg.seed, "init:0");
  const LstmStackParams expected =
      LstmStackParams::init_random(windows[0].input.cols, 4, 1, init);
  CHECK(same_params(m.params, expected));

  // training loss history is flat
  REQUIRE(m.history.size() >= 3);
  for (std::size_t i = 2; i < m.history.size(); ++i)
    CHECK(m.history[i].train_loss == m.history[1].train_loss);
}

TEST_CASE("training is reproducible from the seed") {
  const auto train_w = synthetic_windows(8, 50.0, 21);
  const auto val_w = synthetic_windows(8, 50.0, 21, true);
  TrainConfig cfg;
  cfg.hidden_size = 5;
  cfg.num_layers = 1;
  cfg.learning_rate = 0.005;
  cfg.batch_size = 8;
  cfg.max_iterations = 30;
  cfg.seed = 77;
  const TrainedModel a = train(cfg, HeadKind::ordinal, kScheme, train_w, val_w);
  const TrainedModel b = train(cfg, HeadKind::ordinal, kScheme, train_w, val_w);
  CHECK(same_params(a.params, b.params));
  CHECK(a.best_val_loss == b.best_val_loss);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    if (i > 0) CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_loss == b.history[i].val_loss);
  }
}

TEST_CASE("loss drops during training on a small synthetic set") {
  auto windows = synthetic_windows(14, 0.0, 31);
  REQUIRE(windows.size() >= 40);
  windows.resize(40);
  TrainConfig cfg;
  cfg.hidden_size = 8;
  cfg.num_layers = 2;
  cfg.learning_rate = 0.005;
  cfg.dropout_rate = 0.0;
  cfg.batch_size = 16;
  cfg.max_iterations = 200;
  cfg.seed = 13;
  const TrainedModel m = train(cfg, HeadKind::ordinal, kScheme, windows, {});
  REQUIRE(m.history.size() >= 2);
  CHECK(m.history.back().train_loss < m.history[1].train_loss);
}

TEST_CASE("overfit capability: 10 windows to a fifth of the initial loss") {
  auto windows = synthetic_windows(8, 0.0, 41);
  windows.resize(10);
  TrainConfig cfg;
  cfg.hidden_size = 8;
  cfg.num_layers = 1;
  cfg.learning_rate = 0.01;
  cfg.dropout_rate = 0.0;
  cfg.batch_size = 10;
  cfg.max_iterations = 500;
  cfg.eval_every = 1;
  cfg.seed = 3;
  const TrainedModel m = train(cfg, HeadKind::ordinal, kScheme, windows, {});
  const double initial = m.history[1].train_loss;
  const double final_loss = m.history.back().train_loss;
  CHECK(final_loss <= 0.2 * initial);
}

TEST_CASE("early stopping returns the best-validation snapshot") {
  const auto train_w = synthetic_windows(10, 50.0, 51);
  const auto val_w = synthetic_windows(10, 50.0, 51, true);
  TrainConfig cfg;
  cfg.hidden_size = 4;
  cfg.num_layers = 1;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 8;
  cfg.max_iterations = 60;
  cfg.eval_every = 5;
  cfg.patience = 4;
  cfg.seed = 17;
  const TrainedModel m = train(cfg, HeadKind::ordinal, kScheme, train_w, val_w);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : m.history) best = std::min(best, h.val_loss);
  CHECK(m.best_val_loss == best);

  // the stored parameters really achieve that validation loss
  const double recomputed = validation_loss(m.params, m.head, kScheme, val_w);
  CHECK_THAT(recomputed, Catch::Matchers::WithinAbs(m.best_val_loss, 1e-12));
}

TEST_CASE("metric head refuses censored windows") {
  auto windows = synthetic_windows(8, 50.0, 61);
  bool has_censored = false;
  for (const auto& w : windows) has_censored |= w.censored;
  REQUIRE(has_censored);
  TrainConfig cfg;
  cfg.hidden_size = 3;
  cfg.num_layers = 1;
  cfg.max_iterations = 2;
  cfg.batch_size = 4;
  CHECK_THROWS_AS(train(cfg, HeadKind::metric, kScheme, windows, {}),
                  std::invalid_argument);

  // after filtering, metric training works
  const auto failed_only =
      usable_windows(windows, HeadKind::metric, kScheme, false);
  REQUIRE(!failed_only.empty());
  CHECK_NOTHROW(train(cfg, HeadKind::metric, kScheme, failed_only, {}));
}

TEST_CASE("grid search over the paper-sized grid enumerates 24 candidates") {
  auto windows = synthetic_windows(6, 0.0, 71);
  windows.resize(12);
  GridSpec grid;  // defaults: 6 x 2 x 2
  TrainConfig base;
  base.batch_size = 6;
  base.max_iterations = 1;
  base.seed = 1;
  // shrink the models so 24 trainings stay cheap
  grid.hidden_sizes = {2, 3, 4, 5, 6, 7};
  const GridOutcome out = grid_search(grid, HeadKind::ordinal, kScheme, windows,
                                      windows, base);
  CHECK(out.results.size() == 24);

  double best = std::numeric_limits<double>::infinity();
  TrainConfig best_cfg;
  for (const auto& r : out.results)
    if (!r.diverged && r.val_loss < best) {
      best = r.val_loss;
      best_cfg = r.config;
    }
  CHECK(out.best.hidden_size == best_cfg.hidden_size);
  CHECK(out.best.num_layers == best_cfg.num_layers);
  CHECK(out.best.learning_rate == best_cfg.learning_rate);
}

TEST_CASE("single-point grid returns that point") {
  auto windows = synthetic_windows(6, 0.0, 81);
  windows.resize(8);
  GridSpec grid;
  grid.hidden_sizes = {3};
  grid.layer_counts = {1};
  grid.learning_rates = {0.005};
  TrainConfig base;
  base.batch_size = 4;
  base.max_iterations = 2;
  const GridOutcome out =
      grid_search(grid, HeadKind::ordinal, kScheme, windows, windows, base);
  CHECK(out.results.size() == 1);
  CHECK(out.best.hidden_size == 3);
  CHECK(out.best.num_layers == 1);
  CHECK(out.best.learning_rate == 0.005);
}

TEST_CASE("empty grid is rejected") {
  GridSpec grid;
  grid.hidden_sizes.clear();
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
}
