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

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rulkit/linalg.hpp"
#include "rulkit/rng.hpp"

namespace rulkit {

enum class DatasetProfile { fd001, fd004, synthetic };

inline std::string to_string(DatasetProfile p) {
  switch (p) {
    case DatasetProfile::fd001: return "fd001";
    case DatasetProfile::fd004: return "fd004";
    case DatasetProfile::synthetic: return "synthetic";
  }
  return "?";
}

inline DatasetProfile profile_from_string(const std::string& s) {
  if (s == "fd001") return DatasetProfile::fd001;
  if (s == "fd004") return DatasetProfile::fd004;
  if (s == "synthetic") return DatasetProfile::synthetic;
  throw std::invalid_argument("unknown dataset profile: " + s);
}

enum class InstanceStatus { failed, censored };

constexpr double kUnknown = std::numeric_limits<double>::quiet_NaN();

inline bool known(double v) { return !std::isnan(v); }

// One engine/unit. Rows are cycles 1..T. For failed instances failure_time
// is the last observed cycle; for censored instances it is unknown (the
// pre-censoring value is kept aside in hidden_failure_time for diagnostics
// and tests only, training never reads it). Test units carry the ground-truth
// RUL at their last observed cycle.
struct InstanceSeries {
  int unit_id = 0;
  Matrix sensors;      // T x n_sensors, raw readings
  Matrix op_settings;  // T x 3 (zero columns when the profile has none)
  Matrix features;     // T x p, filled by build_features / z_normalize
  InstanceStatus status = InstanceStatus::failed;
  double failure_time = kUnknown;
  double true_rul = kUnknown;
  double hidden_failure_time = kUnknown;

  int length() const { return sensors.rows; }
};

// Per-sensor statistics from the training split plus everything needed to
// featurize a raw series at prediction time.
struct NormStats {
  int continuous_dim = 0;  // raw sensor columns entering normalization
  int onehot_dim = 0;      // 6 for fd004-like profiles, else 0
  std::vector<double> mean;          // per raw sensor column
  std::vector<double> stddev;        // per raw sensor column (kept columns only meaningful)
  std::vector<std::uint8_t> kept;    // zero-variance columns are dropped
  std::vector<std::array<double, 3>> conditions;  // rounded op-setting triples, sorted

  int kept_count() const {
    int n = 0;
    for (auto k : kept) n += k ? 1 : 0;
    return n;
  }
  int feature_dim() const { return kept_count() + onehot_dim; }
  bool fitted() const { return !mean.empty(); }
};

// A truncation point in a unit's life. Materialization pulls the most recent
// <= max_len feature rows ending at t0.
struct WindowDescriptor {
  int unit_id = 0;
  int t0 = 0;            // 1-indexed cycle at which the window ends
  bool censored = false; // true: label is a lower bound, else exact RUL
  double label = 0.0;

  bool operator==(const WindowDescriptor&) const = default;
};

struct WindowSample {
  Matrix input;  // len x p
  bool censored = false;
  double label = 0.0;
  int unit_id = 0;
  int t0 = 0;
};

struct DatasetBundle {
  DatasetProfile profile = DatasetProfile::synthetic;
  std::vector<InstanceSeries> train, validation, test;
  NormStats norm;
  int feature_dim = 0;  // p; 0 until build_features has run
  std::vector<WindowDescriptor> train_windows, validation_windows, test_windows;
  double censor_rate = 0.0;  // p_c actually applied, in percent
};

// ---------------------------------------------------------------------------
// C-MAPSS parsing

namespace detail {

inline std::vector<InstanceSeries> parse_cmapss_rows(std::istream& in,
                                                     const std::string& name) {
  std::vector<InstanceSeries> units;
  std::vector<std::vector<double>> sensor_rows, op_rows;
  int current_unit = -1;
  int prev_cycle = 0;
  std::vector<int> seen_units;

  auto flush = [&]() {
    if (current_unit < 0) return;
    InstanceSeries inst;
    inst.unit_id = current_unit;
    const int t = static_cast<int>(sensor_rows.size());
    inst.sensors = Matrix(t, static_cast<int>(sensor_rows[0].size()));
    inst.op_settings = Matrix(t, 3);
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < inst.sensors.cols; ++c)
        inst.sensors(r, c) = sensor_rows[r][static_cast<std::size_t>(c)];
      for (int c = 0; c < 3; ++c) inst.op_settings(r, c) = op_rows[r][static_cast<std::size_t>(c)];
    }
    inst.status = InstanceStatus::failed;
    inst.failure_time = static_cast<double>(prev_cycle);
    units.push_back(std::move(inst));
    sensor_rows.clear();
    op_rows.clear();
  };

  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> fields;
    double v;
    while (ls >> v) fields.push_back(v);
    if (fields.empty()) continue;  // blank/whitespace-only line
    if (fields.size() < 26)
      throw std::invalid_argument(name + ":" + std::to_string(line_no) +
                                  ": expected >= 26 fields, got " +
                                  std::to_string(fields.size()));
    const int unit = static_cast<int>(fields[0]);
    const int cycle = static_cast<int>(fields[1]);
    if (unit != current_unit) {
      flush();
      for (int u : seen_units)
        if (u == unit)
          throw std::invalid_argument(name + ":" + std::to_string(line_no) +
                                      ": rows for unit " + std::to_string(unit) +
                                      " are not contiguous");
      seen_units.push_back(unit);
      current_unit = unit;
      prev_cycle = 0;
    }
    if (cycle != prev_cycle + 1)
      throw std::invalid_argument(name + ":" + std::to_string(line_no) +
                                  ": cycle index " + std::to_string(cycle) +
                                  " does not follow " + std::to_string(prev_cycle));
    prev_cycle = cycle;
    op_rows.push_back({fields[2], fields[3], fields[4]});
    sensor_rows.push_back(std::vector<double>(fields.begin() + 5, fields.begin() + 26));
  }
  flush();
  return units;
}

}  // namespace detail

// Reads train/test files (26+ whitespace-separated columns: unit, cycle,
// 3 op settings, 21 sensors) and the test RUL file (one value per line, in
// test-unit order). Train units are failed with F = last cycle; test units
// are operational with the ground-truth RUL attached.
inline DatasetBundle parse_cmapss(const std::string& train_path,
                                  const std::string& test_path,
                                  const std::string& rul_path) {
  DatasetBundle bundle;
  {
    std::ifstream f(train_path);
    if (!f) throw std::invalid_argument("cannot open " + train_path);
    bundle.train = detail::parse_cmapss_rows(f, train_path);
  }
  {
    std::ifstream f(test_path);
    if (!f) throw std::invalid_argument("cannot open " + test_path);
    bundle.test = detail::parse_cmapss_rows(f, test_path);
  }
  {
    std::ifstream f(rul_path);
    if (!f) throw std::invalid_argument("cannot open " + rul_path);
    std::vector<double> ruls;
    std::string line;
    long long line_no = 0;
    while (std::getline(f, line)) {
      ++line_no;
      std::istringstream ls(line);
      double v;
      if (ls >> v)
        ruls.push_back(v);
      else if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::invalid_argument(rul_path + ":" + std::to_string(line_no) +
                                    ": not a number");
    }
    if (ruls.size() != bundle.test.size())
      throw std::invalid_argument(rul_path + ": has " + std::to_string(ruls.size()) +
                                  " values for " + std::to_string(bundle.test.size()) +
                                  " test units");
    for (std::size_t i = 0; i < ruls.size(); ++i) {
      bundle.test[i].status = InstanceStatus::censored;
      bundle.test[i].failure_time = kUnknown;
      bundle.test[i].true_rul = ruls[i];
      bundle.test[i].hidden_failure_time =
          bundle.test[i].length() + ruls[i];
    }
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Split / censoring / windows

// Unit-level split; moves round(fraction * n) units from train to validation.
inline void split_validation(DatasetBundle& bundle, double fraction,
                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_validation: fraction must be in (0,1)");
  const int n = static_cast<int>(bundle.train.size());
  if (n < 2) throw std::invalid_argument("split_validation: need >= 2 units");
  int n_val = static_cast<int>(std::llround(fraction * n));
  if (n_val < 1) n_val = 1;
  if (n_val > n - 1) n_val = n - 1;

  RngStream rng(seed, "split");
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng.shuffle(idx);
  std::vector<std::uint8_t> to_val(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n_val; ++i) to_val[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;

  std::vector<InstanceSeries> train, val;
  for (int i = 0; i < n; ++i) {
    if (to_val[static_cast<std::size_t>(i)])
      val.push_back(std::move(bundle.train[static_cast<std::size_t>(i)]));
    else
      train.push_back(std::move(bundle.train[static_cast<std::size_t>(i)]));
  }
  bundle.train = std::move(train);
  bundle.validation = std::move(val);
}

namespace detail {

inline void truncate_instance(InstanceSeries& inst, int t) {
  auto cut = [&](Matrix& m) {
    if (m.rows == 0) return;
    m.data.resize(static_cast<std::size_t>(t) * m.cols);
    m.rows = t;
  };
  cut(inst.sensors);
  cut(inst.op_settings);
  cut(inst.features);
}

inline void censor_split(std::vector<InstanceSeries>& units, double p_c,
                         RngStream& rng) {
  const int n = static_cast<int>(units.size());
  const int n_c = static_cast<int>(std::floor(p_c * n / 100.0));
  if (n_c <= 0) return;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(n_c));
  std::sort(idx.begin(), idx.end());
  for (int i : idx) {
    InstanceSeries& inst = units[static_cast<std::size_t>(i)];
    const int f = static_cast<int>(inst.failure_time);
    if (f < 2) continue;  // nothing prior to failure to truncate at
    const int t = static_cast<int>(rng.uniform_int(1, f - 1));
    truncate_instance(inst, t);
    inst.status = InstanceStatus::censored;
    inst.hidden_failure_time = inst.failure_time;
    inst.failure_time = kUnknown;
  }
}

}  // namespace detail

// Re-labels floor(p_c% of n) units of the train and validation splits as
// censored, truncating each at a uniform-random cycle in [1, F-1].
inline void simulate_censoring(DatasetBundle& bundle, double p_c,
                               std::uint64_t seed) {
  if (!(p_c >= 0.0 && p_c < 100.0))
    throw std::invalid_argument("simulate_censoring: p_c must be in [0,100)");
  RngStream rng(seed, "censor");
  detail::censor_split(bundle.train, p_c, rng);
  detail::censor_split(bundle.validation, p_c, rng);
  bundle.censor_rate = p_c;
}

// Up to n distinct truncation points t0 in [1, T-1]; failed instances get the
// exact label F - t0, censored instances the lower bound T - t0.
inline std::vector<WindowDescriptor> make_windows(const InstanceSeries& inst,
                                                  int n_windows,
                                                  RngStream& rng) {
  if (inst.length() < 2)
    throw std::invalid_argument("make_windows: instance shorter than 2 cycles");
  const int t_len = inst.length();
  std::vector<WindowDescriptor> out;
  for (long long t0 : rng.sample_distinct(1, t_len - 1, n_windows)) {
    WindowDescriptor w;
    w.unit_id = inst.unit_id;
    w.t0 = static_cast<int>(t0);
    if (inst.status == InstanceStatus::failed) {
      w.censored = false;
      w.label = inst.failure_time - static_cast<double>(t0);
    } else {
      w.censored = true;
      w.label = static_cast<double>(t_len - t0);
    }
    out.push_back(w);
  }
  return out;
}

// Test units contribute a single window covering their full observed series.
inline WindowDescriptor make_test_window(const InstanceSeries& inst) {
  WindowDescriptor w;
  w.unit_id = inst.unit_id;
  w.t0 = inst.length();
  w.censored = false;
  if (!known(inst.true_rul))
    throw std::invalid_argument("make_test_window: unit " +
                                std::to_string(inst.unit_id) +
                                " has no ground-truth RUL");
  w.label = inst.true_rul;
  return w;
}

inline WindowSample materialize_window(const InstanceSeries& inst,
                                       const WindowDescriptor& w, int max_len) {
  if (inst.features.rows == 0)
    throw std::invalid_argument("materialize_window: features not built");
  if (w.t0 < 1 || w.t0 > inst.features.rows)
    throw std::invalid_argument("materialize_window: t0 out of range");
  const int first = w.t0 > max_len ? w.t0 - max_len : 0;  // 0-indexed row
  const int len = w.t0 - first;
  WindowSample s;
  s.input = Matrix(len, inst.features.cols);
  for (int r = 0; r < len; ++r)
    for (int c = 0; c < inst.features.cols; ++c)
      s.input(r, c) = inst.features(first + r, c);
  s.censored = w.censored;
  s.label = w.label;
  s.unit_id = w.unit_id;
  s.t0 = w.t0;
  return s;
}

// ---------------------------------------------------------------------------
// Features and normalization

namespace detail {

inline double round1(double x) { return std::round(x * 10.0) / 10.0; }

inline std::array<double, 3> rounded_triple(const Matrix& op, int row) {
  return {round1(op(row, 0)), round1(op(row, 1)), round1(op(row, 2))};
}

inline int condition_index(const NormStats& norm,
                           const std::array<double, 3>& triple) {
  for (std::size_t i = 0; i < norm.conditions.size(); ++i)
    if (norm.conditions[i] == triple) return static_cast<int>(i);
  throw std::invalid_argument(
      "op-setting triple (" + std::to_string(triple[0]) + ", " +
      std::to_string(triple[1]) + ", " + std::to_string(triple[2]) +
      ") does not match any known operating condition");
}

}  // namespace detail

// Discovers the operating-condition vocabulary (fd004-like profiles) and
// materializes pre-normalization features: raw sensors, plus a 6-dim one-hot
// of the rounded op-setting triple for fd004.
inline void build_features(DatasetBundle& bundle, DatasetProfile profile) {
  bundle.profile = profile;
  auto all_splits = {&bundle.train, &bundle.validation, &bundle.test};

  int sensor_dim = 0;
  for (auto* split : all_splits)
    for (const auto& inst : *split) sensor_dim = inst.sensors.cols;
  if (sensor_dim == 0) throw std::invalid_argument("build_features: empty bundle");
  bundle.norm.continuous_dim = sensor_dim;

  if (profile == DatasetProfile::fd004) {
    bundle.norm.onehot_dim = 6;
    std::vector<std::array<double, 3>> conds;
    for (auto* split : all_splits)
      for (const auto& inst : *split)
        for (int r = 0; r < inst.op_settings.rows; ++r) {
          const auto t = detail::rounded_triple(inst.op_settings, r);
          if (std::find(conds.begin(), conds.end(), t) == conds.end())
            conds.push_back(t);
        }
    if (conds.size() > 6)
      throw std::invalid_argument("build_features: found " +
                                  std::to_string(conds.size()) +
                                  " distinct operating conditions, expected <= 6");
    std::sort(conds.begin(), conds.end());
    bundle.norm.conditions = std::move(conds);
  } else {
    bundle.norm.onehot_dim = 0;
    bundle.norm.conditions.clear();
  }

  for (auto* split : all_splits)
    for (auto& inst : *split) {
      const int t_len = inst.length();
      inst.features = Matrix(t_len, sensor_dim + bundle.norm.onehot_dim);
      for (int r = 0; r < t_len; ++r) {
        for (int c = 0; c < sensor_dim; ++c) inst.features(r, c) = inst.sensors(r, c);
        if (bundle.norm.onehot_dim > 0) {
          const int ci = detail::condition_index(
              bundle.norm, detail::rounded_triple(inst.op_settings, r));
          inst.features(r, sensor_dim + ci) = 1.0;
        }
      }
    }
  bundle.feature_dim = sensor_dim + bundle.norm.onehot_dim;
}

// Featurize a raw series with already-fitted stats (prediction path).
inline Matrix featurize(const Matrix& sensors, const Matrix& op_settings,
                        const NormStats& norm) {
  if (!norm.fitted()) throw std::invalid_argument("featurize: stats not fitted");
  if (sensors.cols != norm.continuous_dim)
    throw std::invalid_argument("featurize: sensor dimension " +
                                std::to_string(sensors.cols) + " != " +
                                std::to_string(norm.continuous_dim));
  Matrix out(sensors.rows, norm.feature_dim());
  for (int r = 0; r < sensors.rows; ++r) {
    int oc = 0;
    for (int c = 0; c < sensors.cols; ++c) {
      if (!norm.kept[static_cast<std::size_t>(c)]) continue;
      out(r, oc++) = (sensors(r, c) - norm.mean[static_cast<std::size_t>(c)]) /
                     norm.stddev[static_cast<std::size_t>(c)];
    }
    if (norm.onehot_dim > 0) {
      const int ci = detail::condition_index(norm, detail::rounded_triple(op_settings, r));
      out(r, oc + ci) = 1.0;
    }
  }
  return out;
}

// Per-sensor z-normalization with statistics from the train split only.
// Zero-variance sensors (train max == min) are dropped and recorded.
inline void z_normalize(DatasetBundle& bundle) {
  if (bundle.train.empty())
    throw std::invalid_argument("z_normalize: empty train split");
  if (bundle.feature_dim == 0)
    throw std::invalid_argument("z_normalize: run build_features first");

  const int dim = bundle.norm.continuous_dim;
  std::vector<double> lo(static_cast<std::size_t>(dim),
                         std::numeric_limits<double>::infinity());
  std::vector<double> hi(static_cast<std::size_t>(dim),
                         -std::numeric_limits<double>::infinity());
  std::vector<double> sum(static_cast<std::size_t>(dim), 0.0);
  long long rows = 0;
  for (const auto& inst : bundle.train) {
    for (int r = 0; r < inst.sensors.rows; ++r)
      for (int c = 0; c < dim; ++c) {
        const double v = inst.sensors(r, c);
        sum[static_cast<std::size_t>(c)] += v;
        if (v < lo[static_cast<std::size_t>(c)]) lo[static_cast<std::size_t>(c)] = v;
        if (v > hi[static_cast<std::size_t>(c)]) hi[static_cast<std::size_t>(c)] = v;
      }
    rows += inst.sensors.rows;
  }
  bundle.norm.mean.assign(static_cast<std::size_t>(dim), 0.0);
  bundle.norm.stddev.assign(static_cast<std::size_t>(dim), 1.0);
  bundle.norm.kept.assign(static_cast<std::size_t>(dim), 1);
  for (int c = 0; c < dim; ++c)
    bundle.norm.mean[static_cast<std::size_t>(c)] = sum[static_cast<std::size_t>(c)] / static_cast<double>(rows);

  std::vector<double> sq(static_cast<std::size_t>(dim), 0.0);
  for (const auto& inst : bundle.train)
    for (int r = 0; r < inst.sensors.rows; ++r)
      for (int c = 0; c < dim; ++c) {
        const double d = inst.sensors(r, c) - bundle.norm.mean[static_cast<std::size_t>(c)];
        sq[static_cast<std::size_t>(c)] += d * d;
      }
  for (int c = 0; c < dim; ++c) {
    if (hi[static_cast<std::size_t>(c)] == lo[static_cast<std::size_t>(c)]) {
      bundle.norm.kept[static_cast<std::size_t>(c)] = 0;
    } else {
      bundle.norm.stddev[static_cast<std::size_t>(c)] =
          std::sqrt(sq[static_cast<std::size_t>(c)] / static_cast<double>(rows));
    }
  }
  if (bundle.norm.feature_dim() == 0)
    throw std::invalid_argument("z_normalize: all sensors are constant");

  for (auto* split : {&bundle.train, &bundle.validation, &bundle.test})
    for (auto& inst : *split)
      inst.features = featurize(inst.sensors, inst.op_settings, bundle.norm);
  bundle.feature_dim = bundle.norm.feature_dim();
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace detail {

// Eight sensors driven by latent degradation: four exponential in the
// remaining life, three linear in the life fraction, one flat distractor.
// Units differ in per-sensor offsets and amplitudes, so a handful of units
// is a biased sample of the fleet and small-sample training overfits.
inline InstanceSeries make_synthetic_unit(int unit_id, double noise_level,
                                          RngStream& rng) {
  static constexpr double kLambda[4] = {15.0, 30.0, 60.0, 100.0};
  static constexpr double kExpAmp[4] = {1.0, -0.8, 0.6, 1.2};
  static constexpr double kExpBase[4] = {0.2, -0.1, 0.05, 0.0};
  static constexpr double kLinAmp[3] = {0.9, -0.7, 0.5};
  static constexpr double kLinBase[3] = {0.1, 0.3, -0.2};

  const int f = static_cast<int>(rng.uniform_int(120, 350));
  std::array<double, 8> offset{};
  std::array<double, 8> gain{};
  for (int j = 0; j < 8; ++j) {
    offset[static_cast<std::size_t>(j)] = rng.uniform(-0.3, 0.3);
    gain[static_cast<std::size_t>(j)] = rng.uniform(0.7, 1.3);
  }

  InstanceSeries inst;
  inst.unit_id = unit_id;
  inst.sensors = Matrix(f, 8);
  inst.op_settings = Matrix(f, 3);
  inst.status = InstanceStatus::failed;
  inst.failure_time = static_cast<double>(f);
  for (int t = 1; t <= f; ++t) {
    const int r = f - t;  // remaining life at cycle t
    const double frac = static_cast<double>(t) / f;
    for (int j = 0; j < 4; ++j)
      inst.sensors(t - 1, j) = kExpBase[j] + offset[static_cast<std::size_t>(j)] +
                               gain[static_cast<std::size_t>(j)] * kExpAmp[j] *
                                   std::exp(-r / kLambda[j]) +
                               noise_level * rng.normal();
    for (int j = 0; j < 3; ++j)
      inst.sensors(t - 1, 4 + j) =
          kLinBase[j] + offset[static_cast<std::size_t>(4 + j)] +
          gain[static_cast<std::size_t>(4 + j)] * kLinAmp[j] * frac +
          noise_level * rng.normal();
    inst.sensors(t - 1, 7) = 0.5 + offset[7] + noise_level * rng.normal();
  }
  return inst;
}

}  // namespace detail

// Desk-scale dataset with known ground truth: n_units for train+validation
// (split 80/20, then censored at rate p_c) and n_test_units operational test
// units pruned at a random point with the true RUL recorded.
inline DatasetBundle generate_synthetic(int n_units, double noise_level,
                                        double p_c, std::uint64_t seed,
                                        int n_test_units = -1) {
  if (n_units < 4) throw std::invalid_argument("generate_synthetic: need >= 4 units");
  if (n_test_units < 0) n_test_units = n_units;
  DatasetBundle bundle;
  bundle.profile = DatasetProfile::synthetic;
  for (int u = 1; u <= n_units; ++u) {
    RngStream rng(seed, "synth:" + std::to_string(u));
    bundle.train.push_back(detail::make_synthetic_unit(u, noise_level, rng));
  }
  split_validation(bundle, 0.2, seed);
  simulate_censoring(bundle, p_c, seed);
  for (int u = n_units + 1; u <= n_units + n_test_units; ++u) {
    RngStream rng(seed, "synth:" + std::to_string(u));
    InstanceSeries inst = detail::make_synthetic_unit(u, noise_level, rng);
    const int f = static_cast<int>(inst.failure_time);
    const int t = static_cast<int>(rng.uniform_int(1, f - 1));
    detail::truncate_instance(inst, t);
    inst.status = InstanceStatus::censored;
    inst.hidden_failure_time = inst.failure_time;
    inst.failure_time = kUnknown;
    inst.true_rul = static_cast<double>(f - t);
    bundle.test.push_back(std::move(inst));
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Window generation over a whole bundle

inline void generate_windows(DatasetBundle& bundle, int windows_per_instance,
                             std::uint64_t seed) {
  bundle.train_windows.clear();
  bundle.validation_windows.clear();
  bundle.test_windows.clear();
  auto emit = [&](const std::vector<InstanceSeries>& split,
                  std::vector<WindowDescriptor>& out) {
    for (const auto& inst : split) {
      if (inst.length() < 2) continue;  // no truncation point exists
      RngStream rng(seed, "windows:" + std::to_string(inst.unit_id));
      for (auto& w : make_windows(inst, windows_per_instance, rng)) out.push_back(w);
    }
  };
  emit(bundle.train, bundle.train_windows);
  emit(bundle.validation, bundle.validation_windows);
  for (const auto& inst : bundle.test)
    bundle.test_windows.push_back(make_test_window(inst));
}

inline const InstanceSeries* find_instance(const std::vector<InstanceSeries>& split,
                                           int unit_id) {
  for (const auto& inst : split)
    if (inst.unit_id == unit_id) return &inst;
  return nullptr;
}

// Materialize every window of a split.
inline std::vector<WindowSample> materialize_split(
    const std::vector<InstanceSeries>& split,
    const std::vector<WindowDescriptor>& windows, int max_len) {
  std::vector<WindowSample> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    const InstanceSeries* inst = find_instance(split, w.unit_id);
    if (!inst)
      throw std::invalid_argument("window references unknown unit " +
                                  std::to_string(w.unit_id));
    out.push_back(materialize_window(*inst, w, max_len));
  }
  return out;
}

}  // namespace rulkit
