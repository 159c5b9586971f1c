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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rulkit/data.hpp"
#include "rulkit/eval.hpp"
#include "rulkit/ordinal.hpp"
#include "rulkit/train.hpp"

namespace rulkit {

// Flat line-based key=value configuration; '#' starts a comment, blank lines
// are ignored, unknown keys are rejected. Every command writes the resolved
// configuration next to its outputs so a run is reproducible from that file
// alone.
struct RunConfig {
  std::string profile = "synthetic";
  std::string train_path, test_path, rul_path;
  int synth_units = 100;
  int synth_test_units = -1;  // -1: same as synth_units
  double synth_noise = 0.05;
  double p_c = 0.0;
  double val_fraction = 0.2;
  std::uint64_t seed = 42;
  int windows_per_instance = 20;
  int max_window_len = 360;
  int interval_count = 10;
  double interval_len = 13.0;
  int hidden_size = 50;
  int layers = 2;
  double learning_rate = 0.001;
  double dropout = 0.2;
  int batch_size = 32;
  int max_iterations = 2000;
  int patience = 10;
  int eval_every = 0;
  double grad_clip = 5.0;
  std::vector<int> grid_hidden{50, 60, 70, 80, 90, 100};
  std::vector<int> grid_layers{2, 3};
  std::vector<double> grid_lr{0.001, 0.005};
  int ensemble_pool = 10;
  int ensemble_members = 6;
  double tau_e = 10.0;
  double tau_u = 0.2;
  double tau_r = 20.0;
  std::string tau_u_sweep = "0.1:1.5:0.1";
  std::string tau_r_sweep = "10:130:10";
  std::string tau_e_sweep = "10:130:10";
  std::string mode = "orc";
  std::string cache, model, predictions, input_series;
  std::string out_dir = "out";
  int diagnostics_count = 5;

  IntervalScheme scheme() const {
    return IntervalScheme::make(interval_count, interval_len);
  }

  TrainConfig train_config() const {
    TrainConfig c;
    c.hidden_size = hidden_size;
    c.num_layers = layers;
    c.learning_rate = learning_rate;
    c.dropout_rate = dropout;
    c.batch_size = batch_size;
    c.max_iterations = max_iterations;
    c.patience = patience;
    c.eval_every = eval_every;
    c.grad_clip_norm = grad_clip;
    c.seed = seed;
    return c;
  }

  GridSpec grid_spec() const {
    GridSpec g;
    g.hidden_sizes = grid_hidden;
    g.layer_counts = grid_layers;
    g.learning_rates = grid_lr;
    return g;
  }

  EvalThresholds thresholds() const;

  static RunConfig parse_file(const std::filesystem::path& path);
  static RunConfig parse_text(const std::string& text, const std::string& ctx);
  std::string resolved_text() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_double_list(const std::string& s,
                                             const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (...) {
      throw std::invalid_argument("config key " + key + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
  std::vector<int> out;
  for (double v : parse_double_list(s, key)) out.push_back(static_cast<int>(v));
  return out;
}

// "lo:hi:step" inclusive sweep
inline std::vector<double> parse_sweep(const std::string& s, const std::string& key) {
  std::stringstream ss(s);
  std::string part;
  std::vector<double> parts;
  while (std::getline(ss, part, ':')) parts.push_back(std::stod(trim(part)));
  if (parts.size() != 3 || parts[2] <= 0.0)
    throw std::invalid_argument("config key " + key + ": expected lo:hi:step");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = parts[0] + i * parts[2];
    if (v > parts[1] + 1e-9) break;
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("config key " + key + ": empty sweep");
  return out;
}

}  // namespace detail

inline EvalThresholds RunConfig::thresholds() const {
  EvalThresholds t;
  t.tau_e = tau_e;
  t.tau_u = tau_u;
  t.tau_r = tau_r;
  t.tau_u_sweep = detail::parse_sweep(tau_u_sweep, "tau_u_sweep");
  t.tau_r_sweep = detail::parse_sweep(tau_r_sweep, "tau_r_sweep");
  t.tau_e_sweep = detail::parse_sweep(tau_e_sweep, "tau_e_sweep");
  return t;
}

inline RunConfig RunConfig::parse_text(const std::string& text,
                                       const std::string& ctx) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  long long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(ctx + ":" + std::to_string(line_no) +
                                  ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(ctx + ":" + std::to_string(line_no) +
                                  ": empty key");
    if (kv.count(key))
      throw std::invalid_argument(ctx + ":" + std::to_string(line_no) +
                                  ": duplicate key " + key);
    kv[key] = value;
  }

  RunConfig c;
  auto take = [&](const char* key) -> std::string* {
    static std::string tmp;
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    tmp = it->second;
    kv.erase(it);
    return &tmp;
  };
  auto get_str = [&](const char* key, std::string& dst) {
    if (auto* v = take(key)) dst = *v;
  };
  auto get_int = [&](const char* key, int& dst) {
    if (auto* v = take(key)) {
      try {
        dst = std::stoi(*v);
      } catch (...) {
        throw std::invalid_argument(std::string("config key ") + key +
                                    ": bad integer '" + *v + "'");
      }
    }
  };
  auto get_double = [&](const char* key, double& dst) {
    if (auto* v = take(key)) {
      try {
        dst = std::stod(*v);
      } catch (...) {
        throw std::invalid_argument(std::string("config key ") + key +
                                    ": bad number '" + *v + "'");
      }
    }
  };
  auto get_u64 = [&](const char* key, std::uint64_t& dst) {
    if (auto* v = take(key)) {
      try {
        dst = std::stoull(*v);
      } catch (...) {
        throw std::invalid_argument(std::string("config key ") + key +
                                    ": bad seed '" + *v + "'");
      }
    }
  };

  get_str("profile", c.profile);
  get_str("train_path", c.train_path);
  get_str("test_path", c.test_path);
  get_str("rul_path", c.rul_path);
  get_int("synth_units", c.synth_units);
  get_int("synth_test_units", c.synth_test_units);
  get_double("synth_noise", c.synth_noise);
  get_double("p_c", c.p_c);
  get_double("val_fraction", c.val_fraction);
  get_u64("seed", c.seed);
  get_int("windows_per_instance", c.windows_per_instance);
  get_int("max_window_len", c.max_window_len);
  get_int("interval_count", c.interval_count);
  get_double("interval_len", c.interval_len);
  get_int("hidden_size", c.hidden_size);
  get_int("layers", c.layers);
  get_double("learning_rate", c.learning_rate);
  get_double("dropout", c.dropout);
  get_int("batch_size", c.batch_size);
  get_int("max_iterations", c.max_iterations);
  get_int("patience", c.patience);
  get_int("eval_every", c.eval_every);
  get_double("grad_clip", c.grad_clip);
  if (auto* v = take("grid_hidden")) c.grid_hidden = detail::parse_int_list(*v, "grid_hidden");
  if (auto* v = take("grid_layers")) c.grid_layers = detail::parse_int_list(*v, "grid_layers");
  if (auto* v = take("grid_lr")) c.grid_lr = detail::parse_double_list(*v, "grid_lr");
  get_int("ensemble_pool", c.ensemble_pool);
  get_int("ensemble_members", c.ensemble_members);
  get_double("tau_e", c.tau_e);
  get_double("tau_u", c.tau_u);
  get_double("tau_r", c.tau_r);
  get_str("tau_u_sweep", c.tau_u_sweep);
  get_str("tau_r_sweep", c.tau_r_sweep);
  get_str("tau_e_sweep", c.tau_e_sweep);
  get_str("mode", c.mode);
  get_str("cache", c.cache);
  get_str("model", c.model);
  get_str("predictions", c.predictions);
  get_str("input_series", c.input_series);
  get_str("out_dir", c.out_dir);
  get_int("diagnostics_count", c.diagnostics_count);

  if (!kv.empty()) {
    std::string keys;
    for (const auto& [k, v] : kv) keys += (keys.empty() ? "" : ", ") + k;
    throw std::invalid_argument(ctx + ": unknown config key(s): " + keys);
  }

  if (c.profile != "synthetic" && c.profile != "fd001" && c.profile != "fd004")
    throw std::invalid_argument("config: unknown profile '" + c.profile + "'");
  if (c.mode != "mr" && c.mode != "or" && c.mode != "orc")
    throw std::invalid_argument("config: unknown mode '" + c.mode + "'");
  return c;
}

inline RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path.string());
}

inline std::string RunConfig::resolved_text() const {
  auto join_int = [](const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
  };
  auto join_double = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", x);
      s += (s.empty() ? "" : ",") + std::string(buf);
    }
    return s;
  };
  char num[32];
  std::ostringstream out;
  auto put = [&](const std::string& k, const std::string& v) {
    out << k << " = " << v << "\n";
  };
  auto put_d = [&](const std::string& k, double v) {
    std::snprintf(num, sizeof num, "%g", v);
    put(k, num);
  };
  put("batch_size", std::to_string(batch_size));
  put("cache", cache);
  put("diagnostics_count", std::to_string(diagnostics_count));
  put_d("dropout", dropout);
  put("ensemble_members", std::to_string(ensemble_members));
  put("ensemble_pool", std::to_string(ensemble_pool));
  put("eval_every", std::to_string(eval_every));
  put_d("grad_clip", grad_clip);
  put("grid_hidden", join_int(grid_hidden));
  put("grid_layers", join_int(grid_layers));
  put("grid_lr", join_double(grid_lr));
  put("hidden_size", std::to_string(hidden_size));
  put("input_series", input_series);
  put("interval_count", std::to_string(interval_count));
  put_d("interval_len", interval_len);
  put("layers", std::to_string(layers));
  put_d("learning_rate", learning_rate);
  put("max_iterations", std::to_string(max_iterations));
  put("max_window_len", std::to_string(max_window_len));
  put("mode", mode);
  put("model", model);
  put("out_dir", out_dir);
  put_d("p_c", p_c);
  put("patience", std::to_string(patience));
  put("predictions", predictions);
  put("profile", profile);
  put("rul_path", rul_path);
  put("seed", std::to_string(seed));
  put_d("synth_noise", synth_noise);
  put("synth_test_units", std::to_string(synth_test_units));
  put("synth_units", std::to_string(synth_units));
  put_d("tau_e", tau_e);
  put("tau_e_sweep", tau_e_sweep);
  put_d("tau_r", tau_r);
  put("tau_r_sweep", tau_r_sweep);
  put_d("tau_u", tau_u);
  put("tau_u_sweep", tau_u_sweep);
  put("test_path", test_path);
  put("train_path", train_path);
  put_d("val_fraction", val_fraction);
  put("windows_per_instance", std::to_string(windows_per_instance));
  return out.str();
}

}  // namespace rulkit
