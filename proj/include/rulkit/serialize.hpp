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

// File formats (byte layouts documented in docs/FORMATS.md):
//   dataset cache  "RKDS" - JSON header + feature matrices as LE doubles
//   checkpoint     "RKCP" - JSON header + parameter arrays as LE doubles
//   ensemble       plain JSON with member checkpoint references
//   predictions    CSV, one row per evaluated window
//   manifest       JSON list of (name, bytes, fnv1a64)

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulkit/data.hpp"
#include "rulkit/ensemble.hpp"
#include "rulkit/eval.hpp"
#include "rulkit/train.hpp"

namespace rulkit {

using nlohmann::json;

namespace io {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t read_u32(std::istream& in, const std::string& ctx) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::invalid_argument(ctx + ": truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in, const std::string& ctx) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw std::invalid_argument(ctx + ": truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in, const std::string& ctx) {
  return std::bit_cast<double>(read_u64(in, ctx));
}

inline void write_magic(std::ostream& out, const char tag[4]) {
  out.write(tag, 4);
}

inline void expect_magic(std::istream& in, const char tag[4],
                         const std::string& ctx) {
  char b[4];
  if (!in.read(b, 4) || b[0] != tag[0] || b[1] != tag[1] || b[2] != tag[2] ||
      b[3] != tag[3])
    throw std::invalid_argument(ctx + ": not a " + std::string(tag, 4) + " file");
}

// JSON carries no NaN; unknown values travel as null.
inline json num_or_null(double v) {
  if (std::isfinite(v)) return json(v);
  return json(nullptr);
}

inline double num_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

// 17 significant digits round-trip any finite double through text.
inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

}  // namespace io

// ---------------------------------------------------------------------------
// NormStats <-> JSON

namespace detail {

inline json norm_to_json(const NormStats& n) {
  json j;
  j["continuous_dim"] = n.continuous_dim;
  j["onehot_dim"] = n.onehot_dim;
  j["mean"] = n.mean;
  j["stddev"] = n.stddev;
  j["kept"] = n.kept;
  json conds = json::array();
  for (const auto& c : n.conditions) conds.push_back({c[0], c[1], c[2]});
  j["conditions"] = conds;
  return j;
}

inline NormStats norm_from_json(const json& j) {
  NormStats n;
  n.continuous_dim = j.at("continuous_dim").get<int>();
  n.onehot_dim = j.at("onehot_dim").get<int>();
  n.mean = j.at("mean").get<std::vector<double>>();
  n.stddev = j.at("stddev").get<std::vector<double>>();
  n.kept = j.at("kept").get<std::vector<std::uint8_t>>();
  for (const auto& c : j.at("conditions"))
    n.conditions.push_back({c.at(0).get<double>(), c.at(1).get<double>(),
                            c.at(2).get<double>()});
  return n;
}

inline json windows_to_json(const std::vector<WindowDescriptor>& ws) {
  json arr = json::array();
  for (const auto& w : ws)
    arr.push_back({w.unit_id, w.t0, w.censored ? 1 : 0, w.label});
  return arr;
}

inline std::vector<WindowDescriptor> windows_from_json(const json& arr) {
  std::vector<WindowDescriptor> out;
  for (const auto& j : arr) {
    WindowDescriptor w;
    w.unit_id = j.at(0).get<int>();
    w.t0 = j.at(1).get<int>();
    w.censored = j.at(2).get<int>() != 0;
    w.label = j.at(3).get<double>();
    out.push_back(w);
  }
  return out;
}

inline json instance_meta_to_json(const InstanceSeries& inst) {
  json j;
  j["unit"] = inst.unit_id;
  j["status"] = inst.status == InstanceStatus::failed ? "failed" : "censored";
  j["length"] = inst.length();
  j["failure_time"] = io::num_or_null(inst.failure_time);
  j["true_rul"] = io::num_or_null(inst.true_rul);
  j["hidden_failure_time"] = io::num_or_null(inst.hidden_failure_time);
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset cache

struct CacheMeta {
  std::uint64_t seed = 0;
  int windows_per_instance = 20;
  int max_window_len = 360;
};

inline void write_dataset_cache(const DatasetBundle& bundle,
                                const CacheMeta& meta,
                                const std::filesystem::path& path) {
  json header;
  header["format"] = "rulkit-dataset-cache";
  header["version"] = 1;
  header["profile"] = to_string(bundle.profile);
  header["p"] = bundle.feature_dim;
  header["censor_rate"] = bundle.censor_rate;
  header["seed"] = meta.seed;
  header["windows_per_instance"] = meta.windows_per_instance;
  header["max_window_len"] = meta.max_window_len;
  header["norm"] = detail::norm_to_json(bundle.norm);

  json splits;
  for (const auto& [name, split] :
       {std::pair{"train", &bundle.train},
        std::pair{"validation", &bundle.validation},
        std::pair{"test", &bundle.test}}) {
    json arr = json::array();
    for (const auto& inst : *split)
      arr.push_back(detail::instance_meta_to_json(inst));
    splits[name] = arr;
  }
  header["splits"] = splits;
  header["windows"] = {{"train", detail::windows_to_json(bundle.train_windows)},
                       {"validation", detail::windows_to_json(bundle.validation_windows)},
                       {"test", detail::windows_to_json(bundle.test_windows)}};

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  io::write_magic(out, "RKDS");
  io::write_u32(out, 1);
  io::write_u64(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto* split : {&bundle.train, &bundle.validation, &bundle.test})
    for (const auto& inst : *split)
      for (double v : inst.features.data) io::write_f64(out, v);
  if (!out) throw std::invalid_argument("write failed: " + path.string());
}

// The cache stores normalized feature matrices only; raw sensors are not
// round-tripped (prepare reproduces them from the source files).
inline DatasetBundle read_dataset_cache(const std::filesystem::path& path,
                                        CacheMeta* meta_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  const std::string ctx = path.string();
  io::expect_magic(in, "RKDS", ctx);
  const std::uint32_t version = io::read_u32(in, ctx);
  if (version != 1)
    throw std::invalid_argument(ctx + ": unsupported cache version " +
                                std::to_string(version));
  const std::uint64_t head_len = io::read_u64(in, ctx);
  std::string head(head_len, '\0');
  if (!in.read(head.data(), static_cast<std::streamsize>(head_len)))
    throw std::invalid_argument(ctx + ": truncated header");
  const json header = json::parse(head);

  DatasetBundle b;
  b.profile = profile_from_string(header.at("profile").get<std::string>());
  b.feature_dim = header.at("p").get<int>();
  b.censor_rate = header.at("censor_rate").get<double>();
  b.norm = detail::norm_from_json(header.at("norm"));
  if (meta_out) {
    meta_out->seed = header.at("seed").get<std::uint64_t>();
    meta_out->windows_per_instance = header.at("windows_per_instance").get<int>();
    meta_out->max_window_len = header.at("max_window_len").get<int>();
  }

  auto read_split = [&](const char* name, std::vector<InstanceSeries>& split) {
    for (const auto& j : header.at("splits").at(name)) {
      InstanceSeries inst;
      inst.unit_id = j.at("unit").get<int>();
      inst.status = j.at("status").get<std::string>() == "failed"
                        ? InstanceStatus::failed
                        : InstanceStatus::censored;
      const int len = j.at("length").get<int>();
      inst.features = Matrix(len, b.feature_dim);
      inst.sensors = Matrix(len, 0);
      inst.op_settings = Matrix(len, 0);
      inst.failure_time = io::num_from(j.at("failure_time"));
      inst.true_rul = io::num_from(j.at("true_rul"));
      inst.hidden_failure_time = io::num_from(j.at("hidden_failure_time"));
      split.push_back(std::move(inst));
    }
  };
  read_split("train", b.train);
  read_split("validation", b.validation);
  read_split("test", b.test);
  b.train_windows = detail::windows_from_json(header.at("windows").at("train"));
  b.validation_windows =
      detail::windows_from_json(header.at("windows").at("validation"));
  b.test_windows = detail::windows_from_json(header.at("windows").at("test"));

  for (auto* split : {&b.train, &b.validation, &b.test})
    for (auto& inst : *split)
      for (double& v : inst.features.data) v = io::read_f64(in, ctx);
  return b;
}

// ---------------------------------------------------------------------------
// Model checkpoint

inline void write_checkpoint(const TrainedModel& model, const NormStats& norm,
                             DatasetProfile profile, int max_window_len,
                             const std::filesystem::path& path) {
  json header;
  header["format"] = "rulkit-checkpoint";
  header["version"] = 1;
  header["head"] = model.head.kind == HeadKind::ordinal ? "ordinal" : "metric";
  header["scheme"] = {{"k", model.scheme.num_intervals},
                      {"c", model.scheme.interval_len}};
  header["config"] = {{"hidden_size", model.config.hidden_size},
                      {"layers", model.config.num_layers},
                      {"learning_rate", model.config.learning_rate},
                      {"dropout", model.config.dropout_rate},
                      {"batch_size", model.config.batch_size},
                      {"max_iterations", model.config.max_iterations},
                      {"patience", model.config.patience},
                      {"eval_every", model.config.eval_every},
                      {"grad_clip", model.config.grad_clip_norm},
                      {"seed", model.config.seed}};
  header["model_index"] = model.model_index;
  header["best_val_loss"] = io::num_or_null(model.best_val_loss);
  header["diverged"] = model.diverged;
  header["diagnostic"] = model.diagnostic;
  json hist = json::array();
  for (const auto& h : model.history)
    hist.push_back({h.iteration, io::num_or_null(h.train_loss),
                    io::num_or_null(h.val_loss)});
  header["history"] = hist;
  header["input_size"] = model.params.input_size;
  header["hidden_size"] = model.params.hidden_size;
  header["num_layers"] = model.params.num_layers();
  header["profile"] = to_string(profile);
  header["max_window_len"] = max_window_len;
  header["norm"] = detail::norm_to_json(norm);

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  io::write_magic(out, "RKCP");
  io::write_u32(out, 1);
  io::write_u64(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& layer : model.params.layers) {
    for (double v : layer.weight.data) io::write_f64(out, v);
    for (double v : layer.bias) io::write_f64(out, v);
  }
  for (double v : model.head.weight.data) io::write_f64(out, v);
  for (double v : model.head.bias) io::write_f64(out, v);
  if (!out) throw std::invalid_argument("write failed: " + path.string());
}

struct CheckpointBundle {
  TrainedModel model;
  NormStats norm;
  DatasetProfile profile = DatasetProfile::synthetic;
  int max_window_len = 360;
};

inline CheckpointBundle read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  const std::string ctx = path.string();
  io::expect_magic(in, "RKCP", ctx);
  const std::uint32_t version = io::read_u32(in, ctx);
  if (version != 1)
    throw std::invalid_argument(ctx + ": unsupported checkpoint version " +
                                std::to_string(version));
  const std::uint64_t head_len = io::read_u64(in, ctx);
  std::string head(head_len, '\0');
  if (!in.read(head.data(), static_cast<std::streamsize>(head_len)))
    throw std::invalid_argument(ctx + ": truncated header");
  const json header = json::parse(head);

  CheckpointBundle out;
  TrainedModel& m = out.model;
  const auto& cfg = header.at("config");
  m.config.hidden_size = cfg.at("hidden_size").get<int>();
  m.config.num_layers = cfg.at("layers").get<int>();
  m.config.learning_rate = cfg.at("learning_rate").get<double>();
  m.config.dropout_rate = cfg.at("dropout").get<double>();
  m.config.batch_size = cfg.at("batch_size").get<int>();
  m.config.max_iterations = cfg.at("max_iterations").get<int>();
  m.config.patience = cfg.at("patience").get<int>();
  m.config.eval_every = cfg.at("eval_every").get<int>();
  m.config.grad_clip_norm = cfg.at("grad_clip").get<double>();
  m.config.seed = cfg.at("seed").get<std::uint64_t>();
  m.scheme = IntervalScheme::make(header.at("scheme").at("k").get<int>(),
                                  header.at("scheme").at("c").get<double>());
  m.model_index = header.at("model_index").get<int>();
  m.best_val_loss = io::num_from(header.at("best_val_loss"));
  m.diverged = header.at("diverged").get<bool>();
  m.diagnostic = header.at("diagnostic").get<std::string>();
  for (const auto& h : header.at("history"))
    m.history.push_back({h.at(0).get<int>(), io::num_from(h.at(1)),
                         io::num_from(h.at(2))});

  const int p = header.at("input_size").get<int>();
  const int h = header.at("hidden_size").get<int>();
  const int layers = header.at("num_layers").get<int>();
  const HeadKind kind = header.at("head").get<std::string>() == "ordinal"
                            ? HeadKind::ordinal
                            : HeadKind::metric;
  m.params = LstmStackParams::zeros(p, h, layers);
  m.head = HeadParams::zeros(kind, h, m.scheme.num_intervals);
  for (auto& layer : m.params.layers) {
    for (double& v : layer.weight.data) v = io::read_f64(in, ctx);
    for (double& v : layer.bias) v = io::read_f64(in, ctx);
  }
  for (double& v : m.head.weight.data) v = io::read_f64(in, ctx);
  for (double& v : m.head.bias) v = io::read_f64(in, ctx);

  out.norm = detail::norm_from_json(header.at("norm"));
  out.profile = profile_from_string(header.at("profile").get<std::string>());
  out.max_window_len = header.at("max_window_len").get<int>();
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble bundle (JSON with member checkpoint references)

inline void write_ensemble_bundle(const Ensemble& ensemble,
                                  const std::vector<std::string>& member_files,
                                  const std::filesystem::path& path) {
  json j;
  j["format"] = "rulkit-ensemble-bundle";
  j["version"] = 1;
  j["members"] = member_files;
  j["scheme"] = {{"k", ensemble.scheme.num_intervals},
                 {"c", ensemble.scheme.interval_len}};
  j["normalizer"] = {{"esd_min", ensemble.normalizer.esd_min},
                     {"esd_max", ensemble.normalizer.esd_max},
                     {"ent_min", ensemble.normalizer.ent_min},
                     {"ent_max", ensemble.normalizer.ent_max}};
  j["normalizer_fitted"] = ensemble.normalizer_fitted;
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

struct EnsembleBundle {
  Ensemble ensemble;
  NormStats norm;
  DatasetProfile profile = DatasetProfile::synthetic;
  int max_window_len = 360;
};

inline EnsembleBundle read_ensemble_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "rulkit-ensemble-bundle")
    throw std::invalid_argument(path.string() + ": not an ensemble bundle");
  EnsembleBundle out;
  out.ensemble.scheme = IntervalScheme::make(j.at("scheme").at("k").get<int>(),
                                             j.at("scheme").at("c").get<double>());
  out.ensemble.normalizer.esd_min = j.at("normalizer").at("esd_min").get<double>();
  out.ensemble.normalizer.esd_max = j.at("normalizer").at("esd_max").get<double>();
  out.ensemble.normalizer.ent_min = j.at("normalizer").at("ent_min").get<double>();
  out.ensemble.normalizer.ent_max = j.at("normalizer").at("ent_max").get<double>();
  out.ensemble.normalizer_fitted = j.at("normalizer_fitted").get<bool>();
  const auto dir = path.parent_path();
  bool first = true;
  for (const auto& name : j.at("members")) {
    CheckpointBundle cb = read_checkpoint(dir / name.get<std::string>());
    if (first) {
      out.norm = cb.norm;
      out.profile = cb.profile;
      out.max_window_len = cb.max_window_len;
      first = false;
    }
    out.ensemble.members.push_back(std::move(cb.model));
  }
  if (out.ensemble.members.empty())
    throw std::invalid_argument(path.string() + ": bundle lists no members");
  return out;
}

// ---------------------------------------------------------------------------
// Prediction table (CSV)

inline void write_prediction_table(const std::vector<PredictionRecord>& records,
                                   const std::filesystem::path& path) {
  if (records.empty())
    throw std::invalid_argument("write_prediction_table: no records");
  const int m = static_cast<int>(records.front().member_estimates.size());
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << "unit_id,true_rul,r_hat";
  for (int i = 1; i <= m; ++i) out << ",r_hat_" << i;
  out << ",u_esd_raw,u_esd,u_ent_raw,u_ent\n";
  for (const auto& r : records) {
    out << r.unit_id << ",";
    if (known(r.true_rul)) out << io::full_precision(r.true_rul);
    out << "," << io::full_precision(r.ensemble_estimate);
    for (double e : r.member_estimates) out << "," << io::full_precision(e);
    out << "," << io::full_precision(r.u_esd_raw) << ","
        << io::full_precision(r.u_esd) << "," << io::full_precision(r.u_ent_raw)
        << "," << io::full_precision(r.u_ent) << "\n";
  }
}

inline std::vector<PredictionRecord> read_prediction_table(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(path.string() + ": empty file");
  std::vector<std::string> cols;
  {
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 7 || cols[0] != "unit_id" || cols[1] != "true_rul")
    throw std::invalid_argument(path.string() + ": not a prediction table");
  const int m = static_cast<int>(cols.size()) - 7;

  std::vector<PredictionRecord> out;
  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) f.push_back(c);
    if (line.back() == ',') f.push_back("");
    if (static_cast<int>(f.size()) != static_cast<int>(cols.size()))
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": wrong field count");
    PredictionRecord r;
    r.unit_id = std::stoi(f[0]);
    r.true_rul = f[1].empty() ? kUnknown : std::stod(f[1]);
    r.ensemble_estimate = std::stod(f[2]);
    for (int i = 0; i < m; ++i)
      r.member_estimates.push_back(std::stod(f[static_cast<std::size_t>(3 + i)]));
    r.u_esd_raw = std::stod(f[static_cast<std::size_t>(3 + m)]);
    r.u_esd = std::stod(f[static_cast<std::size_t>(4 + m)]);
    r.u_ent_raw = std::stod(f[static_cast<std::size_t>(5 + m)]);
    r.u_ent = std::stod(f[static_cast<std::size_t>(6 + m)]);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation report files

namespace detail {

inline void write_curve(const Curve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << "threshold,value,count\n";
  for (const auto& pt : curve) {
    out << io::full_precision(pt.threshold) << ",";
    if (pt.value) out << io::full_precision(*pt.value);
    out << "," << pt.count << "\n";
  }
}

inline std::string opt_str(const std::optional<double>& v) {
  if (!v) return "absent";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return std::string(buf);
}

}  // namespace detail

// Writes the human-readable summary plus one (threshold, value, count) CSV
// per curve; returns the file names written.
inline std::vector<std::string> write_eval_report(
    const EvalReport& report, const std::filesystem::path& dir) {
  std::vector<std::string> files;
  auto curve_file = [&](const Curve& c, const std::string& name) {
    detail::write_curve(c, dir / name);
    files.push_back(name);
  };
  for (const auto& [kind, curves] :
       {std::pair{"esd", &report.curves_esd}, std::pair{"ent", &report.curves_ent}}) {
    const std::string k = kind;
    curve_file(curves->precision, "precision_" + k + ".csv");
    curve_file(curves->recall, "recall_" + k + ".csv");
    curve_file(curves->f1, "f1_" + k + ".csv");
    curve_file(curves->avg_error_vs_tau_u, "avg_error_vs_tau_u_" + k + ".csv");
    curve_file(curves->avg_uncertainty_vs_tau_e,
               "avg_uncertainty_vs_tau_e_" + k + ".csv");
    curve_file(curves->precision_low_rul_vs_tau_r, "p_low_rul_vs_tau_r_" + k + ".csv");
    curve_file(curves->coverage_vs_tau_e, "coverage_vs_tau_e_" + k + ".csv");
  }

  std::ofstream out(dir / "report.txt");
  if (!out) throw std::invalid_argument("cannot write report.txt");
  out << "RUL evaluation report\n";
  out << "instances:            " << report.n << "\n";
  out << "rul upper bound:      " << report.r_u
      << " (true RUL clipped here before errors)\n";
  out << "rmse:                 " << io::full_precision(report.rmse_value) << "\n";
  out << "timeliness score:     " << io::full_precision(report.score) << "\n";
  out << "\nthresholds: tau_e=" << report.thresholds.tau_e
      << " tau_u=" << report.thresholds.tau_u
      << " tau_r=" << report.thresholds.tau_r << "\n";
  out << "\n                      ESD        ENT\n";
  out << "precision:            " << detail::opt_str(report.prf_esd.precision)
      << "     " << detail::opt_str(report.prf_ent.precision) << "\n";
  out << "recall:               " << detail::opt_str(report.prf_esd.recall)
      << "     " << detail::opt_str(report.prf_ent.recall) << "\n";
  out << "f1:                   " << detail::opt_str(report.prf_esd.f1) << "     "
      << detail::opt_str(report.prf_ent.f1) << "\n";
  out << "p_low_rul:            " << detail::opt_str(report.p_low_esd) << "     "
      << detail::opt_str(report.p_low_ent) << "\n";
  out << "coverage_ce:          " << detail::opt_str(report.c_e_esd) << "     "
      << detail::opt_str(report.c_e_ent) << "\n";
  out << "\nCurve tables are written next to this file; absent points have an\n"
         "empty value column.\n";
  files.push_back("report.txt");
  return files;
}

// ---------------------------------------------------------------------------
// Manifest

inline std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (n < static_cast<std::streamsize>(sizeof buf)) break;
  }
  return h;
}

inline void write_manifest(const std::vector<std::string>& files,
                           const std::filesystem::path& dir) {
  json j;
  j["format"] = "rulkit-manifest";
  json arr = json::array();
  for (const auto& name : files) {
    const auto p = dir / name;
    char hex[20];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(p)));
    arr.push_back({{"name", name},
                   {"bytes", static_cast<std::uint64_t>(std::filesystem::file_size(p))},
                   {"fnv1a64", std::string(hex)}});
  }
  j["files"] = arr;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::invalid_argument("cannot write manifest.json");
  out << j.dump(2) << "\n";
}

}  // namespace rulkit
