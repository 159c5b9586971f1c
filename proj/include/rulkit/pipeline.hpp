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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rulkit/config.hpp"
#include "rulkit/data.hpp"
#include "rulkit/ensemble.hpp"
#include "rulkit/serialize.hpp"
#include "rulkit/train.hpp"

namespace rulkit {

// parse (or generate) -> split -> censor -> features -> normalize -> windows
inline DatasetBundle prepare_bundle(const RunConfig& cfg) {
  DatasetBundle bundle;
  if (cfg.profile == "synthetic") {
    bundle = generate_synthetic(cfg.synth_units, cfg.synth_noise, cfg.p_c,
                                cfg.seed, cfg.synth_test_units);
  } else {
    if (cfg.train_path.empty() || cfg.test_path.empty() || cfg.rul_path.empty())
      throw std::invalid_argument(
          "profile " + cfg.profile +
          " needs train_path, test_path and rul_path in the config");
    bundle = parse_cmapss(cfg.train_path, cfg.test_path, cfg.rul_path);
    split_validation(bundle, cfg.val_fraction, cfg.seed);
    simulate_censoring(bundle, cfg.p_c, cfg.seed);
  }
  build_features(bundle, profile_from_string(cfg.profile));
  z_normalize(bundle);
  generate_windows(bundle, cfg.windows_per_instance, cfg.seed);
  return bundle;
}

struct ModeWindows {
  std::vector<WindowSample> train, validation;
  HeadKind head_kind = HeadKind::ordinal;
};

// mode "or": ordinal loss, failed windows only; "orc": ordinal masked loss on
// failed + censored windows; "mr": metric head on failed windows only.
inline ModeWindows windows_for_mode(const DatasetBundle& bundle,
                                    const std::string& mode,
                                    const IntervalScheme& scheme,
                                    int max_window_len) {
  ModeWindows out;
  out.head_kind = mode == "mr" ? HeadKind::metric : HeadKind::ordinal;
  const bool censored = mode == "orc";
  const auto train_all =
      materialize_split(bundle.train, bundle.train_windows, max_window_len);
  const auto val_all = materialize_split(bundle.validation,
                                         bundle.validation_windows, max_window_len);
  out.train = usable_windows(train_all, out.head_kind, scheme, censored);
  out.validation = usable_windows(val_all, out.head_kind, scheme, censored);
  if (out.train.empty())
    throw std::invalid_argument("mode " + mode + ": no usable training windows");
  return out;
}

// Predictions over the test split of a prepared bundle.
inline std::vector<PredictionRecord> predict_test_split(
    const Ensemble& ensemble, const DatasetBundle& bundle, int max_window_len) {
  std::vector<PredictionRecord> out;
  for (const auto& w : bundle.test_windows) {
    const InstanceSeries* inst = find_instance(bundle.test, w.unit_id);
    if (!inst)
      throw std::invalid_argument("test window references unknown unit " +
                                  std::to_string(w.unit_id));
    const WindowSample s = materialize_window(*inst, w, max_window_len);
    PredictionRecord rec = predict_ensemble(ensemble, s.input);
    rec.unit_id = w.unit_id;
    rec.true_rul = w.label;
    out.push_back(std::move(rec));
  }
  return out;
}

// Ensemble predictions on the validation windows that carry an exact RUL;
// used for fitting the uncertainty normalizer. Falls back to all validation
// windows (raw uncertainties need no ground truth), then to train windows.
inline std::vector<PredictionRecord> predict_validation_exact(
    const Ensemble& ensemble, const DatasetBundle& bundle, int max_window_len) {
  auto run = [&](const std::vector<InstanceSeries>& split,
                 const std::vector<WindowDescriptor>& windows, bool exact_only) {
    std::vector<PredictionRecord> recs;
    for (const auto& w : windows) {
      if (exact_only && w.censored) continue;
      const InstanceSeries* inst = find_instance(split, w.unit_id);
      if (!inst) continue;
      const WindowSample s = materialize_window(*inst, w, max_window_len);
      PredictionRecord rec = predict_ensemble(ensemble, s.input);
      rec.unit_id = w.unit_id;
      if (!w.censored) rec.true_rul = w.label;
      recs.push_back(std::move(rec));
    }
    return recs;
  };
  auto recs = run(bundle.validation, bundle.validation_windows, true);
  if (recs.empty()) recs = run(bundle.validation, bundle.validation_windows, false);
  if (recs.empty()) recs = run(bundle.train, bundle.train_windows, false);
  if (recs.empty())
    throw std::runtime_error("no windows available to fit the uncertainty normalizer");
  return recs;
}

// Wraps a single checkpoint as a one-member ensemble. Uncertainty cannot be
// min-max normalized without a validation range, so normalized values equal
// the raw ones (identity range [0, 1]).
inline Ensemble single_model_ensemble(TrainedModel model) {
  Ensemble e;
  e.scheme = model.scheme;
  e.members.push_back(std::move(model));
  e.normalizer = UncertaintyNormalizer{0.0, 1.0, 0.0, 1.0};
  e.normalizer_fitted = true;
  return e;
}

// ---------------------------------------------------------------------------
// C-MAPSS-format export of synthetic data (the `synth` command)

namespace detail {

inline void write_cmapss_rows(std::ofstream& out, const InstanceSeries& inst) {
  char buf[32];
  for (int t = 0; t < inst.length(); ++t) {
    out << inst.unit_id << " " << (t + 1);
    for (int c = 0; c < 3; ++c) out << " 0.0";
    for (int c = 0; c < 21; ++c) {
      const double v = c < inst.sensors.cols ? inst.sensors(t, c) : 0.0;
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << " " << buf;
    }
    out << "\n";
  }
}

}  // namespace detail

// Writes synthetic units in the 26-column text layout (sensors beyond the
// synthetic eight are zero-padded and later dropped as constant columns).
// Returns the three file names written into dir.
inline std::vector<std::string> export_synthetic_cmapss(
    const RunConfig& cfg, const std::filesystem::path& dir) {
  DatasetBundle b = generate_synthetic(cfg.synth_units, cfg.synth_noise, 0.0,
                                       cfg.seed, cfg.synth_test_units);
  const std::vector<std::string> names{"train_synthetic.txt",
                                       "test_synthetic.txt",
                                       "rul_synthetic.txt"};
  {
    std::ofstream out(dir / names[0]);
    if (!out) throw std::invalid_argument("cannot write " + names[0]);
    std::vector<const InstanceSeries*> units;
    for (const auto& i : b.train) units.push_back(&i);
    for (const auto& i : b.validation) units.push_back(&i);
    std::sort(units.begin(), units.end(),
              [](const InstanceSeries* a, const InstanceSeries* bb) {
                return a->unit_id < bb->unit_id;
              });
    for (const auto* inst : units) detail::write_cmapss_rows(out, *inst);
  }
  {
    std::ofstream out(dir / names[1]);
    if (!out) throw std::invalid_argument("cannot write " + names[1]);
    for (const auto& inst : b.test) detail::write_cmapss_rows(out, inst);
  }
  {
    std::ofstream out(dir / names[2]);
    if (!out) throw std::invalid_argument("cannot write " + names[2]);
    for (const auto& inst : b.test)
      out << static_cast<long long>(inst.true_rul) << "\n";
  }
  return names;
}

}  // namespace rulkit
