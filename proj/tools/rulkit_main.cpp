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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rulkit/config.hpp"
#include "rulkit/ensemble.hpp"
#include "rulkit/eval.hpp"
#include "rulkit/pipeline.hpp"
#include "rulkit/serialize.hpp"

namespace fs = std::filesystem;
using namespace rulkit;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string mode;
  std::optional<std::uint64_t> seed;
  bool grid = false;
  bool diagnostics = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_mode = false,
                bool with_grid = false, bool with_diag = false) {
  cmd->add_option("--config", args.config_path, "key=value configuration file")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides out_dir)");
  cmd->add_option("--seed", args.seed, "master seed (overrides config)");
  if (with_mode)
    cmd->add_option("--mode", args.mode, "training mode: mr | or | orc");
  if (with_grid)
    cmd->add_flag("--grid", args.grid, "grid-search hyperparameters first");
  if (with_diag)
    cmd->add_flag("--diagnostics", args.diagnostics,
                  "emit nearest-unit and PCA diagnostics");
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = RunConfig::parse_file(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.mode.empty()) {
    if (args.mode != "mr" && args.mode != "or" && args.mode != "orc")
      throw std::invalid_argument("unknown mode '" + args.mode + "'");
    cfg.mode = args.mode;
  }
  return cfg;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

void finish_run(const RunConfig& cfg, const fs::path& dir,
                std::vector<std::string> files) {
  {
    std::ofstream out(dir / "config.resolved");
    if (!out) throw std::invalid_argument("cannot write config.resolved");
    out << cfg.resolved_text();
  }
  files.push_back("config.resolved");
  write_manifest(files, dir);
}

Ensemble load_model_any(const std::string& path, NormStats& norm,
                        DatasetProfile& profile, int& max_window_len) {
  if (path.empty())
    throw std::invalid_argument("config key 'model' is required here");
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::invalid_argument("cannot open model " + path);
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::string(magic, 4) == "RKCP") {
    CheckpointBundle cb = read_checkpoint(path);
    norm = cb.norm;
    profile = cb.profile;
    max_window_len = cb.max_window_len;
    return single_model_ensemble(std::move(cb.model));
  }
  EnsembleBundle eb = read_ensemble_bundle(path);
  norm = eb.norm;
  profile = eb.profile;
  max_window_len = eb.max_window_len;
  return std::move(eb.ensemble);
}

// ---------------------------------------------------------------------------

int cmd_prepare(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const fs::path dir = ensure_out_dir(cfg);
  const DatasetBundle bundle = prepare_bundle(cfg);
  CacheMeta meta{cfg.seed, cfg.windows_per_instance, cfg.max_window_len};
  write_dataset_cache(bundle, meta, dir / "cache.rkds");
  finish_run(cfg, dir, {"cache.rkds"});
  std::printf("prepared %s: %zu train / %zu validation / %zu test units, "
              "%zu/%zu/%zu windows, p=%d\n",
              cfg.profile.c_str(), bundle.train.size(), bundle.validation.size(),
              bundle.test.size(), bundle.train_windows.size(),
              bundle.validation_windows.size(), bundle.test_windows.size(),
              bundle.feature_dim);
  return 0;
}

int cmd_synth(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const fs::path dir = ensure_out_dir(cfg);
  const auto files = export_synthetic_cmapss(cfg, dir);
  finish_run(cfg, dir, files);
  std::printf("wrote synthetic C-MAPSS-format files to %s\n", dir.c_str());
  return 0;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  const fs::path dir = ensure_out_dir(cfg);
  if (cfg.cache.empty())
    throw std::invalid_argument("config key 'cache' is required for train");
  CacheMeta meta;
  const DatasetBundle bundle = read_dataset_cache(cfg.cache, &meta);
  const IntervalScheme scheme = cfg.scheme();
  const ModeWindows mw =
      windows_for_mode(bundle, cfg.mode, scheme, meta.max_window_len);

  std::vector<std::string> files;
  TrainConfig tc = cfg.train_config();
  if (args.grid) {
    const GridOutcome outcome = grid_search(cfg.grid_spec(), mw.head_kind, scheme,
                                            mw.train, mw.validation, tc);
    std::ofstream out(dir / "grid_results.csv");
    out << "hidden_size,layers,learning_rate,val_loss,diverged\n";
    for (const auto& r : outcome.results)
      out << r.config.hidden_size << "," << r.config.num_layers << ","
          << io::full_precision(r.config.learning_rate) << ","
          << io::full_precision(r.val_loss) << "," << (r.diverged ? 1 : 0)
          << "\n";
    files.push_back("grid_results.csv");
    tc = outcome.best;
    std::printf("grid: best h=%d L=%d lr=%g\n", tc.hidden_size, tc.num_layers,
                tc.learning_rate);
  }

  const TrainedModel model =
      train(tc, mw.head_kind, scheme, mw.train, mw.validation);
  if (model.diverged)
    std::fprintf(stderr, "warning: %s\n", model.diagnostic.c_str());
  write_checkpoint(model, bundle.norm, bundle.profile, meta.max_window_len,
                   dir / "model.rkcp");
  files.insert(files.begin(), "model.rkcp");
  finish_run(cfg, dir, files);
  std::printf("trained mode=%s on %zu windows, best validation loss %.6f\n",
              cfg.mode.c_str(), mw.train.size(), model.best_val_loss);
  return 0;
}

int cmd_ensemble(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  cfg.mode = "orc";
  const fs::path dir = ensure_out_dir(cfg);
  if (cfg.cache.empty())
    throw std::invalid_argument("config key 'cache' is required for ensemble");
  CacheMeta meta;
  const DatasetBundle bundle = read_dataset_cache(cfg.cache, &meta);
  const IntervalScheme scheme = cfg.scheme();
  const ModeWindows mw =
      windows_for_mode(bundle, cfg.mode, scheme, meta.max_window_len);

  Ensemble ensemble =
      train_ensemble(cfg.train_config(), mw.head_kind, scheme, mw.train,
                     mw.validation, cfg.ensemble_pool, cfg.ensemble_members);
  const auto val_records =
      predict_validation_exact(ensemble, bundle, meta.max_window_len);
  ensemble.normalizer = fit_uncertainty_normalizer(val_records);
  ensemble.normalizer_fitted = true;

  std::vector<std::string> files;
  std::vector<std::string> member_files;
  for (int i = 0; i < ensemble.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "member_%02d.rkcp", i);
    write_checkpoint(ensemble.members[static_cast<std::size_t>(i)], bundle.norm,
                     bundle.profile, meta.max_window_len, dir / name);
    member_files.push_back(name);
    files.push_back(name);
  }
  write_ensemble_bundle(ensemble, member_files, dir / "ensemble.json");
  files.insert(files.begin(), "ensemble.json");
  finish_run(cfg, dir, files);
  std::printf("ensemble: kept %d of %d models, validation losses",
              ensemble.size(), cfg.ensemble_pool);
  for (const auto& m : ensemble.members) std::printf(" %.5f", m.best_val_loss);
  std::printf("\n");
  return 0;
}

int cmd_predict(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const fs::path dir = ensure_out_dir(cfg);
  NormStats norm;
  DatasetProfile profile = DatasetProfile::synthetic;
  int max_window_len = 360;
  const Ensemble ensemble =
      load_model_any(cfg.model, norm, profile, max_window_len);

  std::vector<PredictionRecord> records;
  if (!cfg.cache.empty()) {
    const DatasetBundle bundle = read_dataset_cache(cfg.cache);
    records = predict_test_split(ensemble, bundle, max_window_len);
  } else if (!cfg.input_series.empty()) {
    std::ifstream in(cfg.input_series);
    if (!in) throw std::invalid_argument("cannot open " + cfg.input_series);
    const auto units = detail::parse_cmapss_rows(in, cfg.input_series);
    if (units.empty())
      throw std::invalid_argument(cfg.input_series + ": no data rows");
    for (const auto& inst : units) {
      const Matrix features = featurize(inst.sensors, inst.op_settings, norm);
      const int first =
          features.rows > max_window_len ? features.rows - max_window_len : 0;
      Matrix window(features.rows - first, features.cols);
      for (int r = 0; r < window.rows; ++r)
        for (int c = 0; c < window.cols; ++c)
          window(r, c) = features(first + r, c);
      PredictionRecord rec = predict_ensemble(ensemble, window);
      rec.unit_id = inst.unit_id;
      records.push_back(std::move(rec));
    }
  } else {
    throw std::invalid_argument(
        "predict needs either 'cache' (prepared test split) or 'input_series' "
        "(raw C-MAPSS rows) in the config");
  }
  write_prediction_table(records, dir / "predictions.csv");
  finish_run(cfg, dir, {"predictions.csv"});
  std::printf("predicted %zu units with %d member(s)\n", records.size(),
              ensemble.size());
  return 0;
}

void write_diagnostics(const RunConfig& cfg, const fs::path& dir,
                       const std::vector<PredictionRecord>& preds,
                       std::vector<std::string>& files) {
  if (cfg.cache.empty() || cfg.model.empty())
    throw std::invalid_argument(
        "--diagnostics needs 'cache' and 'model' in the config");
  const DatasetBundle bundle = read_dataset_cache(cfg.cache);
  NormStats norm;
  DatasetProfile profile = DatasetProfile::synthetic;
  int max_window_len = 360;
  const Ensemble ensemble =
      load_model_any(cfg.model, norm, profile, max_window_len);
  const double r_u = ensemble.scheme.upper_bound();

  // worst offenders: confidently wrong (low uncertainty, high error)
  std::vector<std::pair<double, const PredictionRecord*>> ranked;
  for (const auto& p : preds) {
    if (!known(p.true_rul) || p.u_esd > cfg.tau_u) continue;
    const double truth = std::min(p.true_rul, r_u);
    ranked.emplace_back(std::abs(p.ensemble_estimate - truth), &p);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  if (static_cast<int>(ranked.size()) > cfg.diagnostics_count)
    ranked.resize(static_cast<std::size_t>(cfg.diagnostics_count));

  // mean prediction vectors of every train unit over its most recent window
  std::vector<std::pair<int, std::vector<double>>> train_vectors;
  for (const auto& inst : bundle.train) {
    const int first =
        inst.features.rows > max_window_len ? inst.features.rows - max_window_len : 0;
    Matrix window(inst.features.rows - first, inst.features.cols);
    for (int r = 0; r < window.rows; ++r)
      for (int c = 0; c < window.cols; ++c)
        window(r, c) = inst.features(first + r, c);
    train_vectors.emplace_back(inst.unit_id,
                               predict_ensemble(ensemble, window).mean_prediction);
  }

  auto write_series = [&](const std::string& name, const std::vector<double>& seq) {
    std::ofstream out(dir / name);
    out << "t,value\n";
    for (std::size_t i = 0; i < seq.size(); ++i)
      out << (i + 1) << "," << io::full_precision(seq[i]) << "\n";
    files.push_back(name);
  };

  std::ofstream summary(dir / "diagnostics.csv");
  summary << "test_unit,true_rul,estimate,u_esd,nearest_1,nearest_2,nearest_3\n";
  for (const auto& [err, rec] : ranked) {
    const InstanceSeries* test_inst = find_instance(bundle.test, rec->unit_id);
    if (!test_inst) continue;
    const int first = test_inst->features.rows > max_window_len
                          ? test_inst->features.rows - max_window_len
                          : 0;
    Matrix window(test_inst->features.rows - first, test_inst->features.cols);
    for (int r = 0; r < window.rows; ++r)
      for (int c = 0; c < window.cols; ++c)
        window(r, c) = test_inst->features(first + r, c);
    const auto mean_vec = predict_ensemble(ensemble, window).mean_prediction;
    const auto nearest = nearest_train_instances(mean_vec, train_vectors, 3);

    summary << rec->unit_id << "," << io::full_precision(rec->true_rul) << ","
            << io::full_precision(rec->ensemble_estimate) << ","
            << io::full_precision(rec->u_esd);
    for (int i = 0; i < 3; ++i)
      summary << ","
              << (i < static_cast<int>(nearest.size())
                      ? std::to_string(nearest[static_cast<std::size_t>(i)])
                      : std::string(""));
    summary << "\n";

    if (test_inst->features.rows >= 2)
      write_series("pca_test_" + std::to_string(rec->unit_id) + ".csv",
                   pca_first_component(test_inst->features));
    for (int unit : nearest) {
      const InstanceSeries* tr = find_instance(bundle.train, unit);
      if (tr && tr->features.rows >= 2)
        write_series("pca_train_" + std::to_string(unit) + ".csv",
                     pca_first_component(tr->features));
    }
  }
  files.push_back("diagnostics.csv");
}

int cmd_evaluate(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const fs::path dir = ensure_out_dir(cfg);
  if (cfg.predictions.empty())
    throw std::invalid_argument("config key 'predictions' is required for evaluate");
  const auto preds = read_prediction_table(cfg.predictions);

  std::vector<EvalRecord> records;
  for (const auto& p : preds) {
    if (!known(p.true_rul)) continue;
    EvalRecord r;
    r.unit_id = p.unit_id;
    r.true_rul = p.true_rul;
    r.estimate = p.ensemble_estimate;
    r.u_esd = p.u_esd;
    r.u_ent = p.u_ent;
    records.push_back(r);
  }
  if (records.empty())
    throw std::invalid_argument(
        "no predictions with ground-truth RUL; evaluate needs labeled rows");

  const double r_u = cfg.scheme().upper_bound();
  const EvalReport report = evaluate_records(records, cfg.thresholds(), r_u);
  std::vector<std::string> files = write_eval_report(report, dir);
  if (args.diagnostics) write_diagnostics(cfg, dir, preds, files);
  finish_run(cfg, dir, files);
  std::printf("evaluated %d instances: rmse %.4f, timeliness %.2f\n", report.n,
              report.rmse_value, report.score);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RUL estimation with LSTM ordinal regression, censored training "
               "and ensemble uncertainty"};
  app.require_subcommand(1);

  CommonArgs prepare_args, train_args, ensemble_args, predict_args,
      evaluate_args, synth_args;
  add_common(app.add_subcommand("prepare", "parse/generate, censor, normalize "
                                           "and window a dataset into a cache"),
             prepare_args);
  add_common(app.add_subcommand("train", "train a single model from a cache"),
             train_args, /*mode=*/true, /*grid=*/true);
  add_common(app.add_subcommand("ensemble",
                                "train an ORC ensemble and fit the "
                                "uncertainty normalizer"),
             ensemble_args);
  add_common(app.add_subcommand("predict", "predict RUL for a test cache or a "
                                           "raw series file"),
             predict_args);
  add_common(app.add_subcommand("evaluate", "compute metrics and threshold "
                                            "curves from a prediction table"),
             evaluate_args, /*mode=*/false, /*grid=*/false, /*diag=*/true);
  add_common(app.add_subcommand("synth", "export synthetic data in the "
                                         "26-column text layout"),
             synth_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    if (app.got_subcommand("prepare")) return cmd_prepare(prepare_args);
    if (app.got_subcommand("train")) return cmd_train(train_args);
    if (app.got_subcommand("ensemble")) return cmd_ensemble(ensemble_args);
    if (app.got_subcommand("predict")) return cmd_predict(predict_args);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(evaluate_args);
    if (app.got_subcommand("synth")) return cmd_synth(synth_args);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
