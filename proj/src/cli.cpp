#include "arlp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>

#include "arlp/config.hpp"
#include "arlp/errors.hpp"
#include "arlp/evaluation.hpp"
#include "arlp/grid.hpp"
#include "arlp/ingest.hpp"
#include "arlp/kernels.hpp"
#include "arlp/report.hpp"
#include "arlp/synthetic.hpp"
#include "arlp/temporal.hpp"
#include "arlp/training.hpp"

namespace arlp::cli {
namespace {

namespace fs = std::filesystem;

FileConfig config_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

std::string format_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------- attention

void write_grid_csv(const std::string& path, const GridSpec& grid,
                    const std::function<double(int)>& cell_value) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (c) out << ',';
      out << format_g(cell_value(r * grid.cols + c));
    }
    out << '\n';
  }
}

void dump_attention_maps(const GapModel::SampleCache& cache, const GridSpec& grid,
                         const fs::path& dir, const std::string& prefix) {
  for (const auto& pass : cache.days) {
    std::string stem = prefix;
    if (cache.days.size() > 1) stem += "day" + std::to_string(pass.day) + "_";
    const SemanticOutcome& sem = pass.semantic;
    write_grid_csv((dir / (stem + "sd.csv")).string(), grid,
                   [&](int i) { return sem.distance[i]; });
    write_grid_csv((dir / (stem + "ha.csv")).string(), grid,
                   [&](int i) { return static_cast<double>(sem.hard_mask[i]); });
    write_grid_csv((dir / (stem + "sa.csv")).string(), grid,
                   [&](int i) { return sem.sample_weights[i]; });
    write_grid_csv((dir / (stem + "fa.csv")).string(), grid,
                   [&](int i) { return sem.final_weights[i]; });
  }
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
  std::string config, out, labels;
};

int cmd_synth(const SynthArgs& a) {
  const FileConfig cfg = config_or_default(a.config);
  SyntheticData data = generate_synthetic(cfg.synthetic, cfg.grid);
  write_cube(data.cube, a.out);
  if (!a.labels.empty()) {
    std::ofstream out(a.labels);
    if (!out) throw DataError("cannot open '" + a.labels + "' for writing");
    out << "region_index,cluster_id\n";
    for (std::size_t r = 0; r < data.labels.size(); ++r)
      out << r << ',' << data.labels[r] << '\n';
  }
  std::cout << "synthetic cube: " << cfg.grid.rows << "x" << cfg.grid.cols << " grid, "
            << data.cube.days() << " days, " << data.cube.intervals_per_day()
            << " intervals/day, " << cfg.synthetic.clusters << " clusters -> " << a.out
            << "\n";
  return 0;
}

struct IngestArgs {
  std::string orders, trajectories, weather, out, config;
};

int cmd_ingest(const IngestArgs& a) {
  const FileConfig cfg = config_or_default(a.config);
  IngestResult result = ingest_csv(a.orders, a.trajectories, a.weather, cfg.grid);
  write_cube(result.cube, a.out);
  if (result.stats.out_of_bounds > 0)
    std::cerr << "warning: " << result.stats.out_of_bounds
              << " records referenced cells outside the grid and were skipped\n";
  if (result.stats.unknown_weather > 0)
    std::cerr << "warning: " << result.stats.unknown_weather
              << " weather reports had unknown conditions (stored as other)\n";
  std::cout << "ingested " << result.stats.order_rows << " orders, "
            << result.stats.trajectory_rows << " trajectory points, "
            << result.stats.weather_rows << " weather reports over "
            << result.cube.days() << " days -> " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string model = "arlp";
  std::string cube, out, config, loss_log;
};

int cmd_train(const TrainArgs& a) {
  const FileConfig cfg = config_or_default(a.config);
  const CityCube raw = read_cube(a.cube);
  if (!a.config.empty() && !(cfg.grid == raw.grid()))
    throw ConfigError("the [grid] section disagrees with the grid stored in '" +
                      a.cube + "'; regenerate the cube or drop the section");

  const ModelKind kind = model_kind_from_name(a.model);
  const int train_days =
      split_train_days(raw.days(), cfg.train.ratio_train, cfg.train.ratio_test);
  const NormalizationStats stats = compute_stats(raw, 0, train_days);
  const CityCube normalized = apply_normalization(raw, stats);

  GapModel model(kind, raw.grid(), cfg.model);
  model.init(cfg.train.seed);
  const TrainOutcome outcome = train_model(model, normalized, train_days, cfg.train);

  CheckpointMeta meta;
  meta.kind = kind;
  meta.grid = raw.grid();
  meta.model = cfg.model;
  meta.train = cfg.train;
  meta.steps = static_cast<std::uint64_t>(outcome.steps);
  meta.train_days = train_days;
  meta.config_hash = cfg.hash();
  meta.stats = stats;
  save_checkpoint(a.out, model, meta);

  if (!a.loss_log.empty()) {
    std::ofstream log(a.loss_log);
    if (!log) throw DataError("cannot open '" + a.loss_log + "' for writing");
    log << "epoch,train_sse,train_mse,val_mae\n";
    for (const EpochLog& e : outcome.epochs)
      log << e.epoch << ',' << format_g(e.train_sse) << ',' << format_g(e.train_mse)
          << ',' << format_g(e.val_mae) << '\n';
  }

  if (model.attention_fallbacks() > 0)
    std::cerr << "warning: day attention fell back to uniform weights "
              << model.attention_fallbacks() << " times\n";

  char hash_text[24];
  std::snprintf(hash_text, sizeof hash_text, "%016llx",
                static_cast<unsigned long long>(meta.config_hash));
  std::cout << "trained " << model_kind_name(kind) << " on " << train_days
            << " days: " << outcome.epochs.size() << " epochs, " << outcome.steps
            << " steps";
  if (outcome.best_epoch >= 0)
    std::cout << ", best val mae " << format_g(outcome.best_val_mae) << " at epoch "
              << outcome.best_epoch;
  std::cout << " (config " << hash_text << ") -> " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint, cube, out_dir, dump_attention, loss_log;
  int ar_order = 3;
  bool ar_diff = false;
  bool normalized = false;
  bool stamp = false;
};

std::string now_stamp() {
  char buf[64];
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_eval(const EvalArgs& a) {
  LoadedCheckpoint lc = load_checkpoint(a.checkpoint);
  const CityCube raw = read_cube(a.cube);
  if (!(raw.grid() == lc.meta.grid))
    throw DataError("checkpoint and cube disagree on the grid layout");
  if (lc.meta.train_days >= raw.days())
    throw DataError("the cube holds no days beyond the training range");

  const GridSpec& grid = raw.grid();
  const CityCube normalized = apply_normalization(raw, lc.meta.stats);
  const int min_day =
      lc.meta.kind == ModelKind::MultiDay ? grid.history - 1 : 0;
  const std::vector<SampleWindow> positions =
      evaluation_positions(grid, lc.meta.train_days, raw.days(), min_day);

  fs::create_directories(a.out_dir);
  const std::string stamp = a.stamp ? "generated " + now_stamp() : "";

  GapModel& model = *lc.model;
  GapModel::SampleCache cache;
  const std::string model_name = model_kind_name(model.kind());

  auto model_raw = [&](const SampleWindow& s) {
    return lc.meta.stats.denormalize(Channel::Gap, model.forward(normalized, s, cache));
  };
  auto truth_raw = [&](const SampleWindow& s) {
    return raw.at_cell(Channel::Gap, s.day, s.t0 + grid.window, s.region);
  };

  // fit the autoregression once per region, on demand
  std::string ar_name = "ar" + std::to_string(a.ar_order) + (a.ar_diff ? "_diff" : "");
  std::map<int, ArBaseline> ar_raw_fits, ar_norm_fits;
  auto ar_of = [&](std::map<int, ArBaseline>& fits, const CityCube& source,
                   int region) -> const ArBaseline& {
    auto it = fits.find(region);
    if (it == fits.end())
      it = fits
               .emplace(region, fit_ar_baseline(source, lc.meta.train_days, region,
                                                a.ar_order, a.ar_diff, grid))
               .first;
    return it->second;
  };

  std::vector<MetricsRow> rows;
  std::vector<EvalOutcome> heatmapped;

  heatmapped.push_back(evaluate_predictor(model_name, positions, model_raw, truth_raw,
                                          grid.cells()));
  heatmapped.push_back(evaluate_predictor(
      "persistence", positions,
      [&](const SampleWindow& s) { return persistence_forecast(raw, s); }, truth_raw,
      grid.cells()));
  heatmapped.push_back(evaluate_predictor(
      ar_name, positions,
      [&](const SampleWindow& s) {
        return ar_forecast(ar_of(ar_raw_fits, raw, s.region), raw, s);
      },
      truth_raw, grid.cells()));
  for (const EvalOutcome& e : heatmapped) rows.push_back(e.row);

  if (a.normalized) {
    auto truth_norm = [&](const SampleWindow& s) {
      return normalized.at_cell(Channel::Gap, s.day, s.t0 + grid.window, s.region);
    };
    rows.push_back(evaluate_predictor(
                       model_name + " (normalized)", positions,
                       [&](const SampleWindow& s) {
                         return model.forward(normalized, s, cache);
                       },
                       truth_norm, grid.cells())
                       .row);
    rows.push_back(evaluate_predictor(
                       "persistence (normalized)", positions,
                       [&](const SampleWindow& s) {
                         return persistence_forecast(normalized, s);
                       },
                       truth_norm, grid.cells())
                       .row);
    rows.push_back(evaluate_predictor(
                       ar_name + " (normalized)", positions,
                       [&](const SampleWindow& s) {
                         return ar_forecast(ar_of(ar_norm_fits, normalized, s.region),
                                            normalized, s);
                       },
                       truth_norm, grid.cells())
                       .row);
  }

  write_metrics_csv((fs::path(a.out_dir) / "metrics.csv").string(), rows);
  for (const EvalOutcome& e : heatmapped)
    write_heatmap_ppm((fs::path(a.out_dir) / ("heatmap_" + e.row.model + ".ppm")).string(),
                      e.region_mae, grid.rows, grid.cols, 16, stamp);

  if (!a.loss_log.empty()) {
    // re-plot the training curve recorded by the train command
    std::ifstream log(a.loss_log);
    if (!log) throw DataError("cannot open loss log '" + a.loss_log + "'");
    std::string line;
    std::getline(log, line);  // header
    std::vector<double> sse;
    while (std::getline(log, line)) {
      const std::size_t c1 = line.find(',');
      const std::size_t c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) continue;
      sse.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    if (sse.empty()) throw DataError("loss log '" + a.loss_log + "' holds no epochs");
    write_loss_curve_ppm((fs::path(a.out_dir) / "loss_curve.ppm").string(), sse, 640,
                         320, stamp);
  }

  if (!a.dump_attention.empty()) {
    if (model.kind() == ModelKind::GapLstm)
      throw ConfigError("the plain LSTM model has no attention maps to dump");
    fs::create_directories(a.dump_attention);
    const std::size_t dump_count = std::min<std::size_t>(16, positions.size());
    for (std::size_t i = 0; i < dump_count; ++i) {
      model.forward(normalized, positions[i], cache);
      dump_attention_maps(cache, grid, a.dump_attention,
                          "sample" + std::to_string(i) + "_");
    }
  }

  char hash_text[24];
  std::snprintf(hash_text, sizeof hash_text, "%016llx",
                static_cast<unsigned long long>(lc.meta.config_hash));
  std::cout << "evaluated " << positions.size() << " windows on days ["
            << lc.meta.train_days << ", " << raw.days() << ") seed " << lc.meta.train.seed
            << " config " << hash_text << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %12s %12s %14s %10s %10s", "model", "mae",
                "rmse", "mape_percent", "n", "excluded");
  std::cout << line << "\n";
  for (const MetricsRow& r : rows) {
    std::snprintf(line, sizeof line, "%-26s %12.6f %12.6f %14.4f %10zu %10zu",
                  r.model.c_str(), r.mae, r.rmse, r.mape_percent, r.n,
                  r.excluded_zero_targets);
    std::cout << line << "\n";
  }
  if (model.attention_fallbacks() > 0)
    std::cerr << "warning: day attention fell back to uniform weights "
              << model.attention_fallbacks() << " times\n";
  return 0;
}

struct PredictArgs {
  std::string checkpoint, cube, dump_attention;
  int region = 0, day = 0, interval = 0;
  bool denormalized = false;
};

int cmd_predict(const PredictArgs& a) {
  LoadedCheckpoint lc = load_checkpoint(a.checkpoint);
  const CityCube raw = read_cube(a.cube);
  if (!(raw.grid() == lc.meta.grid))
    throw DataError("checkpoint and cube disagree on the grid layout");
  const GridSpec& grid = raw.grid();
  if (a.interval < grid.window || a.interval >= grid.intervals_per_day())
    throw DataError("target interval must lie in [" + std::to_string(grid.window) +
                    ", " + std::to_string(grid.intervals_per_day()) +
                    ") so a full window precedes it");

  const CityCube normalized = apply_normalization(raw, lc.meta.stats);
  const SampleWindow s{a.day, a.interval - grid.window, a.region};
  GapModel::SampleCache cache;
  double value;
  try {
    value = lc.model->forward(normalized, s, cache);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  if (a.denormalized) value = lc.meta.stats.denormalize(Channel::Gap, value);

  if (!a.dump_attention.empty()) {
    if (lc.model->kind() == ModelKind::GapLstm)
      throw ConfigError("the plain LSTM model has no attention maps to dump");
    fs::create_directories(a.dump_attention);
    dump_attention_maps(cache, grid, a.dump_attention, "");
  }

  char text[48];
  std::snprintf(text, sizeof text, "%.10g", value);
  std::cout << text << "\n";
  return 0;
}

struct GradCheckArgs {
  std::string config;
  std::string model = "all";
  double eps = 1e-5;
  double tolerance = 1e-4;
  int per_tensor = 200;
  int samples = 4;
};

int cmd_gradcheck(const GradCheckArgs& a) {
  const FileConfig cfg = config_or_default(a.config);
  if (cfg.synthetic.days < cfg.grid.history)
    throw ConfigError("gradcheck needs at least history_days of synthetic data");

  SyntheticData data = generate_synthetic(cfg.synthetic, cfg.grid);
  const NormalizationStats stats = compute_stats(data.cube, 0, data.cube.days());
  const CityCube normalized = apply_normalization(data.cube, stats);
  const GridSpec& grid = cfg.grid;

  std::vector<ModelKind> kinds;
  if (a.model == "all")
    kinds = {ModelKind::CurrentDay, ModelKind::MultiDay, ModelKind::GapLstm};
  else
    kinds = {model_kind_from_name(a.model)};

  std::mt19937_64 rng(cfg.train.seed);
  double overall = 0.0;
  for (ModelKind kind : kinds) {
    const int min_day = kind == ModelKind::MultiDay ? grid.history - 1 : 0;
    std::uniform_int_distribution<int> day_pick(min_day, data.cube.days() - 1);
    std::uniform_int_distribution<int> t0_pick(0, grid.intervals_per_day() - grid.window - 1);
    std::uniform_int_distribution<int> region_pick(0, grid.cells() - 1);
    std::vector<SampleWindow> batch;
    for (int i = 0; i < a.samples; ++i)
      batch.push_back({day_pick(rng), t0_pick(rng), region_pick(rng)});

    GapModel model(kind, grid, cfg.model);
    model.init(cfg.train.seed);
    // move off the relu corners that an all-zero bias init sits on
    perturb_params(model.params(), 0.05, cfg.train.seed + 17);
    const GradCheckReport report = model_gradient_check(
        model, normalized, batch, a.eps, static_cast<std::size_t>(a.per_tensor),
        cfg.train.seed + 1);
    char line[160];
    std::snprintf(line, sizeof line, "%s: max rel err %.3e over %zu tensors",
                  model_kind_name(kind), report.max_rel_error, report.groups.size());
    std::cout << line << "\n";
    for (const GradCheckGroup& g : report.groups)
      if (g.max_rel_error > a.tolerance) {
        std::snprintf(line, sizeof line, "  %-28s %.3e (%zu probes) <-- above tolerance",
                      g.tensor.c_str(), g.max_rel_error, g.checked);
        std::cout << line << "\n";
      }
    overall = std::max(overall, report.max_rel_error);
  }

  char verdict[112];
  if (overall <= a.tolerance) {
    std::snprintf(verdict, sizeof verdict,
                  "gradient check PASSED (max rel err %.3e <= %.1e)", overall,
                  a.tolerance);
    std::cout << verdict << "\n";
    return 0;
  }
  std::snprintf(verdict, sizeof verdict, "gradient check FAILED (max rel err %.3e > %.1e)",
                overall, a.tolerance);
  std::cout << verdict << "\n";
  throw NumericError("analytic gradients disagree with finite differences");
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"supply-demand gap forecasting toolkit"};
  app.require_subcommand(1);
  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "numeric backend: auto, scalar or avx2");

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic city cube");
  synth_cmd->add_option("--config", synth.config, "config file");
  synth_cmd->add_option("--out", synth.out, "output cube file")->required();
  synth_cmd->add_option("--labels", synth.labels, "write true cluster labels CSV");

  IngestArgs ingest;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "build a cube from event CSVs");
  ingest_cmd->add_option("--orders", ingest.orders, "orders CSV")->required();
  ingest_cmd->add_option("--trajectories", ingest.trajectories, "trajectories CSV")
      ->required();
  ingest_cmd->add_option("--weather", ingest.weather, "weather CSV")->required();
  ingest_cmd->add_option("--out", ingest.out, "output cube file")->required();
  ingest_cmd->add_option("--config", ingest.config, "config file (grid section)");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a forecasting model");
  train_cmd->add_option("--model", train.model, "arlp, advanced or lstm");
  train_cmd->add_option("--cube", train.cube, "input cube file")->required();
  train_cmd->add_option("--out", train.out, "output checkpoint file")->required();
  train_cmd->add_option("--config", train.config, "config file");
  train_cmd->add_option("--loss-log", train.loss_log, "write per-epoch loss CSV");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint plus baselines");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "trained checkpoint")->required();
  eval_cmd->add_option("--cube", eval.cube, "cube with test days")->required();
  eval_cmd->add_option("--out", eval.out_dir, "output directory")->required();
  eval_cmd->add_option("--ar-order", eval.ar_order, "autoregression baseline order");
  eval_cmd->add_flag("--ar-diff", eval.ar_diff, "difference the series before fitting");
  eval_cmd->add_flag("--normalized", eval.normalized, "also report normalized-unit rows");
  eval_cmd->add_option("--dump-attention", eval.dump_attention,
                        "write attention maps for the first test windows");
  eval_cmd->add_option("--loss-log", eval.loss_log, "training loss CSV to re-plot");
  eval_cmd->add_flag("--stamp", eval.stamp, "embed a generation timestamp in images");

  PredictArgs predict;
  CLI::App* predict_cmd = app.add_subcommand("predict", "forecast one cell/interval");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "trained checkpoint")
      ->required();
  predict_cmd->add_option("--cube", predict.cube, "cube file")->required();
  predict_cmd->add_option("--region", predict.region, "target cell id")->required();
  predict_cmd->add_option("--day", predict.day, "target day index")->required();
  predict_cmd->add_option("--interval", predict.interval, "target interval index")
      ->required();
  predict_cmd->add_flag("--denormalized", predict.denormalized,
                         "print the forecast in raw gap units");
  predict_cmd->add_option("--dump-attention", predict.dump_attention,
                           "write this window's attention maps");

  GradCheckArgs gradcheck;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck",
                                           "compare analytic and numeric gradients");
  grad_cmd->add_option("--config", gradcheck.config, "config file");
  grad_cmd->add_option("--model", gradcheck.model, "arlp, advanced, lstm or all");
  grad_cmd->add_option("--eps", gradcheck.eps, "finite difference step");
  grad_cmd->add_option("--tolerance", gradcheck.tolerance, "max relative error");
  grad_cmd->add_option("--per-tensor", gradcheck.per_tensor, "probes per tensor");
  grad_cmd->add_option("--samples", gradcheck.samples, "sample windows in the batch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    kernels::select(kernels);
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (ingest_cmd->parsed()) return cmd_ingest(ingest);
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (predict_cmd->parsed()) return cmd_predict(predict);
    if (grad_cmd->parsed()) return cmd_gradcheck(gradcheck);
    std::cerr << "no command given\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid request: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "out of range: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("arlp");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace arlp::cli
