#include "hystdyn/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hystdyn/baseline.hpp"
#include "hystdyn/checkpoint.hpp"
#include "hystdyn/error.hpp"
#include "hystdyn/evaluation.hpp"
#include "hystdyn/plant.hpp"
#include "hystdyn/training.hpp"

namespace hystdyn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// --seed wins over HYSTDYN_SEED, which wins over the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HYSTDYN_SEED"); env && *env) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("HYSTDYN_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return fallback;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension();
  return p.string() + suffix;
}

void write_manifest(const fs::path& path, const std::string& command,
                    const std::vector<std::string>& argv, json details) {
  json m = {{"command", command},
            {"argv", argv},
            {"tool_version", kToolVersion},
            {"timestamp", utc_timestamp()}};
  for (auto& [k, v] : details.items()) m[k] = v;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << m.dump(2) << '\n';
}

TimeSeries load_series(const fs::path& path, double dt) {
  return resample(load_csv(path), dt);
}

json train_config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},                 {"epsilon", c.epsilon},
          {"weight_decay_l2", c.weight_decay_l2}, {"epochs", c.epochs},
          {"batch_size_steps", c.batch_size_steps}, {"bptt_length", c.bptt_length},
          {"seed", c.seed},                   {"train_fraction", c.train_fraction},
          {"hidden_size", c.hidden_size},     {"dense_width", c.dense_width},
          {"forget_bias_one", c.forget_bias_one}};
}

json plant_config_json(const plant::PlantConfig& c) {
  const auto& p = c.params;
  return {{"V", p.supply_v},
          {"R", p.resistance_ohm},
          {"C_th", p.heat_capacity},
          {"h_c", p.convection},
          {"T_amb", p.ambient_c},
          {"A_s", p.austenite_start},
          {"A_f", p.austenite_finish},
          {"M_s", p.martensite_start},
          {"M_f", p.martensite_finish},
          {"kappa", p.torque_gain},
          {"k_el", p.elastic},
          {"tau_m", p.time_constant_s},
          {"dt", p.dt},
          {"pi",
           {{"K_P", c.pi.kp},
            {"K_I", c.pi.ki},
            {"hold_min_s", c.pi.hold_min_s},
            {"hold_max_s", c.pi.hold_max_s},
            {"setpoint_uni", {c.pi.setpoint_uni_min, c.pi.setpoint_uni_max}},
            {"setpoint_bi", {c.pi.setpoint_bi_min, c.pi.setpoint_bi_max}}}},
          {"noise",
           {{"enabled", c.noise.enabled},
            {"sigma_temp_c", c.noise.sigma_temp_c},
            {"sigma_theta_deg", c.noise.sigma_theta_deg}}}};
}

TimeSeries select_split(const TimeSeries& series, const std::string& split, double train_fraction) {
  if (split == "all") return series;
  if (split == "val") {
    const std::size_t n_train = split_index(series.size(), train_fraction);
    return series.slice(n_train, series.size());
  }
  throw ConfigError("--split must be 'val' or 'all'");
}

EvalReport evaluate(StepPredictor& model, const TimeSeries& series, EvalMode mode, double t0_s,
                    bool t0_given, std::optional<int> expected_k) {
  EvalOptions opts;
  opts.expected_k = expected_k;
  if (mode == EvalMode::OneStep) {
    if (t0_given) std::cerr << "warning: --t0 is ignored in one-step mode\n";
    return one_step_eval(model, series, opts);
  }
  return rollout(model, series, rollout_start_index(series, t0_s), opts);
}

void write_report(const EvalReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  save_report_json(report, dir / "report.json");
  save_trajectory_csv(report, dir / "trajectory.csv");
}

// ------------------------------------------------------------------ commands

struct BabbleArgs {
  std::string config, mode = "bi", out;
  double duration = 1800.0;
  std::optional<std::uint64_t> seed;
};

int cmd_babble(const BabbleArgs& a, const std::vector<std::string>& argv) {
  plant::PlantConfig cfg;
  if (!a.config.empty()) cfg = plant::load_plant_config(a.config);
  plant::BabbleMode mode;
  if (a.mode == "uni") mode = plant::BabbleMode::Unidirectional;
  else if (a.mode == "bi") mode = plant::BabbleMode::Bidirectional;
  else throw ConfigError("--mode must be 'uni' or 'bi'");
  const std::uint64_t seed = resolve_seed(a.seed, 1);

  const auto result = plant::babble(cfg, mode, a.duration, seed);
  save_csv(result.series, a.out);
  json schedule = json::array();
  for (const auto& s : result.schedule) {
    schedule.push_back({{"t_start", s.t_start}, {"hold_s", s.hold_s}, {"setpoint_deg", s.setpoint_deg}});
  }
  write_manifest(sibling(a.out, ".manifest.json"), "babble", argv,
                 {{"seed", seed},
                  {"mode", a.mode},
                  {"duration_s", a.duration},
                  {"config_path", a.config},
                  {"plant_config", plant_config_json(cfg)},
                  {"outputs", {a.out}},
                  {"setpoint_schedule", schedule}});
  std::cerr << "wrote " << result.series.size() << " samples to " << a.out << '\n';
  return kOk;
}

struct TrainArgs {
  std::string data, config, out;
  int k = 4;
  double dt = kDefaultDt;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::size_t> hidden;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = load_train_config(a.config);
  cfg.seed = resolve_seed(a.seed, cfg.seed);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.hidden) cfg.hidden_size = *a.hidden;
  cfg.validate();
  const InputConfig input(a.k);

  const RawRecord raw = load_csv(a.data);
  if (input.uses_actuator_b() && raw.unidirectional) {
    throw ConfigError("k=" + std::to_string(a.k) + " needs u_b and temp_b_c columns, missing from " +
                      a.data);
  }
  const TimeSeries series = resample(raw, a.dt);

  TrainResult result = train(series, cfg, input, [](const EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << "  train_mse " << e.train_mse << "  val_mse " << e.val_mse
              << "  val_rmse " << e.val_rmse_deg << " deg\n";
  });
  save_checkpoint(result.model, a.out);
  const fs::path history = sibling(a.out, ".history.csv");
  const fs::path best = sibling(a.out, ".best.json");
  save_history_csv(result.history, history);
  save_checkpoint(result.best_model, best);
  write_manifest(sibling(a.out, ".manifest.json"), "train", argv,
                 {{"seed", cfg.seed},
                  {"k", a.k},
                  {"dt", a.dt},
                  {"data", a.data},
                  {"config_path", a.config},
                  {"train_config", train_config_json(cfg)},
                  {"best_epoch", result.best_epoch},
                  {"outputs", {a.out, history.string(), best.string()}}});
  return kOk;
}

struct EvalArgs {
  std::string model, data, mode = "rollout", out, split = "val", label;
  double t0 = 15.0;
  double dt = kDefaultDt;
  std::optional<int> k;
};

int cmd_eval(const EvalArgs& a, bool t0_given, const std::vector<std::string>& argv) {
  const AnyModel model = load_checkpoint(a.model);
  const ModelMeta& meta = meta_of(model);
  const TimeSeries series = select_split(load_series(a.data, a.dt), a.split, meta.train_fraction);
  auto predictor = make_predictor(model);
  EvalReport report =
      evaluate(*predictor, series, eval_mode_from_string(a.mode), a.t0, t0_given, a.k);
  report.label = a.label;
  write_report(report, a.out);
  write_manifest(fs::path(a.out) / "manifest.json", "eval", argv,
                 {{"model", a.model},
                  {"data", a.data},
                  {"mode", a.mode},
                  {"t0_s", a.t0},
                  {"split", a.split},
                  {"dt", a.dt},
                  {"seed", meta.rng_seed},
                  {"outputs", {(fs::path(a.out) / "report.json").string(),
                               (fs::path(a.out) / "trajectory.csv").string()}}});
  std::cerr << to_string(report.mode) << " k=" << report.k << " rmse " << report.rmse_deg
            << " deg over " << report.trajectory.size() << " steps\n";
  return kOk;
}

struct BaselineArgs {
  std::string data, mode = "rollout", out, split = "val", label;
  int k = 4;
  double t0 = 15.0;
  double dt = kDefaultDt;
  double train_fraction = 0.67;
};

int cmd_baseline(const BaselineArgs& a, bool t0_given, const std::vector<std::string>& argv) {
  const InputConfig input(a.k);
  const RawRecord raw = load_csv(a.data);
  if (input.uses_actuator_b() && raw.unidirectional) {
    throw ConfigError("k=" + std::to_string(a.k) + " needs u_b and temp_b_c columns, missing from " +
                      a.data);
  }
  const TimeSeries series = resample(raw, a.dt);
  const LinearModel model = fit_baseline(series, input, a.train_fraction);
  if (model.rank_deficient) std::cerr << "warning: rank-deficient design matrix, ridge fallback used\n";
  LinearPredictor predictor(model);
  const TimeSeries eval_series = select_split(series, a.split, a.train_fraction);
  EvalReport report =
      evaluate(predictor, eval_series, eval_mode_from_string(a.mode), a.t0, t0_given, std::nullopt);
  report.label = a.label;
  write_report(report, a.out);
  save_checkpoint(model, fs::path(a.out) / "model_linear.json");
  write_manifest(fs::path(a.out) / "manifest.json", "baseline", argv,
                 {{"data", a.data},
                  {"k", a.k},
                  {"mode", a.mode},
                  {"t0_s", a.t0},
                  {"split", a.split},
                  {"dt", a.dt},
                  {"train_fraction", a.train_fraction},
                  {"rank_deficient", model.rank_deficient},
                  {"outputs", {(fs::path(a.out) / "report.json").string(),
                               (fs::path(a.out) / "trajectory.csv").string(),
                               (fs::path(a.out) / "model_linear.json").string()}}});
  std::cerr << "least squares " << to_string(report.mode) << " k=" << report.k << " rmse "
            << report.rmse_deg << " deg\n";
  return kOk;
}

struct CompareArgs {
  std::vector<std::string> reports;
  std::string out;
};

int cmd_compare(const CompareArgs& a, const std::vector<std::string>& argv) {
  if (a.reports.size() < 2) throw ConfigError("compare needs at least 2 reports");
  std::vector<EvalReport> rows;
  for (const auto& r : a.reports) rows.push_back(load_report_json(r));
  std::stable_sort(rows.begin(), rows.end(),
                   [](const EvalReport& x, const EvalReport& y) { return x.rmse_deg < y.rmse_deg; });
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw DataError("cannot write " + a.out);
  out << "test_case,model_type,mode,k,rmse_deg\n";
  for (const auto& r : rows) {
    const std::string name = r.label.empty() ? r.model_type + " k=" + std::to_string(r.k) + " " +
                                                   to_string(r.mode)
                                             : r.label;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", r.rmse_deg);
    out << name << ',' << r.model_type << ',' << to_string(r.mode) << ',' << r.k << ',' << buf
        << '\n';
  }
  write_manifest(sibling(a.out, ".manifest.json"), "compare", argv,
                 {{"reports", a.reports}, {"outputs", {a.out}}});
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Learned hysteretic dynamics for SMA-actuated soft limbs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  BabbleArgs babble_args;
  auto* babble = app.add_subcommand("babble", "simulate PI motor babbling on the synthetic limb");
  babble->add_option("--config", babble_args.config, "plant config JSON");
  babble->add_option("--mode", babble_args.mode, "uni | bi")->check(CLI::IsMember({"uni", "bi"}));
  babble->add_option("--duration", babble_args.duration, "seconds")->check(CLI::PositiveNumber);
  babble->add_option("--seed", babble_args.seed, "RNG seed (overrides HYSTDYN_SEED)");
  babble->add_option("--out", babble_args.out, "output CSV")->required();

  TrainArgs train_args;
  auto* trainc = app.add_subcommand("train", "train the LSTM predictor");
  trainc->add_option("--data", train_args.data, "input CSV")->required();
  trainc->add_option("--k", train_args.k, "input space 1..4")->check(CLI::Range(1, 4));
  trainc->add_option("--config", train_args.config, "train config JSON");
  trainc->add_option("--out", train_args.out, "checkpoint path")->required();
  trainc->add_option("--dt", train_args.dt, "resampling period (s)")->check(CLI::PositiveNumber);
  trainc->add_option("--seed", train_args.seed, "RNG seed (overrides config and HYSTDYN_SEED)");
  trainc->add_option("--epochs", train_args.epochs, "override epochs");
  trainc->add_option("--hidden", train_args.hidden, "override LSTM hidden size");

  EvalArgs eval_args;
  auto* evalc = app.add_subcommand("eval", "one-step or rollout evaluation of a checkpoint");
  evalc->add_option("--model", eval_args.model, "checkpoint JSON")->required();
  evalc->add_option("--data", eval_args.data, "input CSV")->required();
  evalc->add_option("--mode", eval_args.mode, "onestep | rollout")
      ->check(CLI::IsMember({"onestep", "one_step", "rollout"}));
  auto* eval_t0 = evalc->add_option("--t0", eval_args.t0, "rollout start (s into the evaluated split)");
  evalc->add_option("--out", eval_args.out, "report directory")->required();
  evalc->add_option("--split", eval_args.split, "val | all")->check(CLI::IsMember({"val", "all"}));
  evalc->add_option("--dt", eval_args.dt, "resampling period (s)")->check(CLI::PositiveNumber);
  evalc->add_option("--k", eval_args.k, "expected input space; mismatch is an error");
  evalc->add_option("--label", eval_args.label, "test-case label for compare");

  BaselineArgs base_args;
  auto* basec = app.add_subcommand("baseline", "least-squares reference predictor");
  basec->add_option("--data", base_args.data, "input CSV")->required();
  basec->add_option("--k", base_args.k, "input space 1..4")->check(CLI::Range(1, 4));
  basec->add_option("--mode", base_args.mode, "onestep | rollout")
      ->check(CLI::IsMember({"onestep", "one_step", "rollout"}));
  auto* base_t0 = basec->add_option("--t0", base_args.t0, "rollout start (s into the evaluated split)");
  basec->add_option("--out", base_args.out, "report directory")->required();
  basec->add_option("--split", base_args.split, "val | all")->check(CLI::IsMember({"val", "all"}));
  basec->add_option("--dt", base_args.dt, "resampling period (s)")->check(CLI::PositiveNumber);
  basec->add_option("--train-fraction", base_args.train_fraction, "chronological split");
  basec->add_option("--label", base_args.label, "test-case label for compare");

  CompareArgs cmp_args;
  auto* cmpc = app.add_subcommand("compare", "tabulate RMSE from several reports");
  cmpc->add_option("--reports", cmp_args.reports, "report.json files")->required();
  cmpc->add_option("--out", cmp_args.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*babble) return cmd_babble(babble_args, args);
    if (*trainc) return cmd_train(train_args, args);
    if (*evalc) return cmd_eval(eval_args, eval_t0->count() > 0, args);
    if (*basec) return cmd_baseline(base_args, base_t0->count() > 0, args);
    if (*cmpc) return cmd_compare(cmp_args, args);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace hystdyn::cli
