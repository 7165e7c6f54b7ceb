// fetchrl: train, evaluate, compare and inspect fetch agents.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fetchrl/checkpoint.hpp"
#include "fetchrl/config.hpp"
#include "fetchrl/experiment.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fetchrl;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Raised for problems the user can fix by changing the invocation.
struct UsageError : Error {
  using Error::Error;
};

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

// Defaults, then the file, then overrides; validated.
ExperimentConfig load_config(const std::optional<fs::path>& path,
                             const std::vector<std::string>& overrides) {
  json doc = to_json(ExperimentConfig{});
  if (path) {
    if (!fs::exists(*path)) throw UsageError("config file not found: " + path->string());
    doc.merge_patch(read_config_file(*path));
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

PolicyMode parse_mode(const std::string& s) {
  auto m = policy_mode_from_string(s);
  if (!m) throw UsageError("--mode must be 'stochastic' or 'greedy', got '" + s + "'");
  return *m;
}

std::string fmt(const std::optional<double>& v, int precision = 2) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

void print_summary(const std::string& label, const SeedSummary& s) {
  std::printf("%-10s success %6.2f%%  reward %8.2f  navigation %7s  interaction %5s  (%d episodes)\n",
              label.c_str(), s.success_rate_pct, s.avg_cumulative_reward,
              fmt(s.navigation_efficiency_pct).c_str(), fmt(s.interaction_efficiency).c_str(),
              s.episode_count);
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string output;
  int log_every = 10;
};

int cmd_train(const TrainArgs& a) {
  ExperimentConfig cfg = load_config(fs::path(a.config), a.overrides);
  if (!a.output.empty()) cfg.output_dir = a.output;
  const fs::path run_dir = resolve_output_dir(cfg.output_dir);
  std::fprintf(stderr, "training %s agent, %zu seed(s), %lld steps each -> %s\n",
               std::string(to_string(cfg.mode)).c_str(), cfg.seeds.size(),
               static_cast<long long>(cfg.train.total_steps), run_dir.string().c_str());
  int updates = 0;
  run_experiment(cfg, run_dir, [&](std::uint64_t seed, const UpdateStats& s) {
    if (a.log_every > 0 && ++updates % a.log_every == 0) {
      std::fprintf(stderr, "seed %llu step %lld success %.1f%% reward %.2f entropy %.3f\n",
                   static_cast<unsigned long long>(seed), static_cast<long long>(s.step),
                   s.success_rate, s.mean_reward, s.entropy);
    }
  });
  for (const PolicyMode m : {PolicyMode::Stochastic, PolicyMode::Greedy}) {
    const auto seeds = load_seed_summaries(run_dir, m);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      print_summary(std::string(to_string(m)) + " " + std::to_string(cfg.seeds[i]), seeds[i]);
    }
  }
  return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string run_dir;
  std::string checkpoint;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<int> episodes;
  std::string mode = "stochastic";
  std::optional<std::uint64_t> seed;
};

int cmd_eval(const EvalArgs& a) {
  const PolicyMode mode = parse_mode(a.mode);
  if (a.episodes && *a.episodes < 1) throw UsageError("--episodes must be >= 1");

  if (!a.run_dir.empty()) {
    if (!a.checkpoint.empty()) throw UsageError("--run-dir and --checkpoint are exclusive");
    const RunEvaluation ev = evaluate_run(a.run_dir, mode, a.episodes);
    for (std::size_t i = 0; i < ev.seeds.size(); ++i) {
      print_summary("seed #" + std::to_string(i + 1), ev.seeds[i]);
    }
    std::cout << "aggregate: " << to_json(ev.aggregate).dump() << "\n";
    return 0;
  }

  if (a.checkpoint.empty()) throw UsageError("eval needs --run-dir or --checkpoint");
  if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
  ExperimentConfig cfg = load_config(a.config.empty() ? std::nullopt : std::optional<fs::path>(a.config),
                                     a.overrides);
  if (a.episodes) cfg.eval.episodes_per_scene = *a.episodes;
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const std::uint64_t seed = a.seed.value_or(cfg.seeds.front());
  const auto records = evaluate_checkpoint(ckpt.params, cfg, seed, mode);
  const SeedSummary s = summarize(records);
  const fs::path out = a.out.empty() ? fs::path(a.checkpoint).parent_path() : fs::path(a.out);
  const std::string suffix = std::string(to_string(mode));
  write_text(out / ("records_" + suffix + ".jsonl"), to_jsonl(records));
  write_text(out / ("summary_" + suffix + ".json"), to_json(s).dump(2) + "\n");
  print_summary(suffix, s);
  return 0;
}

// -------------------------------------------------------------- compare

struct CompareArgs {
  std::string enhanced;
  std::string baseline;
  std::string mode = "stochastic";
  std::string out;
};

int cmd_compare(const CompareArgs& a) {
  for (const auto& d : {a.enhanced, a.baseline}) {
    if (!fs::is_directory(d)) throw UsageError("run directory not found: " + d);
  }
  const RunComparison cmp = compare_runs(a.enhanced, a.baseline, parse_mode(a.mode));
  for (const auto& w : cmp.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::cout << cmp.report.to_text();
  const fs::path out = a.out.empty() ? fs::path(a.enhanced) / "comparison.json" : fs::path(a.out);
  json j = cmp.report.to_json();
  j["enhanced_run"] = a.enhanced;
  j["baseline_run"] = a.baseline;
  j["policy_mode"] = a.mode;
  write_text(out, j.dump(2) + "\n");
  std::fprintf(stderr, "report written to %s\n", out.string().c_str());
  return 0;
}

// -------------------------------------------------------------- inspect

int inspect_scene(const std::string& target) {
  SceneAsset asset;
  int id = 0;
  const auto [ptr, ec] = std::from_chars(target.data(), target.data() + target.size(), id);
  if (ec == std::errc() && ptr == target.data() + target.size()) {
    if (!SceneLibrary::shipped().contains(id)) throw UsageError("no shipped scene with id " + target);
    asset = SceneLibrary::shipped().get(id);
  } else {
    asset = load_scene(read_text(target));
  }
  std::cout << render_scene(asset);
  return 0;
}

int inspect_schema(const std::string& mode_name, const std::string& config) {
  const ExperimentConfig cfg =
      load_config(config.empty() ? std::nullopt : std::optional<fs::path>(config), {});
  ObservationMode mode = cfg.mode;
  if (mode_name == "baseline") {
    mode = ObservationMode::Baseline;
  } else if (mode_name == "enhanced") {
    mode = ObservationMode::Enhanced;
  } else if (!mode_name.empty()) {
    throw UsageError("--mode must be 'baseline' or 'enhanced'");
  }
  std::cout << observation_schema(cfg.perception, mode);
  return 0;
}

int inspect_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  const Checkpoint ckpt = load_checkpoint(path);
  const NetworkSpec& spec = ckpt.params.spec();
  std::cout << "format version: " << ckpt.version << "\n"
            << "network: " << describe(spec) << "\n"
            << "parameters: " << ckpt.params.size() << " (spec closed form "
            << spec.parameter_count() << ")\n"
            << "optimizer state: "
            << (ckpt.optimizer ? "yes, step " + std::to_string(ckpt.optimizer->step) : "no") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fetch agents on simulated perception: train, evaluate, compare and inspect."};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train one agent per configured seed");
  train->add_option("-c,--config", train_args.config, "Experiment config (JSON, comments allowed)")
      ->required();
  train->add_option("-o,--override", train_args.overrides,
                    "path=value, e.g. train.total_steps=4096 or total_steps=4096");
  train->add_option("--output", train_args.output, "Run directory (replaces output_dir)");
  train->add_option("--log-every", train_args.log_every, "Progress line every N updates; 0 is silent");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a run directory or a single checkpoint");
  eval->add_option("--run-dir", eval_args.run_dir, "Run directory written by train");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Single checkpoint file");
  eval->add_option("-c,--config", eval_args.config, "Config for --checkpoint");
  eval->add_option("-o,--override", eval_args.overrides, "Config override for --checkpoint");
  eval->add_option("--out", eval_args.out, "Output directory for --checkpoint");
  eval->add_option("--episodes", eval_args.episodes, "Episodes per scene");
  eval->add_option("--mode", eval_args.mode, "stochastic or greedy");
  eval->add_option("--seed", eval_args.seed, "Episode-set seed for --checkpoint");

  CompareArgs cmp_args;
  auto* compare = app.add_subcommand("compare", "Table of enhanced vs baseline run metrics");
  compare->add_option("enhanced", cmp_args.enhanced, "Enhanced run directory")->required();
  compare->add_option("baseline", cmp_args.baseline, "Baseline run directory")->required();
  compare->add_option("--mode", cmp_args.mode, "stochastic or greedy summaries");
  compare->add_option("--out", cmp_args.out, "Report path (default <enhanced>/comparison.json)");

  auto* inspect = app.add_subcommand("inspect", "Show a scene, the observation schema or a checkpoint");
  inspect->require_subcommand(1);
  std::string scene_target;
  auto* i_scene = inspect->add_subcommand("scene", "ASCII render with object legend");
  i_scene->add_option("target", scene_target, "Scene file or shipped scene id")->required();
  std::string schema_mode, schema_config;
  auto* i_schema = inspect->add_subcommand("schema", "Observation channel map");
  i_schema->add_option("--mode", schema_mode, "baseline or enhanced (default from config)");
  i_schema->add_option("-c,--config", schema_config, "Experiment config");
  std::string ckpt_path;
  auto* i_ckpt = inspect->add_subcommand("checkpoint", "Network spec and parameter count");
  i_ckpt->add_option("path", ckpt_path, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_args);
    if (*compare) return cmd_compare(cmp_args);
    if (*i_scene) return inspect_scene(scene_target);
    if (*i_schema) return inspect_schema(schema_mode, schema_config);
    if (*i_ckpt) return inspect_checkpoint(ckpt_path);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const SceneParseError& e) {
    std::fprintf(stderr, "scene error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
