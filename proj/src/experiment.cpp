#include "fetchrl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fetchrl/checkpoint.hpp"

namespace fetchrl {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr PolicyMode kBothModes[] = {PolicyMode::Stochastic, PolicyMode::Greedy};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
  if (!os) throw Error("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string summary_name(PolicyMode mode) {
  return "summary_" + std::string(to_string(mode)) + ".json";
}

std::string records_name(PolicyMode mode) {
  return "records_" + std::string(to_string(mode)) + ".jsonl";
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SeedSummary evaluate_into(const fs::path& dir, const PolicyParams& params,
                          const ExperimentConfig& cfg, std::uint64_t seed, PolicyMode mode) {
  const auto records = evaluate_checkpoint(params, cfg, seed, mode);
  write_text(dir / records_name(mode), to_jsonl(records));
  const SeedSummary s = summarize(records);
  write_text(dir / summary_name(mode), to_json(s).dump(2) + "\n");
  return s;
}

}  // namespace

fs::path resolve_output_dir(const std::string& output_dir) {
  fs::path p(output_dir);
  const char* root = std::getenv(kOutputRootEnv);
  if (root != nullptr && *root != '\0' && p.is_relative()) return fs::path(root) / p;
  return p;
}

fs::path seed_dir(const fs::path& run_dir, std::uint64_t seed) {
  return run_dir / ("seed_" + std::to_string(seed));
}

std::uint64_t eval_seed_for(std::uint64_t train_seed) {
  return derive_seed(train_seed, 0xe7a1);
}

std::vector<EpisodeRecord> evaluate_checkpoint(const PolicyParams& params,
                                               const ExperimentConfig& cfg,
                                               std::uint64_t train_seed, PolicyMode mode) {
  EvalConfig ec = cfg.eval;
  ec.scenes = cfg.episode.scenes;
  ec.seed = eval_seed_for(train_seed);
  ec.policy_mode = mode;
  return run_evaluation(params, SceneLibrary::shipped(), cfg.env_config(), cfg.mode, ec);
}

fs::path run_experiment(const ExperimentConfig& cfg, const fs::path& run_dir,
                        const ProgressFn& progress) {
  cfg.validate();
  fs::create_directories(run_dir);
  const json doc = to_json(cfg);
  write_text(run_dir / "config.json", doc.dump(2) + "\n");

  json manifest = {
      {"version", kVersion},
      {"config_hash", config_hash(doc)},
      {"mode", std::string(to_string(cfg.mode))},
      {"seeds", cfg.seeds},
      {"started_at", utc_now()},
      {"config", doc},
  };
  const auto write_manifest = [&] { write_text(run_dir / "manifest.json", manifest.dump(2) + "\n"); };
  write_manifest();

  const SceneLibrary library = SceneLibrary::shipped();
  const auto t0 = std::chrono::steady_clock::now();
  json seed_times = json::object();
  std::vector<SeedSummary> per_mode[2];
  for (std::uint64_t seed : cfg.seeds) {
    const auto ts = std::chrono::steady_clock::now();
    const fs::path dir = seed_dir(run_dir, seed);
    std::function<void(const UpdateStats&)> cb;
    if (progress) cb = [&](const UpdateStats& s) { progress(seed, s); };
    const TrainResult result = train(cfg.train_setup(seed), library, dir, cb);
    for (int m = 0; m < 2; ++m) {
      per_mode[m].push_back(evaluate_into(dir, result.params, cfg, seed, kBothModes[m]));
    }
    seed_times[std::to_string(seed)] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
    manifest["seed_wall_time_s"] = seed_times;
    write_manifest();
  }
  for (int m = 0; m < 2; ++m) {
    write_text(run_dir / summary_name(kBothModes[m]),
               to_json(aggregate_seeds(per_mode[m])).dump(2) + "\n");
  }
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["finished_at"] = utc_now();
  write_manifest();
  return run_dir;
}

ExperimentConfig load_run_config(const fs::path& run_dir) {
  const fs::path path = run_dir / "config.json";
  if (!fs::exists(path)) throw ConfigError("not a run directory (no config.json): " + run_dir.string());
  return config_from_json(read_config_file(path));
}

RunEvaluation evaluate_run(const fs::path& run_dir, PolicyMode mode,
                           std::optional<int> episodes_per_scene) {
  ExperimentConfig cfg = load_run_config(run_dir);
  if (episodes_per_scene) cfg.eval.episodes_per_scene = *episodes_per_scene;
  cfg.validate();
  RunEvaluation out;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = seed_dir(run_dir, seed);
    const Checkpoint ckpt = load_checkpoint(dir / "checkpoint.bin");
    out.seeds.push_back(evaluate_into(dir, ckpt.params, cfg, seed, mode));
  }
  out.aggregate = aggregate_seeds(out.seeds);
  write_text(run_dir / summary_name(mode), to_json(out.aggregate).dump(2) + "\n");
  return out;
}

std::vector<SeedSummary> load_seed_summaries(const fs::path& run_dir, PolicyMode mode) {
  if (!fs::is_directory(run_dir)) throw ConfigError("no such run directory: " + run_dir.string());
  std::vector<std::pair<std::uint64_t, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("seed_", 0) != 0) continue;
    const fs::path summary = entry.path() / summary_name(mode);
    if (!fs::exists(summary)) continue;
    found.emplace_back(std::stoull(name.substr(5)), summary);
  }
  std::sort(found.begin(), found.end());
  std::vector<SeedSummary> out;
  for (const auto& [seed, path] : found) out.push_back(seed_summary_from_json(read_json(path)));
  return out;
}

RunComparison compare_runs(const fs::path& enhanced_dir, const fs::path& baseline_dir,
                           PolicyMode mode) {
  const auto a = load_seed_summaries(enhanced_dir, mode);
  const auto b = load_seed_summaries(baseline_dir, mode);
  RunComparison out;
  for (const auto& [dir, n] : {std::pair{enhanced_dir, a.size()}, std::pair{baseline_dir, b.size()}}) {
    if (n == 0) throw Error("no " + summary_name(mode) + " under " + dir.string());
  }
  if (a.size() != b.size()) {
    std::ostringstream w;
    w << "seed count differs (" << a.size() << " vs " << b.size()
      << "); comparing the available seeds";
    out.warnings.push_back(w.str());
  }
  out.report = compare_report(aggregate_seeds(a), aggregate_seeds(b));
  return out;
}

}  // namespace fetchrl
