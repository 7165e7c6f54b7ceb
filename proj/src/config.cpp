#include "fetchrl/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fetchrl {

namespace {

using json = nlohmann::json;

// Reads typed fields out of one JSON object and rejects anything it did not
// consume.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type (got " + obj_.at(key).dump() + ")");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, _] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError(field(k) + ": unknown field");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string mode_name(ObservationMode m) { return std::string(to_string(m)); }

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds: must not be empty");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw ConfigError("seeds: duplicate seed");
  if (episode.scenes.empty()) throw ConfigError("episode.scenes: must not be empty");
  if (episode.max_steps < 1) throw ConfigError("episode.max_steps: must be >= 1");
  for (int c : episode.target_classes) {
    if (c < 0 || c >= kNumClasses) throw ConfigError("episode.target_classes: bad class id");
  }
  perception.validate();
  reward.validate();
  train.validate();
  if (eval.episodes_per_scene < 1) throw ConfigError("eval.episodes_per_scene: must be >= 1");
  try {
    TrainSetup s = train_setup(seeds.front());
    network_for(s);
  } catch (const ShapeMismatch& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
}

TrainSetup ExperimentConfig::train_setup(std::uint64_t seed) const {
  TrainSetup s;
  s.train = train;
  s.train.seed = seed;
  s.env = env_config();
  s.network = network;
  s.mode = mode;
  s.eval_policy = eval.policy_mode;
  return s;
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig cfg;
  Section top(doc, "");

  std::string mode = mode_name(cfg.mode);
  top.get("mode", mode);
  if (mode == "baseline") {
    cfg.mode = ObservationMode::Baseline;
  } else if (mode == "enhanced") {
    cfg.mode = ObservationMode::Enhanced;
  } else {
    throw ConfigError("mode: expected 'baseline' or 'enhanced', got '" + mode + "'");
  }
  top.get("output_dir", cfg.output_dir);
  top.get("seeds", cfg.seeds);

  if (const json* j = top.child("episode")) {
    Section s(*j, "episode");
    s.get("scenes", cfg.episode.scenes);
    s.get("max_steps", cfg.episode.max_steps);
    s.get("target_classes", cfg.episode.target_classes);
    std::string start = cfg.episode.start == StartMode::Asset ? "asset" : "random";
    s.get("start", start);
    if (start == "asset") {
      cfg.episode.start = StartMode::Asset;
    } else if (start == "random") {
      cfg.episode.start = StartMode::Random;
    } else {
      throw ConfigError("episode.start: expected 'random' or 'asset'");
    }
    s.finish();
  }
  if (const json* j = top.child("perception")) {
    Section s(*j, "perception");
    s.get("window_radius", cfg.perception.window_radius);
    s.get("p_detect", cfg.perception.p_detect);
    s.get("p_misclass", cfg.perception.p_misclass);
    s.get("p_mask_dropout", cfg.perception.p_mask_dropout);
    s.get("p_false_positive", cfg.perception.p_false_positive);
    s.finish();
  }
  if (const json* j = top.child("reward")) {
    Section s(*j, "reward");
    s.get("alpha", cfg.reward.alpha);
    s.get("beta", cfg.reward.beta);
    s.get("gamma_pen", cfg.reward.gamma_pen);
    s.finish();
  }
  if (const json* j = top.child("network")) {
    Section s(*j, "network");
    s.get("hidden_units", cfg.network.hidden_units);
    if (const json* layers = s.child("conv_layers")) {
      if (!layers->is_array()) throw ConfigError("network.conv_layers: expected an array");
      cfg.network.conv_layers.clear();
      for (std::size_t i = 0; i < layers->size(); ++i) {
        Section l(layers->at(i), "network.conv_layers[" + std::to_string(i) + "]");
        ConvLayerSpec spec;
        l.get("out_channels", spec.out_channels);
        l.get("kernel", spec.kernel);
        l.get("stride", spec.stride);
        l.finish();
        cfg.network.conv_layers.push_back(spec);
      }
    }
    s.finish();
  }
  if (const json* j = top.child("train")) {
    Section s(*j, "train");
    TrainConfig& t = cfg.train;
    s.get("learning_rate", t.learning_rate);
    s.get("gamma_discount", t.gamma_discount);
    s.get("gae_lambda", t.gae_lambda);
    s.get("clip_epsilon", t.clip_epsilon);
    s.get("minibatch_size", t.minibatch_size);
    s.get("epochs_per_update", t.epochs_per_update);
    s.get("rollout_horizon", t.rollout_horizon);
    s.get("num_envs", t.num_envs);
    s.get("total_steps", t.total_steps);
    s.get("value_coef", t.value_coef);
    s.get("entropy_coef", t.entropy_coef);
    s.get("max_grad_norm", t.max_grad_norm);
    s.get("normalize_advantages", t.normalize_advantages);
    s.get("eval_interval", t.eval_interval);
    s.get("eval_episodes_per_scene", t.eval_episodes_per_scene);
    s.get("early_stop_patience", t.early_stop_patience);
    s.get("early_stop_min_delta", t.early_stop_min_delta);
    s.finish();
  }
  if (const json* j = top.child("eval")) {
    Section s(*j, "eval");
    s.get("episodes_per_scene", cfg.eval.episodes_per_scene);
    std::string pm(to_string(cfg.eval.policy_mode));
    s.get("policy_mode", pm);
    auto parsed = policy_mode_from_string(pm);
    if (!parsed) throw ConfigError("eval.policy_mode: expected 'stochastic' or 'greedy'");
    cfg.eval.policy_mode = *parsed;
    s.finish();
  }
  top.finish();
  cfg.eval.scenes = cfg.episode.scenes;
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json layers = json::array();
  for (const auto& l : cfg.network.conv_layers) {
    layers.push_back({{"out_channels", l.out_channels}, {"kernel", l.kernel}, {"stride", l.stride}});
  }
  const TrainConfig& t = cfg.train;
  return {
      {"mode", mode_name(cfg.mode)},
      {"output_dir", cfg.output_dir},
      {"seeds", cfg.seeds},
      {"episode",
       {{"scenes", cfg.episode.scenes},
        {"max_steps", cfg.episode.max_steps},
        {"target_classes", cfg.episode.target_classes},
        {"start", cfg.episode.start == StartMode::Asset ? "asset" : "random"}}},
      {"perception",
       {{"window_radius", cfg.perception.window_radius},
        {"p_detect", cfg.perception.p_detect},
        {"p_misclass", cfg.perception.p_misclass},
        {"p_mask_dropout", cfg.perception.p_mask_dropout},
        {"p_false_positive", cfg.perception.p_false_positive}}},
      {"reward",
       {{"alpha", cfg.reward.alpha}, {"beta", cfg.reward.beta}, {"gamma_pen", cfg.reward.gamma_pen}}},
      {"network", {{"conv_layers", layers}, {"hidden_units", cfg.network.hidden_units}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"gamma_discount", t.gamma_discount},
        {"gae_lambda", t.gae_lambda},
        {"clip_epsilon", t.clip_epsilon},
        {"minibatch_size", t.minibatch_size},
        {"epochs_per_update", t.epochs_per_update},
        {"rollout_horizon", t.rollout_horizon},
        {"num_envs", t.num_envs},
        {"total_steps", t.total_steps},
        {"value_coef", t.value_coef},
        {"entropy_coef", t.entropy_coef},
        {"max_grad_norm", t.max_grad_norm},
        {"normalize_advantages", t.normalize_advantages},
        {"eval_interval", t.eval_interval},
        {"eval_episodes_per_scene", t.eval_episodes_per_scene},
        {"early_stop_patience", t.early_stop_patience},
        {"early_stop_min_delta", t.early_stop_min_delta}}},
      {"eval",
       {{"episodes_per_scene", cfg.eval.episodes_per_scene},
        {"policy_mode", std::string(to_string(cfg.eval.policy_mode))}}},
  };
}

json parse_config_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

void find_leaf(const json& node, const std::string& key, const std::string& prefix,
               std::vector<std::string>& hits) {
  if (!node.is_object()) return;
  for (const auto& [k, v] : node.items()) {
    const std::string path = prefix.empty() ? k : prefix + "." + k;
    if (k == key) hits.push_back(path);
    find_leaf(v, key, path, hits);
  }
}

}  // namespace

void apply_override(json& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "': expected path=value");
  }
  std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }

  if (path.find('.') == std::string::npos && !doc.contains(path)) {
    // Bare leaf name: resolve against the defaults-complete document.
    std::vector<std::string> hits;
    find_leaf(doc, path, "", hits);
    if (hits.size() > 1) {
      throw ConfigError("override '" + path + "' is ambiguous; use a dotted path");
    }
    if (hits.size() == 1) path = hits.front();
  }

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + path + "': empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) throw ConfigError("override '" + path + "': '" + key + "' is not a section");
    start = dot + 1;
  }
}

std::string config_hash(const json& doc) {
  const std::string s = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fetchrl
