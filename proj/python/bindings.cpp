#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fetchrl/checkpoint.hpp"
#include "fetchrl/config.hpp"
#include "fetchrl/experiment.hpp"

namespace py = pybind11;
using namespace fetchrl;

namespace {

ObservationMode parse_mode(const std::string& s) {
  if (s == "enhanced") return ObservationMode::Enhanced;
  if (s == "baseline") return ObservationMode::Baseline;
  throw ConfigError("mode must be 'enhanced' or 'baseline', got '" + s + "'");
}

ExperimentConfig config_from_string(const std::string& text) {
  nlohmann::json doc = to_json(ExperimentConfig{});
  if (!text.empty()) doc.merge_patch(parse_config_text(text));
  ExperimentConfig cfg = config_from_json(doc);
  cfg.validate();
  return cfg;
}

py::array_t<double> features_array(const FeatureTensor& f) {
  py::array_t<double> out({f.channels(), f.window(), f.window()});
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

py::dict record_dict(const EpisodeRecord& r) {
  py::dict d;
  const nlohmann::json j = to_json(r);
  for (const auto& [k, v] : j.items()) {
    if (v.is_boolean()) {
      d[py::str(k)] = v.get<bool>();
    } else if (v.is_number_float()) {
      d[py::str(k)] = v.get<double>();
    } else if (v.is_number_unsigned()) {
      d[py::str(k)] = v.get<std::uint64_t>();
    } else if (v.is_number_integer()) {
      d[py::str(k)] = v.get<std::int64_t>();
    } else {
      d[py::str(k)] = v.get<std::string>();
    }
  }
  return d;
}

// Auto-resetting environment over the configured scenes.
class PyEnv {
 public:
  PyEnv(const std::string& mode, std::uint64_t seed, const std::string& config)
      : cfg_(config_from_string(config)),
        library_(SceneLibrary::shipped()),
        env_(library_, cfg_.env_config(), parse_mode(mode), seed) {}

  py::array_t<double> features() const { return features_array(env_.observation().features); }
  std::vector<double> context() const { return env_.observation().context; }
  int target_class() const { return env_.state().target_class; }
  int scene_id() const { return env_.state().map().id(); }

  py::tuple step(int action) {
    const Transition t = env_.step(action);
    py::dict info;
    info["collided"] = t.outcome.collided;
    info["invalid_action"] = t.outcome.invalid_action;
    info["success"] = t.outcome.success;
    info["delta_d"] = t.reward.delta_d;
    if (t.finished) info["episode"] = record_dict(*t.finished);
    return py::make_tuple(t.reward.total, t.done, info);
  }

 private:
  ExperimentConfig cfg_;
  SceneLibrary library_;  // the env keeps a pointer into it
  FetchEnv env_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gridworld fetch simulator, simulated perception and PPO training.";
  m.attr("__version__") = kVersion;
  m.attr("ACTION_COUNT") = kActionCount;
  m.attr("CLASS_COUNT") = kNumClasses;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", PyExc_ValueError);

  m.def("scene_ids", [] { return SceneLibrary::shipped().ids(); });
  m.def("render_scene", [](int id) { return render_scene(SceneLibrary::shipped().get(id)); },
        py::arg("scene_id"));
  m.def("observation_schema", [](const std::string& mode) {
    return observation_schema(PerceptionConfig{}, parse_mode(mode));
  }, py::arg("mode"));

  m.def("default_config", [] { return to_json(ExperimentConfig{}).dump(2); },
        "Default experiment config as JSON text.");
  m.def("resolve_config", [](const std::string& text) { return to_json(config_from_string(text)).dump(2); },
        py::arg("text"), "Merges a partial config over the defaults and validates it.");

  m.def("compute_reward", [](int prev, int next, bool collided, bool invalid, bool success,
                             double alpha, double beta, double gamma_pen) {
    StepOutcome o;
    o.collided = collided;
    o.invalid_action = invalid;
    o.success = success;
    return compute_reward(prev, next, o, {alpha, beta, gamma_pen}).total;
  }, py::arg("prev_distance"), py::arg("next_distance"), py::arg("collided") = false,
        py::arg("invalid_action") = false, py::arg("success") = false, py::arg("alpha") = 1.0,
        py::arg("beta") = 10.0, py::arg("gamma_pen") = 0.5);

  m.def("compute_gae", [](const std::vector<double>& rewards, const std::vector<double>& values,
                          const std::vector<std::uint8_t>& dones, double bootstrap, double gamma,
                          double lam) {
    if (rewards.size() != values.size() || rewards.size() != dones.size()) {
      throw ContractViolation("compute_gae: rewards, values and dones differ in length");
    }
    const GaeResult g = compute_gae(rewards, values, dones, bootstrap, gamma, lam);
    return py::make_tuple(g.advantages, g.returns);
  }, py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("bootstrap_value"),
        py::arg("gamma") = 0.99, py::arg("lam") = 0.95);

  m.def("relative_change", [](double value, double reference) {
    return relative_change(value, reference);
  }, py::arg("value"), py::arg("reference"));

  py::class_<PyEnv>(m, "FetchEnv")
      .def(py::init<const std::string&, std::uint64_t, const std::string&>(), py::arg("mode") = "enhanced",
           py::arg("seed") = 0, py::arg("config") = "")
      .def_property_readonly("features", &PyEnv::features)
      .def_property_readonly("context", &PyEnv::context)
      .def_property_readonly("target_class", &PyEnv::target_class)
      .def_property_readonly("scene_id", &PyEnv::scene_id)
      .def("step", &PyEnv::step, py::arg("action"),
           "Returns (reward, done, info); info['episode'] is set when an episode ends.");

  m.def("train", [](const std::string& config, const std::filesystem::path& run_dir) {
    const ExperimentConfig cfg = config_from_string(config);
    py::gil_scoped_release release;
    return run_experiment(cfg, run_dir);
  }, py::arg("config"), py::arg("run_dir"), "Trains every configured seed; returns the run directory.");

  m.def("checkpoint_info", [](const std::filesystem::path& path) {
    const Checkpoint c = load_checkpoint(path);
    py::dict d;
    d["parameters"] = c.params.size();
    d["closed_form"] = c.params.spec().parameter_count();
    d["network"] = describe(c.params.spec());
    d["has_optimizer"] = c.optimizer.has_value();
    return d;
  }, py::arg("path"));
}
