#include "loft/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "loft/error.hpp"

namespace loft {

namespace {

using nlohmann::json;

// Walks a JSON object, converting known keys and collecting every problem
// instead of stopping at the first.
class Schema {
 public:
  std::vector<std::string> errors;

  bool object(const json& j, const std::string& path) {
    if (!j.is_object()) {
      errors.push_back(path + ": expected an object");
      return false;
    }
    return true;
  }

  void allow_only(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!allowed.count(it.key())) errors.push_back(join(path, it.key()) + ": unknown key");
    }
  }

  void count(const json& j, const std::string& path, const char* key, std::size_t& out, std::size_t min = 0) {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      errors.push_back(join(path, key) + ": expected a nonnegative integer");
      return;
    }
    const auto n = v.get<std::uint64_t>();
    if (n < min) {
      errors.push_back(join(path, key) + ": must be at least " + std::to_string(min));
      return;
    }
    out = static_cast<std::size_t>(n);
  }

  void seed(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      errors.push_back(join(path, key) + ": expected a nonnegative integer");
      return;
    }
    out = v.get<std::uint64_t>();
  }

  void number(const json& j, const std::string& path, const char* key, double& out,
              const std::function<bool(double)>& ok = {}, const char* rule = "") {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_number()) {
      errors.push_back(join(path, key) + ": expected a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (ok && !ok(x))) {
      errors.push_back(join(path, key) + ": " + (rule[0] ? rule : "must be finite"));
      return;
    }
    out = x;
  }

  void boolean(const json& j, const std::string& path, const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) {
      errors.push_back(join(path, key) + ": expected true or false");
      return;
    }
    out = j[key].get<bool>();
  }

  template <class T, class F>
  void choice(const json& j, const std::string& path, const char* key, T& out, F&& from_string) {
    if (!j.contains(key)) return;
    choice_value(j[key], join(path, key), out, from_string);
  }

  template <class T, class F>
  bool choice_value(const json& v, const std::string& path, T& out, F&& from_string) {
    if (!v.is_string()) {
      errors.push_back(path + ": expected a string");
      return false;
    }
    try {
      out = from_string(v.get<std::string>());
      return true;
    } catch (const Error& e) {
      errors.push_back(path + ": " + e.what());
      return false;
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

void parse_task(Schema& s, const json& j, TaskConfig& t) {
  const std::string p = "task";
  if (!s.object(j, p)) return;
  s.allow_only(j, p, {"d_in", "d_out", "n", "r_star", "noise", "base", "whitened", "e_scale", "heldout_fraction"});
  s.count(j, p, "d_in", t.d_in, 1);
  s.count(j, p, "d_out", t.d_out, 1);
  s.count(j, p, "n", t.n, 2);
  s.count(j, p, "r_star", t.r_star, 1);
  s.number(j, p, "noise", t.noise, [](double x) { return x >= 0.0; }, "must be nonnegative");
  s.choice(j, p, "base", t.base, base_weight_mode_from_string);
  s.boolean(j, p, "whitened", t.whitened);
  s.number(j, p, "e_scale", t.e_scale, [](double x) { return x >= 0.0; }, "must be nonnegative");
  s.number(j, p, "heldout_fraction", t.heldout_fraction, [](double x) { return x >= 0.0 && x < 1.0; },
           "must lie in [0, 1)");
}

void parse_train(Schema& s, const json& j, TrainConfig& t) {
  const std::string p = "train";
  if (!s.object(j, p)) return;
  s.allow_only(j, p,
               {"learning_rate", "steps", "optimizer", "batch_size", "eval_every", "momentum", "beta1", "beta2",
                "epsilon"});
  s.number(j, p, "learning_rate", t.learning_rate, [](double x) { return x >= 0.0; }, "must be nonnegative");
  s.count(j, p, "steps", t.steps, 0);
  s.choice(j, p, "optimizer", t.optimizer, optimizer_from_string);
  s.count(j, p, "batch_size", t.batch_size, 0);
  s.count(j, p, "eval_every", t.eval_every, 1);
  auto unit = [](double x) { return x >= 0.0 && x < 1.0; };
  s.number(j, p, "momentum", t.momentum, unit, "must lie in [0, 1)");
  s.number(j, p, "beta1", t.beta1, unit, "must lie in [0, 1)");
  s.number(j, p, "beta2", t.beta2, unit, "must lie in [0, 1)");
  s.number(j, p, "epsilon", t.epsilon, [](double x) { return x > 0.0; }, "must be positive");
}

void parse_supports(Schema& s, const json& j, std::vector<SupportEntry>& out) {
  if (!j.is_array() || j.empty()) {
    s.errors.push_back("supports: expected a nonempty array");
    return;
  }
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "supports[" + std::to_string(i) + "]";
    SupportEntry e;
    if (!s.object(j[i], p)) continue;
    s.allow_only(j[i], p, {"method", "r"});
    if (!j[i].contains("method")) s.errors.push_back(p + ".method: required");
    s.choice(j[i], p, "method", e.method, provenance_from_string);
    s.count(j[i], p, "r", e.r, 1);
    out.push_back(e);
  }
}

void parse_sweep(Schema& s, const json& j, SweepSection& sw) {
  const std::string p = "sweep";
  if (!s.object(j, p)) return;
  s.allow_only(j, p, {"axis", "grid", "methods", "r", "label"});
  if (!j.contains("axis")) s.errors.push_back("sweep.axis: required");
  s.choice(j, p, "axis", sw.axis, sweep_axis_from_string);
  if (!j.contains("grid") || !j["grid"].is_array() || j["grid"].empty()) {
    s.errors.push_back("sweep.grid: expected a nonempty array of numbers");
  } else {
    for (std::size_t i = 0; i < j["grid"].size(); ++i) {
      const json& v = j["grid"][i];
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        s.errors.push_back("sweep.grid[" + std::to_string(i) + "]: expected a finite number");
      } else {
        sw.grid.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) {
      s.errors.push_back("sweep.methods: expected an array of strings");
    } else {
      for (std::size_t i = 0; i < j["methods"].size(); ++i) {
        Provenance m{};
        if (s.choice_value(j["methods"][i], "sweep.methods[" + std::to_string(i) + "]", m, provenance_from_string)) {
          sw.methods.push_back(m);
        }
      }
    }
  }
  if (j.contains("r")) {
    std::size_t r = 0;
    s.count(j, p, "r", r, 1);
    if (r) sw.r = r;
  }
  if (j.contains("label")) {
    if (!j["label"].is_string()) {
      s.errors.push_back("sweep.label: expected a string");
    } else {
      sw.label = j["label"].get<std::string>();
    }
  }
}

void parse_recover(Schema& s, const json& j, std::vector<RecoverEntry>& out) {
  if (!j.is_array() || j.empty()) {
    s.errors.push_back("recover: expected a nonempty array");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "recover[" + std::to_string(i) + "]";
    const json& e = j[i];
    if (!s.object(e, p)) continue;
    s.allow_only(e, p,
                 {"method", "d_out", "d_in", "transform_scale", "block_width", "stages", "givens_pairs",
                  "givens_angles", "householder_vectors", "reflections", "rank"});
    RecoverEntry r;
    if (!e.contains("method")) s.errors.push_back(p + ".method: required");
    s.choice(e, p, "method", r.recovery.method, recovery_method_from_string);
    s.count(e, p, "d_out", r.d_out, 1);
    s.count(e, p, "d_in", r.d_in, 1);
    s.number(e, p, "transform_scale", r.recovery.transform_scale, [](double x) { return x >= 0.0; },
             "must be nonnegative");
    s.count(e, p, "block_width", r.recovery.block_width, 1);
    if (e.contains("stages")) {
      std::size_t st = 0;
      s.count(e, p, "stages", st, 1);
      if (st) r.recovery.stages = st;
    }
    s.count(e, p, "reflections", r.recovery.reflections, 1);
    s.count(e, p, "rank", r.recovery.rank, 1);
    if (e.contains("givens_pairs")) {
      const json& gp = e["givens_pairs"];
      bool ok = gp.is_array();
      if (ok) {
        for (const auto& pair : gp) {
          if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned()) {
            ok = false;
            break;
          }
          r.recovery.givens_pairs.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
        }
      }
      if (!ok) s.errors.push_back(p + ".givens_pairs: expected an array of [i, j] index pairs");
    }
    if (e.contains("givens_angles")) {
      const json& ga = e["givens_angles"];
      bool ok = ga.is_array();
      if (ok) {
        for (const auto& a : ga) {
          if (!a.is_number()) {
            ok = false;
            break;
          }
          r.recovery.givens_angles.push_back(a.get<double>());
        }
      }
      if (!ok) s.errors.push_back(p + ".givens_angles: expected an array of numbers");
    }
    if (e.contains("householder_vectors")) {
      const json& hv = e["householder_vectors"];
      bool ok = hv.is_array();
      if (ok) {
        for (const auto& v : hv) {
          if (!v.is_array()) {
            ok = false;
            break;
          }
          std::vector<double> vec;
          for (const auto& x : v) {
            if (!x.is_number()) {
              ok = false;
              break;
            }
            vec.push_back(x.get<double>());
          }
          r.recovery.householder_vectors.push_back(std::move(vec));
        }
      }
      if (!ok) s.errors.push_back(p + ".householder_vectors: expected an array of numeric arrays");
    }
    out.push_back(std::move(r));
  }
}

}  // namespace

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) out[i] = seed + i;
  return out;
}

RunConfig parse_run_config(std::string_view json_text, const std::string& source_name) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source_name + ": invalid JSON: " + e.what());
  }
  RunConfig cfg;
  Schema s;
  if (!s.object(j, source_name)) throw ConfigError(s.errors.front());
  s.allow_only(j, "",
               {"seed", "num_seeds", "task", "supports", "transform", "train", "calibration", "sweep", "recover"});
  s.seed(j, "", "seed", cfg.seed);
  s.count(j, "", "num_seeds", cfg.num_seeds, 1);
  if (j.contains("task")) parse_task(s, j["task"], cfg.task);
  if (j.contains("supports")) parse_supports(s, j["supports"], cfg.supports);
  if (j.contains("transform")) {
    s.choice(j, "", "transform", cfg.transform, transform_kind_from_string);
    if (cfg.transform == TransformKind::fixed) s.errors.push_back("transform: must be orthogonal or free");
  }
  if (j.contains("train")) parse_train(s, j["train"], cfg.train);
  if (j.contains("calibration")) {
    const json& c = j["calibration"];
    if (s.object(c, "calibration")) {
      s.allow_only(c, "calibration", {"k_batches", "batch_size"});
      s.count(c, "calibration", "k_batches", cfg.calibration.k_batches, 1);
      s.count(c, "calibration", "batch_size", cfg.calibration.batch_size, 0);
    }
  }
  if (j.contains("sweep")) {
    SweepSection sw;
    parse_sweep(s, j["sweep"], sw);
    cfg.sweep = std::move(sw);
  }
  if (j.contains("recover")) parse_recover(s, j["recover"], cfg.recover);

  if (!s.errors.empty()) {
    std::ostringstream os;
    os << source_name << ": " << s.errors.size() << " schema violation" << (s.errors.size() == 1 ? "" : "s");
    for (const auto& e : s.errors) os << "\n  " << e;
    throw ConfigError(os.str());
  }
  return cfg;
}

LoadedConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  LoadedConfig out{{}, ss.str()};
  out.config = parse_run_config(out.bytes, path.string());
  return out;
}

}  // namespace loft
