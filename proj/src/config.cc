/*
 * Copyright 2026 The rsde Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rsde/config.h"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <toml.hpp>

#include "rsde/error.h"
#include "rsde/mlp.h"
#include "rsde/stability_lab.h"

namespace rsde {
namespace {

std::string Where(const std::string& name, const toml::source_region& src) {
  return name + ":" + std::to_string(src.begin.line) + ":" + std::to_string(src.begin.column) + ": ";
}

template <typename T>
using Check = std::function<std::string(const T&)>;

class Section {
 public:
  Section(const toml::table* table, std::string section, const std::string& source)
      : table_(table), section_(std::move(section)), source_(source) {}

  void Get(const char* key, double* out, Check<double> check = {}) {
    const toml::node* n = Find(key);
    if (!n) return;
    if (auto v = n->value_exact<double>()) {
      *out = *v;
    } else if (auto i = n->value_exact<std::int64_t>()) {
      *out = static_cast<double>(*i);
    } else {
      Fail(*n, key, "expected a number");
    }
    if (!std::isfinite(*out)) Fail(*n, key, "must be finite");
    Apply(*n, key, *out, check);
  }

  void Get(const char* key, int* out, Check<int> check = {}) {
    std::int64_t v = *out;
    GetInteger(key, &v, std::numeric_limits<int>::min(), std::numeric_limits<int>::max());
    *out = static_cast<int>(v);
    if (const toml::node* n = Find(key)) Apply(*n, key, *out, check);
  }

  void Get(const char* key, std::size_t* out, Check<std::size_t> check = {}) {
    std::int64_t v = static_cast<std::int64_t>(*out);
    GetInteger(key, &v, 0, std::numeric_limits<std::int64_t>::max());
    *out = static_cast<std::size_t>(v);
    if (const toml::node* n = Find(key)) Apply(*n, key, *out, check);
  }

  void Get(const char* key, bool* out) {
    const toml::node* n = Find(key);
    if (!n) return;
    auto v = n->value_exact<bool>();
    if (!v) Fail(*n, key, "expected true or false");
    *out = *v;
  }

  void Get(const char* key, std::string* out, Check<std::string> check = {}) {
    const toml::node* n = Find(key);
    if (!n) return;
    auto v = n->value_exact<std::string>();
    if (!v) Fail(*n, key, "expected a string");
    *out = *v;
    Apply(*n, key, *out, check);
  }

  template <typename T>
  void GetArray(const char* key, std::vector<T>* out, Check<std::vector<T>> check = {}) {
    const toml::node* n = Find(key);
    if (!n) return;
    const toml::array* arr = n->as_array();
    if (!arr) Fail(*n, key, "expected an array");
    std::vector<T> values;
    for (const toml::node& e : *arr) {
      if constexpr (std::is_same_v<T, double>) {
        if (auto v = e.value_exact<double>()) {
          values.push_back(*v);
        } else if (auto i = e.value_exact<std::int64_t>()) {
          values.push_back(static_cast<double>(*i));
        } else {
          Fail(e, key, "expected an array of numbers");
        }
        if (!std::isfinite(values.back())) Fail(e, key, "must be finite");
      } else if constexpr (std::is_same_v<T, int>) {
        auto v = e.value_exact<std::int64_t>();
        if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
          Fail(e, key, "expected an array of integers");
        }
        values.push_back(static_cast<int>(*v));
      } else {
        auto v = e.value_exact<std::string>();
        if (!v) Fail(e, key, "expected an array of strings");
        values.push_back(*v);
      }
    }
    *out = std::move(values);
    Apply(*n, key, *out, check);
  }

  // Unknown keys are fatal.
  void Finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.count(std::string(k.str()))) {
        throw ConfigurationError(Where(source_, k.source()) + "unknown key '" + Qualified(k.str()) +
                                 "'");
      }
    }
  }

  const toml::node* Find(const char* key) {
    if (!table_) return nullptr;
    used_.insert(key);
    return table_->get(key);
  }

  [[noreturn]] void Fail(const toml::node& n, const std::string& key, const std::string& msg) const {
    throw ConfigurationError(Where(source_, n.source()) + Qualified(key) + ": " + msg);
  }

 private:
  std::string Qualified(std::string_view key) const {
    return section_.empty() ? std::string(key) : section_ + "." + std::string(key);
  }

  void GetInteger(const char* key, std::int64_t* out, std::int64_t lo, std::int64_t hi) {
    const toml::node* n = Find(key);
    if (!n) return;
    auto v = n->value_exact<std::int64_t>();
    if (!v) Fail(*n, key, "expected an integer");
    if (*v < lo || *v > hi) Fail(*n, key, "integer out of range");
    *out = *v;
  }

  template <typename T>
  void Apply(const toml::node& n, const char* key, const T& value, const Check<T>& check) const {
    if (!check) return;
    const std::string msg = check(value);
    if (!msg.empty()) Fail(n, key, msg);
  }

  const toml::table* table_;
  std::string section_;
  std::string source_;
  std::set<std::string> used_;
};

Check<double> Positive() {
  return [](const double& v) { return v > 0.0 ? "" : std::string("must be positive"); };
}
Check<double> NonNegative() {
  return [](const double& v) { return v >= 0.0 ? "" : std::string("must be nonnegative"); };
}
Check<double> UnitInterval() {
  return [](const double& v) { return v >= 0.0 && v <= 1.0 ? "" : std::string("must lie in [0, 1]"); };
}
Check<int> AtLeast(int lo) {
  return [lo](const int& v) { return v >= lo ? "" : "must be at least " + std::to_string(lo); };
}
Check<std::size_t> AtLeastN(std::size_t lo) {
  return [lo](const std::size_t& v) { return v >= lo ? "" : "must be at least " + std::to_string(lo); };
}

template <typename Parse>
Check<std::string> Parses(Parse parse) {
  return [parse](const std::string& s) -> std::string {
    try {
      parse(s);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
}

std::string Num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string Str(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

template <typename T, typename F>
std::string List(const std::vector<T>& v, F fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

}  // namespace

bool operator==(const SdeSpec& a, const SdeSpec& b) {
  return a.family == b.family && a.horizon == b.horizon && a.beta_min == b.beta_min &&
         a.beta_max == b.beta_max && a.sigma_min == b.sigma_min && a.sigma_max == b.sigma_max &&
         a.dim == b.dim;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.seed == b.seed && a.output == b.output && a.sde == b.sde && a.noise == b.noise &&
         a.data == b.data && a.model == b.model && a.train == b.train && a.sample == b.sample &&
         a.eval == b.eval && a.stability == b.stability;
}

void ExperimentConfig::Validate() const {
  try {
    sde.Validate();
  } catch (const Error& e) {
    throw ConfigurationError(std::string("sde: ") + e.what());
  }
  if (noise == NoiseKind::kCustom) throw ConfigurationError("noise.kind must be gaussian or cauchy");
  if (data.source != "mixture" && data.source != "csv") {
    throw ConfigurationError("data.source must be \"mixture\" or \"csv\"");
  }
  if (data.source == "csv" && !std::filesystem::is_regular_file(data.path)) {
    throw ConfigurationError("data.path '" + data.path + "' does not exist");
  }
  if (data.risk_low > data.risk_high) throw ConfigurationError("data.risk_low exceeds data.risk_high");
  try {
    Mixture().Validate();
    Training().Validate();
    Methods();
    BaseModel();
  } catch (const ConfigurationError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigurationError(e.what());
  }
  if (data.count < 1 || sample.count < 1 || eval.reference_count < 3) {
    throw ConfigurationError("data, sample and reference counts must be positive");
  }
  for (double t : stability.times) {
    if (!(t > 0.0 && t <= sde.horizon)) throw ConfigurationError("stability.times must lie in (0, T]");
  }
}

MixtureSpec ExperimentConfig::Mixture() const {
  MixtureSpec m = DefaultMixture(noise);
  m.corruption = data.corruption;
  m.risk_low = data.risk_low;
  m.risk_high = data.risk_high;
  return m;
}

ModelConfig ExperimentConfig::BaseModel() const {
  ModelConfig mc;
  mc.hidden = model.hidden;
  mc.activation = ParseActivation(model.activation);
  mc.time.frequencies = model.time_frequencies;
  mc.time.enabled = model.time_frequencies > 0;
  mc.precondition.enabled = model.precondition;
  mc.precondition.schedule = sde;
  mc.precondition.data_scale = model.data_scale;
  return mc;
}

TrainConfig ExperimentConfig::Training() const {
  TrainConfig tc;
  tc.steps = train.steps;
  tc.batch_size = train.batch_size;
  tc.learning_rate = train.learning_rate;
  tc.weighting = ParseLossWeighting(train.weighting);
  tc.p_force = train.p_force;
  tc.guard = train.guard;
  tc.v_floor = train.v_floor;
  tc.seed = seed;
  return tc;
}

std::vector<Method> ExperimentConfig::Methods() const {
  std::vector<Method> out;
  for (const auto& name : train.methods) {
    const Method m = ParseMethod(name);
    for (Method seen : out) {
      if (seen == m) throw ConfigurationError("train.methods lists '" + name + "' twice");
    }
    out.push_back(m);
  }
  if (out.empty()) throw ConfigurationError("train.methods is empty");
  return out;
}

ExperimentConfig ParseConfig(const std::string& text, const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    throw ConfigurationError(Where(source_name, e.source()) + std::string(e.description()));
  }

  ExperimentConfig c;
  static const std::set<std::string> kSections = {"sde",    "noise", "data",     "model",
                                                  "train",  "sample", "eval",    "stability"};
  Section top(&root, "", source_name);
  top.Get("seed", &c.seed);
  top.Get("output", &c.output, [](const std::string& s) {
    return s.empty() ? std::string("must be nonempty") : std::string();
  });
  auto section = [&](const char* name) {
    const toml::node* n = top.Find(name);
    if (n && !n->is_table()) top.Fail(*n, name, "expected a table");
    return Section(n ? n->as_table() : nullptr, name, source_name);
  };

  {
    Section s = section("sde");
    std::string family = SdeFamilyName(c.sde.family);
    s.Get("family", &family, Parses([](const std::string& v) { ParseSdeFamily(v); }));
    c.sde.family = ParseSdeFamily(family);
    s.Get("horizon", &c.sde.horizon, Positive());
    s.Get("beta_min", &c.sde.beta_min, NonNegative());
    s.Get("beta_max", &c.sde.beta_max, NonNegative());
    s.Get("sigma_min", &c.sde.sigma_min, Positive());
    s.Get("sigma_max", &c.sde.sigma_max, Positive());
    s.Finish();
  }
  {
    Section s = section("noise");
    std::string kind = NoiseKindName(c.noise);
    s.Get("kind", &kind, [](const std::string& v) {
      return v == "gaussian" || v == "cauchy" ? std::string() : std::string("must be gaussian or cauchy");
    });
    c.noise = ParseNoiseKind(kind);
    s.Finish();
  }
  {
    Section s = section("data");
    s.Get("source", &c.data.source, [](const std::string& v) {
      return v == "mixture" || v == "csv" ? std::string() : std::string("must be mixture or csv");
    });
    s.Get("path", &c.data.path);
    if (c.data.source == "csv") {
      const toml::node* n = s.Find("path");
      if (!n) throw ConfigurationError(source_name + ": data.path is required when data.source = \"csv\"");
      if (!std::filesystem::is_regular_file(c.data.path)) {
        s.Fail(*n, "path", "file '" + c.data.path + "' does not exist");
      }
    }
    s.Get("count", &c.data.count, AtLeastN(1));
    s.GetArray<double>("corruption", &c.data.corruption, [](const std::vector<double>& v) {
      if (v.size() != 4) return std::string("needs one rate per mixture component (4)");
      for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) return std::string("rates must lie in [0, 1]");
      }
      return std::string();
    });
    s.Get("risk_low", &c.data.risk_low, NonNegative());
    s.Get("risk_high", &c.data.risk_high, NonNegative());
    s.Finish();
  }
  {
    Section s = section("model");
    s.GetArray<int>("hidden", &c.model.hidden, [](const std::vector<int>& v) {
      if (v.empty()) return std::string("needs at least one layer");
      for (int w : v) {
        if (w < 1) return std::string("widths must be positive");
      }
      return std::string();
    });
    s.Get("activation", &c.model.activation, Parses([](const std::string& v) { ParseActivation(v); }));
    s.Get("time_frequencies", &c.model.time_frequencies, AtLeast(0));
    s.Get("precondition", &c.model.precondition);
    s.Get("data_scale", &c.model.data_scale, Positive());
    s.Finish();
  }
  {
    Section s = section("train");
    s.GetArray<std::string>("methods", &c.train.methods, [](const std::vector<std::string>& v) {
      if (v.empty()) return std::string("needs at least one method");
      std::set<std::string> seen;
      for (const auto& m : v) {
        try {
          ParseMethod(m);
        } catch (const Error& e) {
          return std::string(e.what());
        }
        if (!seen.insert(m).second) return "lists '" + m + "' twice";
      }
      return std::string();
    });
    s.Get("steps", &c.train.steps, AtLeast(1));
    s.Get("batch_size", &c.train.batch_size, AtLeast(1));
    s.Get("learning_rate", &c.train.learning_rate, Positive());
    s.Get("weighting", &c.train.weighting, Parses([](const std::string& v) { ParseLossWeighting(v); }));
    s.Get("p_force", &c.train.p_force, UnitInterval());
    s.Get("guard", &c.train.guard, UnitInterval());
    s.Get("v_floor", &c.train.v_floor, Positive());
    s.Get("mask_probability", &c.train.mask_probability, UnitInterval());
    s.Finish();
  }
  {
    Section s = section("sample");
    s.Get("count", &c.sample.count, AtLeastN(1));
    s.Get("steps", &c.sample.steps, AtLeast(1));
    s.Get("guidance_scale", &c.sample.guidance_scale, NonNegative());
    s.Finish();
  }
  {
    Section s = section("eval");
    s.Get("reference_count", &c.eval.reference_count, AtLeastN(3));
    s.Get("prd_clusters", &c.eval.prd_clusters, AtLeast(2));
    s.Get("prd_restarts", &c.eval.prd_restarts, AtLeast(1));
    s.Get("prd_angles", &c.eval.prd_angles, AtLeast(3));
    s.Get("far_radius", &c.eval.far_radius, Positive());
    s.Finish();
  }
  {
    Section s = section("stability");
    s.GetArray<double>("risks", &c.stability.risks, [](const std::vector<double>& v) {
      if (v.empty()) return std::string("needs at least one risk");
      for (double x : v) {
        if (x < 0.0) return std::string("risks must be nonnegative");
      }
      return std::string();
    });
    s.GetArray<double>("times", &c.stability.times, [](const std::vector<double>& v) {
      for (double x : v) {
        if (!(x > 0.0)) return std::string("times must be positive");
      }
      return std::string();
    });
    s.Get("samples", &c.stability.samples, AtLeastN(2 * kMinCharFnSamples));
    s.Get("bootstrap", &c.stability.bootstrap, AtLeast(1));
    s.Get("quantile", &c.stability.quantile, [](const double& q) {
      return q > 0.0 && q <= 1.0 ? std::string() : std::string("must lie in (0, 1]");
    });
    s.Finish();
  }
  for (const auto& [k, v] : root) {
    if (v.is_table() && !kSections.count(std::string(k.str()))) {
      throw ConfigurationError(Where(source_name, k.source()) + "unknown section [" +
                               std::string(k.str()) + "]");
    }
  }
  top.Finish();
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path);
}

std::string SerializeConfig(const ExperimentConfig& c) {
  std::ostringstream o;
  auto ints = [](int v) { return std::to_string(v); };
  o << "seed = " << c.seed << "\n";
  o << "output = " << Str(c.output) << "\n\n";
  o << "[sde]\n";
  o << "family = " << Str(SdeFamilyName(c.sde.family)) << "\n";
  o << "horizon = " << Num(c.sde.horizon) << "\n";
  o << "beta_min = " << Num(c.sde.beta_min) << "\n";
  o << "beta_max = " << Num(c.sde.beta_max) << "\n";
  o << "sigma_min = " << Num(c.sde.sigma_min) << "\n";
  o << "sigma_max = " << Num(c.sde.sigma_max) << "\n\n";
  o << "[noise]\n";
  o << "kind = " << Str(NoiseKindName(c.noise)) << "\n\n";
  o << "[data]\n";
  o << "source = " << Str(c.data.source) << "\n";
  o << "path = " << Str(c.data.path) << "\n";
  o << "count = " << c.data.count << "\n";
  o << "corruption = " << List(c.data.corruption, Num) << "\n";
  o << "risk_low = " << Num(c.data.risk_low) << "\n";
  o << "risk_high = " << Num(c.data.risk_high) << "\n\n";
  o << "[model]\n";
  o << "hidden = " << List(c.model.hidden, ints) << "\n";
  o << "activation = " << Str(c.model.activation) << "\n";
  o << "time_frequencies = " << c.model.time_frequencies << "\n";
  o << "precondition = " << (c.model.precondition ? "true" : "false") << "\n";
  o << "data_scale = " << Num(c.model.data_scale) << "\n\n";
  o << "[train]\n";
  o << "methods = " << List(c.train.methods, Str) << "\n";
  o << "steps = " << c.train.steps << "\n";
  o << "batch_size = " << c.train.batch_size << "\n";
  o << "learning_rate = " << Num(c.train.learning_rate) << "\n";
  o << "weighting = " << Str(c.train.weighting) << "\n";
  o << "p_force = " << Num(c.train.p_force) << "\n";
  o << "guard = " << Num(c.train.guard) << "\n";
  o << "v_floor = " << Num(c.train.v_floor) << "\n";
  o << "mask_probability = " << Num(c.train.mask_probability) << "\n\n";
  o << "[sample]\n";
  o << "count = " << c.sample.count << "\n";
  o << "steps = " << c.sample.steps << "\n";
  o << "guidance_scale = " << Num(c.sample.guidance_scale) << "\n\n";
  o << "[eval]\n";
  o << "reference_count = " << c.eval.reference_count << "\n";
  o << "prd_clusters = " << c.eval.prd_clusters << "\n";
  o << "prd_restarts = " << c.eval.prd_restarts << "\n";
  o << "prd_angles = " << c.eval.prd_angles << "\n";
  o << "far_radius = " << Num(c.eval.far_radius) << "\n\n";
  o << "[stability]\n";
  o << "risks = " << List(c.stability.risks, Num) << "\n";
  o << "times = " << List(c.stability.times, Num) << "\n";
  o << "samples = " << c.stability.samples << "\n";
  o << "bootstrap = " << c.stability.bootstrap << "\n";
  o << "quantile = " << Num(c.stability.quantile) << "\n";
  return o.str();
}

std::uint64_t ConfigHash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : SerializeConfig(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexHash(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace rsde
