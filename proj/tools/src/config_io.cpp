// Copyright 2026 The squarm Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "squarm/cli/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <string_view>
#include <unordered_map>

#include "squarm/presets.hpp"

namespace squarm::cli {
namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::kConfig, key + ": " + why);
}

double as_double(const std::string& key, const Json& v) {
  if (!v.is_number()) bad(key, "expected a number, got " + v.dump());
  return v.get<double>();
}

std::int64_t as_int(const std::string& key, const Json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x)) return static_cast<std::int64_t>(x);
  }
  bad(key, "expected an integer, got " + v.dump());
}

bool as_bool(const std::string& key, const Json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() && (v == 0 || v == 1)) return v == 1;
  bad(key, "expected true or false, got " + v.dump());
}

std::string as_string(const std::string& key, const Json& v) {
  if (!v.is_string()) bad(key, "expected a string, got " + v.dump());
  return v.get<std::string>();
}

template <typename E>
E as_enum(const std::string& key, const Json& v,
          std::initializer_list<std::pair<std::string_view, E>> table) {
  const std::string s = as_string(key, v);
  std::string names;
  for (const auto& [name, value] : table) {
    if (name == s) return value;
    names += (names.empty() ? "" : ", ") + std::string(name);
  }
  bad(key, "unknown value '" + s + "' (expected one of: " + names + ")");
}

template <typename Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    bad(key, e.what());
  }
}

using Setter = std::function<void(RunConfig&, const std::string&, const Json&)>;

const std::unordered_map<std::string, Setter>& setters() {
  static const std::unordered_map<std::string, Setter> table = [] {
    std::unordered_map<std::string, Setter> t;
    t["topology.kind"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.topology.kind = as_enum<TopologyKind>(
          k, v,
          {{"ring", TopologyKind::kRing},
           {"complete", TopologyKind::kComplete},
           {"custom", TopologyKind::kCustom}});
    };
    t["topology.n"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.topology.n = static_cast<int>(as_int(k, v));
    };
    t["topology.self_weight"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.topology.self_weight = as_double(k, v);
    };
    t["topology.edges"] = [](RunConfig& c, const std::string& k, const Json& v) {
      if (!v.is_array()) bad(k, "expected [[i, j, w], ...]");
      c.topology.edges.clear();
      for (const auto& e : v) {
        if (!e.is_array() || e.size() != 3) bad(k, "each edge must be [i, j, w], got " + e.dump());
        c.topology.edges.push_back({static_cast<int>(as_int(k, e[0])),
                                    static_cast<int>(as_int(k, e[1])), as_double(k, e[2])});
      }
    };
    t["topology.self_weights"] = [](RunConfig& c, const std::string& k, const Json& v) {
      if (!v.is_array()) bad(k, "expected an array of numbers");
      c.topology.self_weights.clear();
      for (const auto& x : v) c.topology.self_weights.push_back(as_double(k, x));
    };

    t["objective.kind"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.kind = wrap(k, [&] { return objective_kind_from_string(as_string(k, v)); });
    };
    t["objective.d"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.d = static_cast<int>(as_int(k, v));
    };
    t["objective.noise_sigma"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.noise_sigma = as_double(k, v);
    };
    t["objective.condition"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.condition = as_double(k, v);
    };
    t["objective.mu"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.mu = as_double(k, v);
    };
    t["objective.curvature_spread"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.curvature_spread = as_double(k, v);
    };
    t["objective.center_spread"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.center_spread = as_double(k, v);
    };
    t["objective.samples_per_node"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.samples_per_node = static_cast<int>(as_int(k, v));
    };
    t["objective.partition"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.partition_mode =
          wrap(k, [&] { return partition_mode_from_string(as_string(k, v)); });
    };
    t["objective.dataset"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.dataset_path = as_string(k, v);
    };
    t["objective.alpha"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.alpha = as_double(k, v);
    };
    t["objective.mu_reg"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.mu_reg = as_double(k, v);
    };
    t["objective.batch_size"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.objective.batch_size = static_cast<int>(as_int(k, v));
    };
    t["objective.clip_norm"] = [](RunConfig& c, const std::string& k, const Json& v) {
      if (v.is_null()) {
        c.objective.clip_norm.reset();
      } else {
        c.objective.clip_norm = as_double(k, v);
      }
    };

    t["compressor.kind"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.compressor.kind = wrap(k, [&] { return compressor_kind_from_string(as_string(k, v)); });
    };
    t["compressor.k"] = [](RunConfig& c, const std::string& k, const Json& v) {
      if (v.is_null()) {
        c.compressor.k.reset();
        return;
      }
      c.compressor.k = static_cast<int>(as_int(k, v));
      c.compressor.k_fraction.reset();
    };
    t["compressor.k_fraction"] = [](RunConfig& c, const std::string& k, const Json& v) {
      if (v.is_null()) {
        c.compressor.k_fraction.reset();
        return;
      }
      c.compressor.k_fraction = as_double(k, v);
      c.compressor.k.reset();
    };
    t["compressor.s"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.compressor.s = static_cast<int>(as_int(k, v));
    };
    t["compressor.value_bits"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.compressor.value_bits = static_cast<int>(as_int(k, v));
    };

    t["H"] = [](RunConfig& c, const std::string& k, const Json& v) { c.H = as_int(k, v); };
    t["beta"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.beta = as_double(k, v);
    };
    t["T"] = [](RunConfig& c, const std::string& k, const Json& v) { c.T = as_int(k, v); };
    t["seed"] = [](RunConfig& c, const std::string& k, const Json& v) {
      const std::int64_t s = as_int(k, v);
      if (s < 0) bad(k, "must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    };

    t["lr.kind"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.lr.kind = as_enum<LrSource>(k, v,
                                    {{"constant", LrSource::kConstant},
                                     {"decaying", LrSource::kDecaying},
                                     {"auto_constant", LrSource::kAutoConstant},
                                     {"auto_decaying", LrSource::kAutoDecaying}});
    };
    t["lr.eta"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.lr.eta = as_double(k, v);
    };
    t["lr.b"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.lr.b = as_double(k, v);
    };
    t["lr.a"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.lr.a = as_double(k, v);
    };
    t["lr.mu"] = [](RunConfig& c, const std::string& k, const Json& v) {
      if (v.is_null()) {
        c.lr.mu.reset();
      } else {
        c.lr.mu = as_double(k, v);
      }
    };

    t["gamma.kind"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.gamma.kind = as_enum<GammaSource>(k, v,
                                          {{"explicit", GammaSource::kExplicit},
                                           {"auto_relaxed", GammaSource::kAutoRelaxed},
                                           {"auto_strong", GammaSource::kAutoStrong}});
    };
    t["gamma.value"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.gamma.value = as_double(k, v);
    };
    t["gamma.omega"] = [](RunConfig& c, const std::string& k, const Json& v) {
      if (v.is_null()) {
        c.gamma.omega.reset();
      } else {
        c.gamma.omega = as_double(k, v);
      }
    };

    t["threshold.kind"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.threshold.kind = wrap(k, [&] { return threshold_kind_from_string(as_string(k, v)); });
    };
    t["threshold.c0"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.threshold.c0 = as_double(k, v);
    };
    t["threshold.epsilon"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.threshold.epsilon = as_double(k, v);
    };
    t["threshold.init"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.threshold.init = as_double(k, v);
    };
    t["threshold.step"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.threshold.step = as_double(k, v);
    };
    t["threshold.period"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.threshold.period = as_int(k, v);
    };

    t["variant"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.variant = as_enum<NodeVariant>(
          k, v,
          {{"full_copy", NodeVariant::kFullCopy}, {"mem_efficient", NodeVariant::kMemEfficient}});
    };
    t["accounting"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.accounting = as_enum<Accounting>(
          k, v, {{"broadcast", Accounting::kBroadcast}, {"unicast", Accounting::kUnicast}});
    };
    t["eval_every"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.eval_every = as_int(k, v);
    };
    t["diagnostics"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.diagnostics = as_bool(k, v);
    };
    t["parallel"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.parallel = as_bool(k, v);
    };
    t["init.kind"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.init.kind = as_enum<InitKind>(k, v,
                                      {{"zeros", InitKind::kZeros},
                                       {"constant", InitKind::kConstant},
                                       {"gaussian", InitKind::kGaussian}});
    };
    t["init.value"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.init.value = as_double(k, v);
    };
    t["link_rate_bps"] = [](RunConfig& c, const std::string& k, const Json& v) {
      c.link_rate_bps = as_double(k, v);
    };
    return t;
  }();
  return table;
}

const std::unordered_map<std::string, std::string>& aliases() {
  static const std::unordered_map<std::string, std::string> table = {
      {"n", "topology.n"},
      {"d", "objective.d"},
      {"k", "compressor.k"},
      {"topology", "topology.kind"},
      {"objective", "objective.kind"},
      {"compressor", "compressor.kind"},
      {"threshold", "threshold.kind"},
      {"eta", "lr.eta"},
  };
  return table;
}

std::string canonical(const std::string& key) {
  const auto it = aliases().find(key);
  return it == aliases().end() ? key : it->second;
}

void flatten_into(const Json& node, const std::string& prefix, FlatConfig& out) {
  if (node.is_object() && !(prefix.empty() && node.empty())) {
    for (const auto& [k, v] : node.items()) {
      flatten_into(v, prefix.empty() ? k : prefix + "." + k, out);
    }
    return;
  }
  if (!prefix.empty()) out[prefix] = node;
}

Json parse_value(const std::string& text) {
  Json v = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (v.is_discarded()) return Json(text);
  return v;
}

}  // namespace

FlatConfig flatten(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kConfig, "config: top level must be a JSON object");
  FlatConfig out;
  flatten_into(doc, "", out);
  FlatConfig canon;
  for (auto& [k, v] : out) canon[canonical(k)] = std::move(v);
  return canon;
}

FlatConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "config: cannot open '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kConfig, "config: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  return flatten(doc);
}

FlatConfig parse_overrides(const std::vector<std::string>& tokens) {
  FlatConfig out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (tok.rfind("--", 0) != 0 || tok.size() == 2) {
      throw Error(ErrorKind::kConfig, tok + ": unexpected argument (use --key=value)");
    }
    std::string body = tok.substr(2);
    std::string key;
    Json value;
    if (const auto eq = body.find('='); eq != std::string::npos) {
      key = body.substr(0, eq);
      value = parse_value(body.substr(eq + 1));
    } else if (i + 1 < tokens.size() && tokens[i + 1].rfind("--", 0) != 0) {
      key = body;
      value = parse_value(tokens[++i]);
    } else {
      key = body;
      value = true;
    }
    out[canonical(key)] = value;
  }
  return out;
}

void apply_key(RunConfig& config, const std::string& key, const Json& value) {
  const std::string k = canonical(key);
  const auto it = setters().find(k);
  if (it == setters().end()) throw Error(ErrorKind::kConfig, k + ": unknown key");
  it->second(config, k, value);
}

RunConfig assemble_config(const FlatConfig& file, const FlatConfig& overrides) {
  RunConfig config;
  if (const char* env = std::getenv("SQUARM_SEED"); env != nullptr && *env != '\0') {
    apply_key(config, "seed", parse_value(env));
  }
  std::string preset;
  for (const FlatConfig* layer : {&file, &overrides}) {
    if (auto it = layer->find("preset"); it != layer->end()) preset = as_string("preset", it->second);
  }
  if (!preset.empty()) wrap("preset", [&] { find_preset(preset).apply(config); return 0; });
  for (const FlatConfig* layer : {&file, &overrides}) {
    for (const auto& [k, v] : *layer) {
      if (k != "preset") apply_key(config, k, v);
    }
  }
  config.validate();
  return config;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  keys.push_back("preset");
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kComplete: return "complete";
    case TopologyKind::kCustom: return "custom";
  }
  return "unknown";
}

std::string_view to_string(LrSource kind) {
  switch (kind) {
    case LrSource::kConstant: return "constant";
    case LrSource::kDecaying: return "decaying";
    case LrSource::kAutoConstant: return "auto_constant";
    case LrSource::kAutoDecaying: return "auto_decaying";
  }
  return "unknown";
}

std::string_view to_string(GammaSource kind) {
  switch (kind) {
    case GammaSource::kExplicit: return "explicit";
    case GammaSource::kAutoRelaxed: return "auto_relaxed";
    case GammaSource::kAutoStrong: return "auto_strong";
  }
  return "unknown";
}

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::kZeros: return "zeros";
    case InitKind::kConstant: return "constant";
    case InitKind::kGaussian: return "gaussian";
  }
  return "unknown";
}

std::string_view to_string(Accounting kind) {
  return kind == Accounting::kBroadcast ? "broadcast" : "unicast";
}

std::string_view to_string(NodeVariant kind) {
  return kind == NodeVariant::kFullCopy ? "full_copy" : "mem_efficient";
}

std::string_view to_string(PartitionMode kind) {
  return kind == PartitionMode::kIid ? "iid" : "sorted_by_label";
}

Json to_json(const RunConfig& c) {
  auto opt = [](const auto& o) { return o ? Json(*o) : Json(nullptr); };
  Json edges = Json::array();
  for (const auto& e : c.topology.edges) edges.push_back({e.i, e.j, e.w});
  return Json{
      {"topology.kind", to_string(c.topology.kind)},
      {"topology.n", c.topology.n},
      {"topology.self_weight", c.topology.self_weight},
      {"topology.edges", edges},
      {"topology.self_weights", c.topology.self_weights},
      {"objective.kind", squarm::to_string(c.objective.kind)},
      {"objective.d", c.objective.d},
      {"objective.noise_sigma", c.objective.noise_sigma},
      {"objective.condition", c.objective.condition},
      {"objective.mu", c.objective.mu},
      {"objective.curvature_spread", c.objective.curvature_spread},
      {"objective.center_spread", c.objective.center_spread},
      {"objective.samples_per_node", c.objective.samples_per_node},
      {"objective.partition", to_string(c.objective.partition_mode)},
      {"objective.dataset", c.objective.dataset_path},
      {"objective.alpha", c.objective.alpha},
      {"objective.mu_reg", c.objective.mu_reg},
      {"objective.batch_size", c.objective.batch_size},
      {"objective.clip_norm", opt(c.objective.clip_norm)},
      {"compressor.kind", squarm::to_string(c.compressor.kind)},
      {"compressor.k", opt(c.compressor.k)},
      {"compressor.k_fraction", opt(c.compressor.k_fraction)},
      {"compressor.s", c.compressor.s},
      {"compressor.value_bits", c.compressor.value_bits},
      {"H", c.H},
      {"beta", c.beta},
      {"lr.kind", to_string(c.lr.kind)},
      {"lr.eta", c.lr.eta},
      {"lr.b", c.lr.b},
      {"lr.a", c.lr.a},
      {"lr.mu", opt(c.lr.mu)},
      {"gamma.kind", to_string(c.gamma.kind)},
      {"gamma.value", c.gamma.value},
      {"gamma.omega", opt(c.gamma.omega)},
      {"threshold.kind", squarm::to_string(c.threshold.kind)},
      {"threshold.c0", c.threshold.c0},
      {"threshold.epsilon", c.threshold.epsilon},
      {"threshold.init", c.threshold.init},
      {"threshold.step", c.threshold.step},
      {"threshold.period", c.threshold.period},
      {"T", c.T},
      {"seed", c.seed},
      {"variant", to_string(c.variant)},
      {"accounting", to_string(c.accounting)},
      {"eval_every", c.eval_every},
      {"diagnostics", c.diagnostics},
      {"parallel", c.parallel},
      {"init.kind", to_string(c.init.kind)},
      {"init.value", c.init.value},
      {"link_rate_bps", c.link_rate_bps},
  };
}

}  // namespace squarm::cli
