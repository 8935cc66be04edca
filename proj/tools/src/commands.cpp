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

#include "squarm/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "squarm/cli/config_io.hpp"
#include "squarm/cli/csv.hpp"
#include "squarm/cli/verify.hpp"
#include "squarm/presets.hpp"

namespace squarm::cli {
namespace fs = std::filesystem;
namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

template <typename T>
Json opt(const std::optional<T>& o) {
  return o ? Json(*o) : Json(nullptr);
}

Json summary_json(const RunResult& r) {
  const auto& c = r.constants;
  Json final_row = Json::object();
  if (!r.rows.empty()) {
    const auto& last = r.rows.back();
    final_row = {{"t", last.t},
                 {"loss", number_or_null(last.loss)},
                 {"grad_norm_sq", number_or_null(last.grad_norm_sq)},
                 {"consensus", number_or_null(last.consensus)},
                 {"weighted_avg_loss", number_or_null(last.weighted_avg_loss)}};
  }
  return Json{
      {"final", final_row},
      {"total_bits", r.total_bits},
      {"total_messages", r.total_messages},
      {"total_triggers", r.total_triggers},
      {"seconds_at_link_rate", bits_to_seconds(r.total_bits, r.config.link_rate_bps)},
      {"constants",
       {{"delta", c.delta},
        {"lambda", c.lambda},
        {"gamma", c.gamma},
        {"p", c.p},
        {"omega", opt(c.omega)},
        {"eta0", c.eta0},
        {"lr_a", opt(c.lr_a)},
        {"lr_b", opt(c.lr_b)},
        {"L", c.L},
        {"mu", c.mu},
        {"f_star", opt(c.f_star)},
        {"bits_per_message", c.bits_per_message}}},
      {"diagnostics",
       {{"max_virtual_residual", r.diagnostics.max_virtual_residual},
        {"max_mean_deviation", r.diagnostics.max_mean_deviation},
        {"drift_violations", r.diagnostics.drift_violations},
        {"sync_rounds", r.diagnostics.sync_rounds}}},
      {"config", to_json(r.config)},
  };
}

void write_outputs(const fs::path& dir, const RunResult& r) {
  fs::create_directories(dir);
  write_metrics_file((dir / "metrics.csv").string(), r.rows);
  std::ofstream out(dir / "summary.json");
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + (dir / "summary.json").string() + "'");
  out << summary_json(r).dump(2) << '\n';
}

void print_summary(std::ostream& out, const RunResult& r) {
  const auto& c = r.constants;
  if (!r.rows.empty()) {
    const auto& last = r.rows.back();
    fmt::print(out, "final loss     {:.10g}\n", last.loss);
    fmt::print(out, "consensus      {:.6g}\n", last.consensus);
  }
  fmt::print(out, "bits           {}  ({:.3f} s at {:g} bit/s)\n", r.total_bits,
             bits_to_seconds(r.total_bits, r.config.link_rate_bps), r.config.link_rate_bps);
  fmt::print(out, "messages       {}  triggers {}\n", r.total_messages, r.total_triggers);
  fmt::print(out, "delta {:.6g}  lambda {:.6g}  gamma {:.6g}  p {:.6g}", c.delta, c.lambda,
             c.gamma, c.p);
  if (c.omega) fmt::print(out, "  omega {:.6g}", *c.omega);
  fmt::print(out, "\neta0 {:.6g}  L {:.6g}  mu {:.6g}", c.eta0, c.L, c.mu);
  if (c.f_star) fmt::print(out, "  f* {:.10g}", *c.f_star);
  fmt::print(out, "\n");
}

RunConfig config_for(const RunRequest& request) {
  FlatConfig file;
  if (!request.config_path.empty()) file = read_config_file(request.config_path);
  FlatConfig overrides = parse_overrides(request.overrides);
  if (!request.preset.empty()) overrides["preset"] = request.preset;
  return assemble_config(file, overrides);
}

// Config problems exit 2; anything the run itself raises exits 1.
int report(const Error& e, std::ostream& err) {
  fmt::print(err, "error: {}\n", e.what());
  return e.kind() == ErrorKind::kConfig ? kExitUsage : kExitVerifyFailed;
}

const std::map<std::string, std::string>& sweep_axes() {
  static const std::map<std::string, std::string> axes = {
      {"T", "T"}, {"n", "topology.n"}, {"H", "H"}, {"k", "compressor.k"}};
  return axes;
}

}  // namespace

int cmd_run(const RunRequest& request, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = config_for(request);
  } catch (const Error& e) {
    return report(e, err);
  }
  try {
    const RunResult result = run(config);
    write_outputs(request.out_dir, result);
    print_summary(out, result);
    fmt::print(out, "wrote {}/metrics.csv and summary.json\n", request.out_dir);
    return kExitOk;
  } catch (const DivergenceError& e) {
    write_outputs(request.out_dir, e.partial());
    return report(e, err);
  } catch (const Error& e) {
    return report(e, err);
  }
}

int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err) {
  std::vector<CheckResult> results;
  try {
    results = run_verify(suite);
  } catch (const Error& e) {
    return report(e, err);
  }
  const CheckResult* first_failure = nullptr;
  for (const auto& r : results) {
    fmt::print(out, "{:<12} {:<48} {}  {}\n", r.suite, r.name, r.passed ? "PASS" : "FAIL", r.detail);
    if (!r.passed && first_failure == nullptr) first_failure = &r;
  }
  if (first_failure != nullptr) {
    fmt::print(err, "first failure: [{}] {}: {}\n", first_failure->suite, first_failure->name,
               first_failure->detail);
    return kExitVerifyFailed;
  }
  fmt::print(out, "{} checks passed\n", results.size());
  return kExitOk;
}

int cmd_sweep(const SweepRequest& request, std::ostream& out, std::ostream& err) {
  const auto axis = sweep_axes().find(request.axis);
  if (axis == sweep_axes().end()) {
    fmt::print(err, "error: axis: expected one of T, n, H, k; got '{}'\n", request.axis);
    return kExitUsage;
  }
  if (request.values.empty()) {
    fmt::print(err, "error: values: at least one value is required\n");
    return kExitUsage;
  }
  std::vector<RunConfig> configs;
  try {
    for (const auto& value : request.values) {
      RunRequest point = request.base;
      point.overrides.push_back("--" + axis->second + "=" + value);
      configs.push_back(config_for(point));
    }
  } catch (const Error& e) {
    return report(e, err);
  }

  const fs::path root = request.base.out_dir;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const fs::path dir = root / fmt::format("{}={}", request.axis, request.values[i]);
    try {
      write_outputs(dir, run(configs[i]));
      fmt::print(out, "{}={} done\n", request.axis, request.values[i]);
    } catch (const DivergenceError& e) {
      write_outputs(dir, e.partial());
      fmt::print(out, "{}={} diverged\n", request.axis, request.values[i]);
    } catch (const Error& e) {
      return report(e, err);
    }
  }

  // Aggregate from the written files so the artifacts are checked on the way.
  try {
    std::ofstream agg(root / "sweep.csv", std::ios::binary);
    fmt::print(agg, "axis,value,{},total_bits\n", kMetricsHeader);
    for (const auto& value : request.values) {
      const fs::path dir = root / fmt::format("{}={}", request.axis, value);
      const auto rows = read_metrics_file((dir / "metrics.csv").string());
      std::ifstream sin(dir / "summary.json");
      const Json summary = Json::parse(sin);
      if (rows.empty()) throw Error(ErrorKind::kData, (dir / "metrics.csv").string() + ": no rows");
      fmt::print(agg, "{},{},{},{}\n", request.axis, value, format_row(rows.back()),
                 summary.at("total_bits").get<std::uint64_t>());
    }
  } catch (const Json::exception& e) {
    fmt::print(err, "error: summary.json: {}\n", e.what());
    return kExitVerifyFailed;
  } catch (const Error& e) {
    return report(e, err);
  }
  fmt::print(out, "wrote {}\n", (root / "sweep.csv").string());
  return kExitOk;
}

int cmd_presets(std::ostream& out) {
  for (const auto& p : presets()) fmt::print(out, "{:<10} {}\n", p.name, p.summary);
  return kExitOk;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"squarm: decentralized compressed SGD simulator"};
  app.require_subcommand(1);

  RunRequest run_req;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  run_cmd->add_option("--config", run_req.config_path, "JSON config file");
  run_cmd->add_option("--preset", run_req.preset, "named preset");
  run_cmd->add_option("--out", run_req.out_dir, "output directory");
  run_cmd->allow_extras();

  std::string suite = "all";
  auto* verify_cmd = app.add_subcommand("verify", "run property suites");
  verify_cmd->add_option("suite", suite, "compression, spectral, identities, schedules or all");

  SweepRequest sweep_req;
  auto* sweep_cmd = app.add_subcommand("sweep", "run one experiment per axis value");
  sweep_cmd->add_option("--config", sweep_req.base.config_path, "JSON config file");
  sweep_cmd->add_option("--preset", sweep_req.base.preset, "named preset");
  sweep_cmd->add_option("--out", sweep_req.base.out_dir, "output directory");
  sweep_cmd->add_option("--axis", sweep_req.axis, "T, n, H or k")->required();
  sweep_cmd->add_option("--values", sweep_req.values, "comma-separated values")
      ->delimiter(',')
      ->expected(0, -1);
  sweep_cmd->allow_extras();

  auto* presets_cmd = app.add_subcommand("presets", "list presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*run_cmd) {
    run_req.overrides = run_cmd->remaining();
    return cmd_run(run_req, std::cout, std::cerr);
  }
  if (*verify_cmd) return cmd_verify(suite, std::cout, std::cerr);
  if (*sweep_cmd) {
    sweep_req.base.overrides = sweep_cmd->remaining();
    return cmd_sweep(sweep_req, std::cout, std::cerr);
  }
  if (*presets_cmd) return cmd_presets(std::cout);
  return kExitUsage;
}

}  // namespace squarm::cli
