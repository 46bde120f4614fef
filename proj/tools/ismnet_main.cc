// ismnet: data-driven ISS/ISM controller design for networks, stage by stage
// or end to end.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ismnet/error.h"
#include "ismnet/io/artifacts.h"
#include "ismnet/io/config.h"
#include "ismnet/pipeline/pipeline.h"

namespace {

using nlohmann::json;

struct Overrides {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> topology;
  std::optional<int> n;
  std::optional<int> retries;
  std::optional<int> parallel;
  bool desk_scale = false;
  bool no_reuse = false;
};

std::string default_out_dir() {
  const char* env = std::getenv("ISMNET_OUT_DIR");
  return env && *env ? env : "ismnet_out";
}

// Later stages reuse the config saved by `collect` unless one is given.
ismnet::RunConfig load_config(const Overrides& o, const ismnet::RunPaths& paths, bool allow_saved) {
  json j = json::object();
  if (!o.config.empty()) {
    j = ismnet::io::read_json(o.config);
  } else if (allow_saved && std::filesystem::exists(paths.config())) {
    j = ismnet::io::read_json(paths.config());
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.topology) {
    // A different topology invalidates coupling weights and edges chosen for the old one.
    if (j.contains("network")) {
      j["network"].erase("coupling_scale");
      j["network"].erase("edges");
    }
    j["network"]["topology"] = *o.topology;
  }
  if (o.n) j["network"]["n"] = *o.n;
  if (o.retries) j["pipeline"]["retries"] = *o.retries;
  if (o.parallel) j["pipeline"]["parallel"] = *o.parallel;
  if (o.desk_scale) j["pipeline"]["desk_scale"] = true;
  if (o.no_reuse) j["pipeline"]["reuse"] = false;
  return ismnet::RunConfig::from_json(j);
}

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--out-dir", o.out_dir, "run directory (default $ISMNET_OUT_DIR or ./ismnet_out)");
  app->add_option("--seed", o.seed, "run seed; every other seed is derived from it");
  app->add_option("--topology", o.topology, "fully_connected, ring, binary_tree, star or line");
  app->add_option("--n", o.n, "number of subsystems")->check(CLI::PositiveNumber);
  app->add_option("--retries", o.retries, "data-collection retries after an infeasible design");
  app->add_option("--parallel", o.parallel, "worker threads for per-subsystem stages")
      ->check(CLI::PositiveNumber);
  app->add_flag("--desk-scale", o.desk_scale, "cap N at 10 and the horizon at 10 s");
  app->add_flag("--no-reuse", o.no_reuse, "solve every subsystem separately");
}

int run_stage(const std::string& stage, const Overrides& o) {
  const ismnet::RunPaths paths{o.out_dir.empty() ? default_out_dir() : o.out_dir};
  const ismnet::Log log = [](const std::string& m) { std::cerr << m << "\n"; };
  const ismnet::RunConfig cfg = load_config(o, paths, stage != "collect" && stage != "run");

  if (stage == "run") {
    const auto out = ismnet::run_pipeline(cfg, paths, log);
    std::cout << ismnet::format_report({out.summary});
    return out.exit_code;
  }
  if (stage == "collect") {
    ismnet::stage_collect(cfg, paths, 0, log);
  } else if (stage == "synthesize") {
    ismnet::stage_synthesize(cfg, paths, log);
  } else if (stage == "ism") {
    ismnet::stage_ism(cfg, paths, log);
  } else if (stage == "compose") {
    if (!ismnet::stage_compose(cfg, paths, log)) return 2;
  } else if (stage == "simulate") {
    ismnet::stage_simulate(cfg, paths, log);
  } else if (stage == "verify") {
    return ismnet::stage_verify(cfg, paths, log).passed() ? 0 : 3;
  }
  return 0;
}

int report(const std::vector<std::string>& dirs, bool as_json) {
  std::vector<json> rows;
  for (const auto& d : dirs) rows.push_back(ismnet::io::read_json(ismnet::RunPaths{d}.summary()));
  if (as_json) {
    std::cout << json(rows).dump(2) << "\n";
  } else {
    std::cout << ismnet::format_report(rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven ISS certificates and integral sliding mode control for networks"};
  app.require_subcommand(1);
  Overrides o;
  std::string chosen;
  for (const char* name : {"collect", "synthesize", "ism", "compose", "simulate", "verify", "run"}) {
    static const std::map<std::string, std::string> help{
        {"collect", "excite each subsystem group and store the data matrices"},
        {"synthesize", "solve the ISS design for every group"},
        {"ism", "design the integral sliding mode layer"},
        {"compose", "check the small-gain condition and build the network CLF"},
        {"simulate", "run the closed loop and log trajectories"},
        {"verify", "recompute every verdict from the stored artifacts"},
        {"run", "all stages, retrying data collection on infeasibility"}};
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    add_common(sub, o);
    sub->callback([&chosen, name] { chosen = name; });
  }
  std::vector<std::string> report_dirs;
  bool report_json = false;
  CLI::App* rep = app.add_subcommand("report", "Table-1 style summary of finished runs");
  rep->add_option("dirs", report_dirs, "run directories")->required();
  rep->add_flag("--json", report_json, "print the structured summaries instead");
  rep->callback([&chosen] { chosen = "report"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (chosen == "report") return report(report_dirs, report_json);
    return run_stage(chosen, o);
  } catch (const ismnet::InfeasibleError& e) {
    std::cerr << "infeasible (" << e.family() << "): " << e.what() << "\n";
    return 2;
  } catch (const ismnet::RankError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ismnet::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ismnet::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ismnet::ProvenanceError& e) {
    std::cerr << "provenance: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
