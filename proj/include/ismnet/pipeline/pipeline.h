#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ismnet/composition/composition.h"
#include "ismnet/io/config.h"
#include "ismnet/sim/sim.h"

namespace ismnet {

/// Subsystems that share one data set, one certificate and one ISM design.
/// Without reuse every subsystem is its own group.
std::vector<std::vector<int>> group_subsystems(const NetworkModel& net, bool reuse);

/// Output layout of a run directory.
struct RunPaths {
  std::string root;
  std::string config() const { return root + "/config.json"; }
  std::string data(int g) const { return root + "/data/group_" + std::to_string(g + 1) + ".json"; }
  std::string trajectory(int i, const std::string& which) const {
    return root + "/data/subsystem_" + std::to_string(i + 1) + "_" + which + ".csv";
  }
  std::string certificate(int g) const {
    return root + "/certificates/group_" + std::to_string(g + 1) + ".json";
  }
  std::string composition() const { return root + "/composition.json"; }
  std::string xi_table() const { return root + "/xi.csv"; }
  std::string sim_prefix(const std::string& run) const { return root + "/sim/" + run; }
  std::string simulation() const { return root + "/sim/simulation.json"; }
  std::string verification() const { return root + "/verification.json"; }
  std::string summary() const { return root + "/run.json"; }
  std::string report() const { return root + "/report.txt"; }
};

/// Progress messages go through this hook (stderr in the CLI).
using Log = std::function<void(const std::string&)>;

/// Stage entry points. Each reads the artifacts of the previous stage from
/// the run directory, checks their provenance and writes its own.
/// `attempt` selects fresh experiment seeds of the same length on
/// retries. All return the number of groups processed or a verdict object.
int stage_collect(const RunConfig& cfg, const RunPaths& paths, int attempt, const Log& log);
int stage_synthesize(const RunConfig& cfg, const RunPaths& paths, const Log& log);
int stage_ism(const RunConfig& cfg, const RunPaths& paths, const Log& log);
/// Returns whether the small-gain condition holds.
bool stage_compose(const RunConfig& cfg, const RunPaths& paths, const Log& log);
void stage_simulate(const RunConfig& cfg, const RunPaths& paths, const Log& log);

struct Verification {
  bool certificates_ok = false;
  bool gas_ok = false;
  bool sliding_ok = false;
  bool decay_ok = false;
  bool negative_ok = true;  // true when the negative control was not requested
  nlohmann::json details;
  bool passed() const { return certificates_ok && gas_ok && sliding_ok && decay_ok && negative_ok; }
};

/// Recomputes every verdict from the stored logs and certificates.
/// Throws ProvenanceError when an artifact does not match its inputs.
Verification stage_verify(const RunConfig& cfg, const RunPaths& paths, const Log& log);

struct RunOutcome {
  int exit_code = 0;  // 0 pass, 2 infeasible, 3 verification failure
  std::string message;
  nlohmann::json summary;
};

/// All stages in order, retrying data collection when synthesis or the
/// small-gain test fails; writes run.json and report.txt.
RunOutcome run_pipeline(const RunConfig& cfg, const RunPaths& paths, const Log& log);

/// Table with one row per run summary (topology, N, T, seconds per
/// subsystem, kappa, alpha1, alpha2, verdicts).
std::string format_report(const std::vector<nlohmann::json>& summaries);

}  // namespace ismnet
