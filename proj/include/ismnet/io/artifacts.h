#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ismnet/composition/composition.h"
#include "ismnet/experiment/experiment.h"
#include "ismnet/ism/ism.h"
#include "ismnet/sim/sim.h"
#include "ismnet/synthesis/synthesis.h"

namespace ismnet::io {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes);
/// Hash of the canonical (sorted-key, compact) serialization.
std::string hash_json(const json& j);

/// 17 significant digits: parses back to the same double.
std::string format_double(double v);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

/// Every artifact is {"kind", "provenance": {"inputs": {name: hash}}, "body"}.
json make_artifact(std::string_view kind, const json& body,
                   const std::map<std::string, std::string>& inputs);
/// Body of an artifact of the given kind; throws ProvenanceError when the
/// kind differs or a listed input hash does not match `expected`.
const json& artifact_body(const json& artifact, std::string_view kind,
                          const std::map<std::string, std::string>& expected = {});
/// Ignores fields named *_seconds, so reruns with one seed hash alike.
std::string artifact_hash(const json& artifact);

// Delimiter-separated numeric tables.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // empty fields read back as NaN
};
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
CsvTable read_csv(const std::string& path);

/// t, x1..xn, u1..um, w1..wpsi, xdot1..xdotn; the final sample has no input
/// or derivative, and those fields are left empty.
void write_trajectory_csv(const std::string& path, const Trajectory& tr);

json data_to_json(const DataMatrices& d);
DataMatrices data_from_json(const json& j);

json certificate_to_json(const IssCertificate& cert);
IssCertificate certificate_from_json(const json& j);
json ism_to_json(const IsmController& c);
IsmController ism_from_json(const json& j);
json validation_to_json(const ValidationReport& r);

json composition_to_json(const NetworkCertificate& nc);
/// j, kappa_j, alpha1_j, rho_j, Xi_j.
void write_xi_csv(const std::string& path, const SmallGainData& d);

/// <prefix>_states.csv (t, |x|, V, x per subsystem, sigma per subsystem) at
/// the downsampled times, and <prefix>_norm.csv (t, |x|) every `every` steps.
void write_log_csv(const std::string& prefix, const TrajectoryLog& log, const NetworkModel& net,
                   int every);
json gas_to_json(const GasReport& r);
json sliding_to_json(const SlidingReport& r);
json decay_to_json(const DecayReport& r);

}  // namespace ismnet::io
