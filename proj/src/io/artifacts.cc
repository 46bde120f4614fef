#include "ismnet/io/artifacts.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ismnet/error.h"
#include "ismnet/io/config.h"

namespace ismnet::io {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

std::string hash_json(const json& j) { return sha256_hex(j.dump()); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("write to " + path + " failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + " is not valid JSON: " + e.what());
  }
}

json make_artifact(std::string_view kind, const json& body,
                   const std::map<std::string, std::string>& inputs) {
  return {{"kind", kind}, {"provenance", {{"inputs", inputs}}}, {"body", body}};
}

const json& artifact_body(const json& artifact, std::string_view kind,
                          const std::map<std::string, std::string>& expected) {
  if (!artifact.is_object() || !artifact.contains("kind") || !artifact.contains("body")) {
    throw ProvenanceError("not an artifact file");
  }
  if (artifact["kind"] != kind) {
    throw ProvenanceError("expected a " + std::string(kind) + " artifact, found " +
                          artifact["kind"].get<std::string>());
  }
  const json& inputs = artifact["provenance"]["inputs"];
  for (const auto& [name, hash] : expected) {
    if (!inputs.contains(name)) throw ProvenanceError(std::string(kind) + " does not record input " + name);
    if (inputs[name] != hash) {
      throw ProvenanceError(std::string(kind) + " was produced from a different " + name + " (recorded " +
                            inputs[name].get<std::string>().substr(0, 12) + ", found " +
                            hash.substr(0, 12) + ")");
    }
  }
  return artifact["body"];
}

namespace {

// Wall-clock measurements differ between identical runs.
json without_timings(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) {
      if (k.size() < 8 || k.compare(k.size() - 8, 8, "_seconds") != 0) out[k] = without_timings(v);
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(without_timings(v));
    return out;
  }
  return j;
}

}  // namespace

std::string artifact_hash(const json& artifact) { return hash_json(without_timings(artifact)); }

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw DimensionError("CSV header and column count differ");
  }
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      if (!std::isnan(values(r, c))) out += format_double(values(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

CsvTable read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + " is empty");
  {
    std::istringstream h(line);
    std::string name;
    while (std::getline(h, name, ',')) t.header.push_back(name);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t end = line.find(',', start);
      const std::string field = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (field.empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        try {
          std::size_t used = 0;
          row.push_back(std::stod(field, &used));
          if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
          throw ConfigError(path + ": non-numeric field '" + field + "'");
        }
      }
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (row.size() != t.header.size()) throw ConfigError(path + ": row with the wrong number of fields");
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) t.values(r, c) = rows[r][c];
  }
  return t;
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
  const Eigen::Index T1 = tr.x.cols(), n = tr.x.rows(), m = tr.u.rows(), psi = tr.w.rows();
  std::vector<std::string> header{"t"};
  for (Eigen::Index k = 0; k < n; ++k) header.push_back("x" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < m; ++k) header.push_back("u" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < psi; ++k) header.push_back("w" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < n; ++k) header.push_back("xdot" + std::to_string(k + 1));
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(T1, 1 + 2 * n + m + psi, std::numeric_limits<double>::quiet_NaN());
  v.col(0) = tr.time;
  v.middleCols(1, n) = tr.x.transpose();
  const Eigen::Index T = tr.u.cols();
  v.block(0, 1 + n, T, m) = tr.u.transpose();
  v.middleCols(1 + n + m, psi) = tr.w.transpose();
  v.block(0, 1 + n + m + psi, T, n) = tr.xdot.transpose();
  write_csv(path, header, v);
}

json data_to_json(const DataMatrices& d) {
  auto tr = [](const Trajectory& t) {
    return json{{"time", vector_to_json(t.time)},
                {"x", matrix_to_json(t.x)},
                {"u", matrix_to_json(t.u)},
                {"w", matrix_to_json(t.w)},
                {"xdot", matrix_to_json(t.xdot)}};
  };
  return {{"subsystem", d.subsystem},
          {"I", matrix_to_json(d.I)},
          {"S", matrix_to_json(d.S)},
          {"W", matrix_to_json(d.W)},
          {"Sp", matrix_to_json(d.Sp)},
          {"Delta", matrix_to_json(d.Delta)},
          {"S_bar", matrix_to_json(d.S_bar)},
          {"W_bar", matrix_to_json(d.W_bar)},
          {"Sp_bar", matrix_to_json(d.Sp_bar)},
          {"Delta_bar", matrix_to_json(d.Delta_bar)},
          {"x0", vector_to_json(d.x0)},
          {"network_x0", vector_to_json(d.network_x0)},
          {"excited", tr(d.excited)},
          {"zero_input", tr(d.zero_input)}};
}

namespace {

// Matrices with zero rows serialize as [] and lose their column count.
Eigen::MatrixXd sized(const json& j, const std::string& what, Eigen::Index cols) {
  Eigen::MatrixXd m = matrix_from_json(j, what);
  if (m.rows() == 0) m.resize(0, cols);
  return m;
}

Trajectory trajectory_from_json(const json& j, const std::string& what) {
  Trajectory t;
  t.time = vector_from_json(j.at("time"), what + ".time");
  t.x = matrix_from_json(j.at("x"), what + ".x");
  t.u = sized(j.at("u"), what + ".u", t.x.cols() - 1);
  t.w = sized(j.at("w"), what + ".w", t.x.cols());
  t.xdot = matrix_from_json(j.at("xdot"), what + ".xdot");
  return t;
}

}  // namespace

DataMatrices data_from_json(const json& j) {
  try {
    DataMatrices d;
    d.subsystem = j.at("subsystem").get<int>();
    d.S = matrix_from_json(j.at("S"), "S");
    const Eigen::Index T = d.S.cols();
    d.I = matrix_from_json(j.at("I"), "I");
    d.W = sized(j.at("W"), "W", T);
    d.Sp = matrix_from_json(j.at("Sp"), "Sp");
    d.Delta = matrix_from_json(j.at("Delta"), "Delta");
    d.S_bar = matrix_from_json(j.at("S_bar"), "S_bar");
    d.W_bar = sized(j.at("W_bar"), "W_bar", T);
    d.Sp_bar = matrix_from_json(j.at("Sp_bar"), "Sp_bar");
    d.Delta_bar = matrix_from_json(j.at("Delta_bar"), "Delta_bar");
    d.x0 = vector_from_json(j.at("x0"), "x0");
    d.network_x0 = vector_from_json(j.at("network_x0"), "network_x0");
    d.excited = trajectory_from_json(j.at("excited"), "excited");
    d.zero_input = trajectory_from_json(j.at("zero_input"), "zero_input");
    return d;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed data file: ") + e.what());
  }
}

json certificate_to_json(const IssCertificate& c) {
  return {{"P", matrix_to_json(c.P)},
          {"K", matrix_to_json(c.K)},
          {"G2", matrix_to_json(c.G2)},
          {"Y", matrix_to_json(c.Y)},
          {"Phi", matrix_to_json(c.Phi)},
          {"kappa", c.kappa},
          {"mu", c.mu},
          {"alpha1", c.alpha1},
          {"alpha2", c.alpha2},
          {"rho", c.rho},
          {"objective", objective_name(c.objective)},
          {"gain_bound", c.gain_bound},
          {"newton_steps", c.newton_steps},
          {"solve_seconds", c.solve_seconds}};
}

IssCertificate certificate_from_json(const json& j) {
  try {
    IssCertificate c;
    c.P = matrix_from_json(j.at("P"), "P");
    c.K = matrix_from_json(j.at("K"), "K");
    c.Y = matrix_from_json(j.at("Y"), "Y");
    c.G2 = sized(j.at("G2"), "G2", 0);
    if (c.G2.rows() == 0) c.G2.resize(c.Y.rows(), 0);
    c.Phi = matrix_from_json(j.at("Phi"), "Phi");
    c.kappa = j.at("kappa").get<double>();
    c.mu = j.at("mu").get<double>();
    c.alpha1 = j.at("alpha1").get<double>();
    c.alpha2 = j.at("alpha2").get<double>();
    c.rho = j.at("rho").get<double>();
    c.objective = parse_objective(j.at("objective").get<std::string>());
    c.gain_bound = j.at("gain_bound").get<double>();
    c.newton_steps = j.at("newton_steps").get<int>();
    c.solve_seconds = j.at("solve_seconds").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed certificate: ") + e.what());
  }
}

json ism_to_json(const IsmController& c) {
  return {{"C", matrix_to_json(c.C)},
          {"CB", matrix_to_json(c.CB)},
          {"cb_min", c.cb_min},
          {"cb_max", c.cb_max},
          {"theta", c.theta},
          {"gamma_sup", c.gamma_sup},
          {"mode", regularization_name(c.mode)},
          {"eps_bl", c.eps_bl}};
}

IsmController ism_from_json(const json& j) {
  try {
    IsmController c;
    c.C = matrix_from_json(j.at("C"), "C");
    c.CB = matrix_from_json(j.at("CB"), "CB");
    c.cb_min = j.at("cb_min").get<double>();
    c.cb_max = j.at("cb_max").get<double>();
    c.theta = j.at("theta").get<double>();
    c.gamma_sup = j.at("gamma_sup").get<double>();
    c.mode = parse_regularization(j.at("mode").get<std::string>());
    c.eps_bl = j.at("eps_bl").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ISM design: ") + e.what());
  }
}

json validation_to_json(const ValidationReport& r) {
  json j = {{"ok", r.ok()},
            {"residual_cancellation", r.residual_cancellation},
            {"residual_consistency", r.residual_consistency},
            {"residual_parametrization", r.residual_parametrization},
            {"lmi_max_eig", r.lmi_max_eig},
            {"p_min_eig", r.p_min_eig},
            {"gain_formula_error", r.gain_formula_error},
            {"monte_carlo",
             {{"samples", r.monte_carlo.samples},
              {"violations", r.monte_carlo.violations},
              {"conditioning_violations", r.monte_carlo.conditioning_violations},
              {"max_violation", r.monte_carlo.max_violation}}}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

json composition_to_json(const NetworkCertificate& nc) {
  const auto& sg = nc.smallgain;
  json j = {{"feasible", nc.feasible()},
            {"kappa", nc.kappa()},
            {"max_xi", nc.verdict.max_xi},
            {"argmax", nc.verdict.argmax},
            {"alpha1", nc.alpha1},
            {"alpha2", nc.alpha2},
            {"strict_dense", sg.strict_dense},
            {"topology", topology_name(sg.topology->kind())},
            {"n", sg.size()},
            {"xi", vector_to_json(sg.Xi)}};
  if (!nc.verdict.hint.empty()) j["hint"] = nc.verdict.hint;
  return j;
}

void write_xi_csv(const std::string& path, const SmallGainData& d) {
  Eigen::MatrixXd v(d.size(), 5);
  for (int j = 0; j < d.size(); ++j) {
    v.row(j) << j + 1, d.kappa[j], d.alpha1[j], d.rho[j], d.Xi[j];
  }
  write_csv(path, {"j", "kappa", "alpha1", "rho", "xi"}, v);
}

void write_log_csv(const std::string& prefix, const TrajectoryLog& log, const NetworkModel& net,
                   int every) {
  if (every < 1) throw ConfigError("downsampling factor must be >= 1");
  const Eigen::Index cols = log.x.cols();
  const bool has_v = !log.clf.empty();
  std::vector<std::string> header{"t", "norm", "V"};
  for (int i = 0; i < net.size(); ++i) {
    for (int k = 0; k < net.subsystem(i).state_dim(); ++k) {
      header.push_back("x" + std::to_string(i + 1) + "_" + std::to_string(k + 1));
    }
  }
  for (Eigen::Index r = 0; r < log.sigma.rows(); ++r) header.push_back("sigma_" + std::to_string(r + 1));
  Eigen::MatrixXd v(cols, static_cast<Eigen::Index>(header.size()));
  for (Eigen::Index c = 0; c < cols; ++c) {
    const long k = log.index_at(log.time[c]);
    v(c, 0) = log.time[c];
    v(c, 1) = log.norm[k];
    v(c, 2) = has_v ? log.clf[k] : std::numeric_limits<double>::quiet_NaN();
    v.row(c).segment(3, log.x.rows()) = log.x.col(c).transpose();
    v.row(c).tail(log.sigma.rows()) = log.sigma.col(c).transpose();
  }
  write_csv(prefix + "_states.csv", header, v);

  const long n = log.steps() / every + 1;
  Eigen::MatrixXd s(n, has_v ? 3 : 2);
  for (long r = 0; r < n; ++r) {
    const long k = r * every;
    s(r, 0) = log.time_at(k);
    s(r, 1) = log.norm[k];
    if (has_v) s(r, 2) = log.clf[k];
  }
  write_csv(prefix + "_norm.csv", has_v ? std::vector<std::string>{"t", "norm", "V"}
                                        : std::vector<std::string>{"t", "norm"},
            s);
}

json gas_to_json(const GasReport& r) {
  return {{"passed", r.passed},
          {"shrink_ok", r.shrink_ok},
          {"envelope_ok", r.envelope_ok},
          {"x0_norm", r.x0_norm},
          {"deadline_norm", r.deadline_norm},
          {"decay_exponent", std::isfinite(r.decay_exponent) ? json(r.decay_exponent) : json(nullptr)},
          {"envelope_gain", r.envelope_gain},
          {"tail_max", r.tail_max},
          {"floor", r.floor},
          {"diagnosis", r.diagnosis}};
}

json sliding_to_json(const SlidingReport& r) {
  return {{"passed", r.passed},
          {"band", r.band},
          {"max_sigma", r.max_sigma},
          {"worst_subsystem", r.worst_subsystem + 1},
          {"worst_time", r.worst_time},
          {"starts_on_surface", r.starts_on_surface}};
}

json decay_to_json(const DecayReport& r) {
  return {{"passed", r.passed},
          {"kappa", r.kappa},
          {"checked", r.checked},
          {"satisfied", r.satisfied},
          {"fraction", r.fraction},
          {"worst_excess", std::isfinite(r.worst_excess) ? json(r.worst_excess) : json(nullptr)},
          {"worst_time", r.worst_time}};
}

}  // namespace ismnet::io
