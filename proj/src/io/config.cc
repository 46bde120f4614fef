#include "ismnet/io/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "ismnet/error.h"
#include "ismnet/model/benchmark.h"

namespace ismnet {

using nlohmann::json;

namespace {

// Reads the fields of one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + " must be an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      out = v->get<int>();
    }
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        throw ConfigError(where(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  void read(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + " must be an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (find(key)) {
      T value{};
      read(key, value);
      out = value;
    }
  }
  /// Enumerations given by name.
  template <class Parse, class T>
  void read_enum(const std::string& key, T& out, Parse parse) {
    std::string name;
    if (find(key)) {
      read(key, name);
      out = parse(name);
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown field " + where(it.key()));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Perturbation read_perturbation(const json& j, const std::string& path) {
  Section s(j, path);
  Perturbation p;
  s.read("amplitude", p.amplitude);
  s.read("frequency", p.frequency);
  s.read("phase", p.phase);
  s.read("channel_phase_step", p.channel_phase_step);
  p.gamma_sup = p.amplitude;
  s.read("gamma_sup", p.gamma_sup);
  s.finish();
  if (!(p.amplitude >= 0.0) || !(p.gamma_sup >= 0.0)) {
    throw ConfigError(path + ": amplitude and gamma_sup must be >= 0");
  }
  return p;
}

json perturbation_json(const Perturbation& p) {
  return {{"amplitude", p.amplitude},
          {"frequency", p.frequency},
          {"phase", p.phase},
          {"channel_phase_step", p.channel_phase_step},
          {"gamma_sup", p.gamma_sup}};
}

void read_network(const json& j, NetworkSpec& n) {
  Section s(j, "network");
  n.topology = TopologyKind::kRing;
  if (s.find("topology")) {
    std::string name;
    s.read("topology", name);
    n.topology = parse_topology_kind(name);
  }
  s.read("n", n.n);
  s.read("coupling_scale", n.coupling_scale);
  if (const json* c = s.find("coupling")) n.coupling = matrix_from_json(*c, "network.coupling");
  if (const json* e = s.find("edges")) {
    if (!e->is_array()) throw ConfigError("network.edges must be an array of [from, to] pairs");
    for (const auto& pair : *e) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
          !pair[1].is_number_integer()) {
        throw ConfigError("network.edges must be an array of [from, to] pairs");
      }
      n.edges.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
  }
  s.read("state_dim", n.state_dim);
  if (const json* d = s.find("dictionary")) {
    Section ds(*d, "network.dictionary");
    if (const json* t = ds.find("terms")) {
      if (!t->is_array()) throw ConfigError("network.dictionary.terms must be an array of strings");
      for (const auto& term : *t) {
        if (!term.is_string()) throw ConfigError("network.dictionary.terms must be an array of strings");
        n.dictionary.push_back(term.get<std::string>());
      }
    }
    ds.read("monomials_up_to", n.monomials_up_to);
    ds.finish();
  }
  if (const json* a = s.find("A")) n.A = matrix_from_json(*a, "network.A");
  if (const json* b = s.find("B")) n.B = matrix_from_json(*b, "network.B");
  if (const json* p = s.find("perturbation")) n.perturbation = read_perturbation(*p, "network.perturbation");
  s.read("seeded_phase", n.seeded_phase);
  s.finish();
  if (n.n < 1) throw ConfigError("network.n must be >= 1");
  if (n.coupling_scale && n.coupling) {
    throw ConfigError("network: give coupling_scale or coupling, not both");
  }
  if (!n.benchmark() && (!n.A || !n.B)) {
    throw ConfigError("network: a custom subsystem needs dictionary, A and B");
  }
  if (n.topology == TopologyKind::kCustom && n.edges.empty() && n.n > 1) {
    // An uncoupled network is allowed but almost always a typo.
    throw ConfigError("network: custom topology without edges; list them under network.edges");
  }
  if (n.topology != TopologyKind::kCustom && !n.edges.empty()) {
    throw ConfigError("network.edges is only valid with topology \"custom\"");
  }
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array()) throw ConfigError(what + " must be an array of rows");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(what + " has rows of different lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw ConfigError(what + " must contain numbers only");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(what + " must be an array of numbers");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

NetworkModel NetworkSpec::build(std::uint64_t seed) const {
  SubsystemModel base = benchmark_subsystem();
  if (!benchmark()) {
    auto dict = std::make_shared<const Dictionary>(Dictionary::parse(state_dim, dictionary, monomials_up_to));
    if (A->rows() != state_dim || A->cols() != dict->size()) {
      throw ConfigError("network.A must be state_dim x dictionary size (" + std::to_string(state_dim) +
                        " x " + std::to_string(dict->size()) + ")");
    }
    if (B->rows() != state_dim) throw ConfigError("network.B must have state_dim rows");
    base = SubsystemModel(dict, *A, *B, perturbation.value_or(Perturbation{}));
  } else if (perturbation) {
    base = SubsystemModel(base.dictionary_ptr(), base.A(), base.B(), *perturbation);
  }
  const int sd = base.state_dim();
  std::vector<SubsystemModel> subs;
  subs.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (seeded_phase) {
      subs.emplace_back(base.dictionary_ptr(), base.A(), base.B(),
                        base.perturbation().with_seeded_phase(seed, i));
    } else {
      subs.push_back(base);
    }
  }
  Eigen::MatrixXd weight;
  if (coupling) {
    weight = *coupling;
  } else if (coupling_scale) {
    weight = *coupling_scale * Eigen::MatrixXd::Identity(sd, sd).rowwise().reverse();
  } else {
    weight = default_coupling(topology, sd);
  }
  if (weight.rows() != sd || weight.cols() != sd) throw ConfigError("network.coupling must be state_dim x state_dim");
  if (topology == TopologyKind::kCustom) {
    std::vector<Edge> e;
    for (const auto& [from, to] : edges) e.push_back({from - 1, to - 1, 0});
    return NetworkModel(std::move(subs), Topology::custom(n, std::move(e), {weight}));
  }
  return NetworkModel(std::move(subs), Topology::build(topology, n, weight));
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Section top(j, "config");
  top.read("seed", c.seed);
  if (const json* n = top.find("network")) read_network(*n, c.network);

  if (const json* e = top.find("experiment")) {
    Section s(*e, "experiment");
    s.read("samples", c.experiment.samples);
    s.read("tau", c.experiment.tau);
    s.read("amplitude", c.experiment.amplitude);
    s.read("x0_box", c.experiment.x0_box);
    s.read("substeps", c.experiment.substeps);
    s.read_enum("derivative_mode", c.experiment.derivative_mode, parse_derivative_mode);
    s.finish();
  }
  if (const json* e = top.find("synthesis")) {
    Section s(*e, "synthesis");
    s.read("kappa", c.synthesis.kappa);
    s.read("mu", c.synthesis.mu);
    s.read("kappa_grid", c.pipeline.kappa_grid);
    s.read("mu_grid", c.pipeline.mu_grid);
    s.read_enum("objective", c.synthesis.objective, parse_objective);
    s.read("eps_pd", c.synthesis.eps_pd);
    s.read("gain_bound", c.synthesis.gain_bound);
    s.read("gain_bound_max", c.synthesis.gain_bound_max);
    s.read("ceiling_slack", c.synthesis.ceiling_slack);
    s.finish();
  }
  if (const json* e = top.find("ism")) {
    Section s(*e, "ism");
    if (const json* C = s.find("C")) c.ism.C = matrix_from_json(*C, "ism.C");
    s.read("margin", c.ism.margin);
    s.read_enum("mode", c.ism.mode, parse_regularization);
    s.read("eps_bl", c.ism.eps_bl);
    s.finish();
  }
  if (const json* e = top.find("sim")) {
    Section s(*e, "sim");
    s.read("horizon", c.sim.horizon);
    s.read("h", c.sim.h);
    s.read_enum("scheme", c.sim.scheme, parse_scheme);
    s.read("perturbation", c.sim.perturbation);
    s.read_enum("controllers", c.sim.controllers, parse_controller_mode);
    s.read("x0_box", c.sim.x0_box);
    if (const json* x0 = s.find("x0")) c.sim.x0 = vector_from_json(*x0, "sim.x0");
    s.read("log_every", c.sim.log_every);
    s.read("threads", c.sim.threads);
    s.read("enforce_step_rule", c.sim.enforce_step_rule);
    s.finish();
  }
  if (const json* e = top.find("verify")) {
    Section s(*e, "verify");
    s.read("shrink", c.verify.shrink);
    s.read("deadline", c.verify.deadline);
    s.read("gas_floor", c.verify.gas_floor);
    s.read("sigma_band", c.verify.sigma_band);
    s.read("mc_samples", c.verify.mc_samples);
    s.read("mc_radius", c.verify.mc_radius);
    s.read("decay_slack", c.verify.decay_slack);
    s.read("decay_fraction", c.verify.decay_fraction);
    s.read("nominal_horizon", c.verify.nominal_horizon);
    s.read("negative_control", c.verify.negative_control);
    s.read("residual_level", c.verify.residual_level);
    s.finish();
  }
  if (const json* e = top.find("pipeline")) {
    Section s(*e, "pipeline");
    s.read("retries", c.pipeline.retries);
    s.read("reuse", c.pipeline.reuse);
    s.read("parallel", c.pipeline.parallel);
    s.read("strict_dense", c.pipeline.strict_dense);
    s.read("desk_scale", c.pipeline.desk_scale);
    s.finish();
  }
  top.finish();
  // Unless given, the GAS deadline is the end of the run.
  const bool deadline_given = j.contains("verify") && j["verify"].is_object() && j["verify"].contains("deadline");
  if (!deadline_given) c.verify.deadline = c.sim.horizon;
  c.finalize();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::finalize() {
  if (pipeline.desk_scale) {
    // Binary trees need N = 2^l - 1; 7 is the largest such N not above 10.
    network.n = std::min(network.n, network.topology == TopologyKind::kBinaryTree ? 7 : 10);
    sim.horizon = std::min(sim.horizon, 10.0);
    verify.deadline = std::min(verify.deadline, sim.horizon);
    verify.nominal_horizon = std::min(verify.nominal_horizon, sim.horizon);
  }
  if (network.topology == TopologyKind::kCustom) {
    for (const auto& [from, to] : network.edges) {
      if (from < 1 || from > network.n || to < 1 || to > network.n) {
        throw ConfigError("network.edges: subsystem labels run from 1 to n");
      }
    }
  }
  if (pipeline.retries < 0) throw ConfigError("pipeline.retries must be >= 0");
  if (pipeline.parallel < 1) throw ConfigError("pipeline.parallel must be >= 1");
  if (verify.mc_samples < 0) throw ConfigError("verify.mc_samples must be >= 0");
  if (!(verify.shrink > 0.0)) throw ConfigError("verify.shrink must be > 0");
  if (!(verify.gas_floor > 0.0)) throw ConfigError("verify.gas_floor must be > 0");
  if (!(verify.nominal_horizon > 0.0)) throw ConfigError("verify.nominal_horizon must be > 0");
  if (verify.deadline > sim.horizon + 1e-12) throw ConfigError("verify.deadline exceeds sim.horizon");
  for (double k : pipeline.kappa_grid) {
    if (!(k > 0.0)) throw ConfigError("synthesis.kappa_grid entries must be > 0");
  }
  for (double m : pipeline.mu_grid) {
    if (!(m > 0.0)) throw ConfigError("synthesis.mu_grid entries must be > 0");
  }
  synthesis.validate();
  ism.validate();
  sim.seed = seed;
  experiment.seed = seed;
}

json RunConfig::to_json() const {
  json net = {{"topology", topology_name(network.topology)},
              {"n", network.n},
              {"state_dim", network.state_dim},
              {"seeded_phase", network.seeded_phase}};
  if (network.coupling_scale) net["coupling_scale"] = *network.coupling_scale;
  if (network.coupling) net["coupling"] = matrix_to_json(*network.coupling);
  if (!network.edges.empty()) {
    json e = json::array();
    for (const auto& [from, to] : network.edges) e.push_back({from, to});
    net["edges"] = e;
  }
  if (!network.benchmark()) {
    net["dictionary"] = {{"terms", network.dictionary}, {"monomials_up_to", network.monomials_up_to}};
    net["A"] = matrix_to_json(*network.A);
    net["B"] = matrix_to_json(*network.B);
  }
  if (network.perturbation) net["perturbation"] = perturbation_json(*network.perturbation);

  json ism_j = {{"margin", ism.margin}, {"mode", regularization_name(ism.mode)}, {"eps_bl", ism.eps_bl}};
  if (ism.C) ism_j["C"] = matrix_to_json(*ism.C);
  json sim_j = {{"horizon", sim.horizon},
                {"h", sim.h},
                {"scheme", scheme_name(sim.scheme)},
                {"perturbation", sim.perturbation},
                {"controllers", controller_mode_name(sim.controllers)},
                {"x0_box", sim.x0_box},
                {"log_every", sim.log_every},
                {"threads", sim.threads},
                {"enforce_step_rule", sim.enforce_step_rule}};
  if (sim.x0) sim_j["x0"] = vector_to_json(*sim.x0);
  json verify_j = {{"shrink", verify.shrink},
                   {"deadline", verify.deadline},
                   {"gas_floor", verify.gas_floor},
                   {"mc_samples", verify.mc_samples},
                   {"mc_radius", verify.mc_radius},
                   {"decay_slack", verify.decay_slack},
                   {"decay_fraction", verify.decay_fraction},
                   {"nominal_horizon", verify.nominal_horizon},
                   {"negative_control", verify.negative_control},
                   {"residual_level", verify.residual_level}};
  if (verify.sigma_band) verify_j["sigma_band"] = *verify.sigma_band;
  return {{"seed", seed},
          {"network", net},
          {"experiment",
           {{"samples", experiment.samples},
            {"tau", experiment.tau},
            {"amplitude", experiment.amplitude},
            {"x0_box", experiment.x0_box},
            {"substeps", experiment.substeps},
            {"derivative_mode", derivative_mode_name(experiment.derivative_mode)}}},
          {"synthesis",
           {{"kappa", synthesis.kappa},
            {"mu", synthesis.mu},
            {"kappa_grid", pipeline.kappa_grid},
            {"mu_grid", pipeline.mu_grid},
            {"objective", objective_name(synthesis.objective)},
            {"eps_pd", synthesis.eps_pd},
            {"gain_bound", synthesis.gain_bound},
            {"gain_bound_max", synthesis.gain_bound_max},
            {"ceiling_slack", synthesis.ceiling_slack}}},
          {"ism", ism_j},
          {"sim", sim_j},
          {"verify", verify_j},
          {"pipeline",
           {{"retries", pipeline.retries},
            {"reuse", pipeline.reuse},
            {"parallel", pipeline.parallel},
            {"strict_dense", pipeline.strict_dense},
            {"desk_scale", pipeline.desk_scale}}}};
}

}  // namespace ismnet
