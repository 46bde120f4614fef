#include "ismnet/pipeline/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ismnet/error.h"
#include "ismnet/io/artifacts.h"

namespace ismnet {

using nlohmann::json;
namespace fio = io;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs fn(g) for every group on up to `threads` workers. The first failure
// in group order is rethrown after all workers finish.
void for_each_group(int groups, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(groups);
  const int workers = std::max(1, std::min(threads, groups));
  if (workers == 1) {
    for (int g = 0; g < groups; ++g) fn(g);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int g = w; g < groups; g += workers) {
        try {
          fn(g);
        } catch (...) {
          errors[g] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t experiment_seed(std::uint64_t seed, int attempt, int tries) {
  if (attempt == 0 && tries == 0) return seed;
  return derive_seed(seed, 1000003 * (attempt + 1) + tries);
}

json one_based(const std::vector<int>& members) {
  json a = json::array();
  for (int i : members) a.push_back(i + 1);
  return a;
}

std::string section_hash(const json& j) { return fio::hash_json(j); }

std::string network_hash(const RunConfig& cfg) {
  const json full = cfg.to_json();
  return section_hash({{"seed", full["seed"]}, {"network", full["network"]}, {"pipeline_reuse", cfg.pipeline.reuse}});
}

std::string experiment_hash(const RunConfig& cfg) { return section_hash(cfg.to_json()["experiment"]); }
std::string synthesis_hash(const RunConfig& cfg) { return section_hash(cfg.to_json()["synthesis"]); }
std::string ism_hash(const RunConfig& cfg) { return section_hash(cfg.to_json()["ism"]); }
std::string sim_hash(const RunConfig& cfg) {
  const json full = cfg.to_json();
  return section_hash({{"sim", full["sim"]}, {"verify", full["verify"]}});
}

struct Context {
  NetworkModel net;
  std::vector<std::vector<int>> groups;
  std::vector<int> group_of;
};

Context context(const RunConfig& cfg) {
  Context c{cfg.network.build(cfg.seed), {}, {}};
  c.groups = group_subsystems(c.net, cfg.pipeline.reuse);
  c.group_of.assign(c.net.size(), -1);
  for (std::size_t g = 0; g < c.groups.size(); ++g) {
    for (int i : c.groups[g]) c.group_of[i] = static_cast<int>(g);
  }
  return c;
}

// Loaded and provenance-checked stage outputs.
struct Loaded {
  json data_artifact, cert_artifact;
  DataMatrices data;
  IssCertificate cert;
  std::optional<IsmController> ism;
};

Loaded load_group(const RunConfig& cfg, const RunPaths& paths, int g, bool need_ism) {
  Loaded l;
  l.data_artifact = fio::read_json(paths.data(g));
  const json& db = fio::artifact_body(l.data_artifact, "data",
                                      {{"network", network_hash(cfg)}, {"experiment", experiment_hash(cfg)}});
  l.data = fio::data_from_json(db.at("data"));
  l.cert_artifact = fio::read_json(paths.certificate(g));
  const json& cb = fio::artifact_body(l.cert_artifact, "certificate",
                                      {{"data", fio::artifact_hash(l.data_artifact)},
                                       {"synthesis", synthesis_hash(cfg)}});
  l.cert = fio::certificate_from_json(cb.at("certificate"));
  if (cb.contains("ism")) {
    fio::artifact_body(l.cert_artifact, "certificate", {{"ism", ism_hash(cfg)}});
    l.ism = fio::ism_from_json(cb["ism"].at("design"));
  } else if (need_ism) {
    throw ProvenanceError("certificate " + paths.certificate(g) + " has no ISM design; run the ism stage");
  }
  return l;
}

NetworkCertificate load_composition(const RunConfig& cfg, const RunPaths& paths, const Context& ctx,
                                    std::vector<Loaded>& groups, bool need_ism) {
  const json art = fio::read_json(paths.composition());
  std::map<std::string, std::string> expected;
  groups.clear();
  for (int g = 0; g < static_cast<int>(ctx.groups.size()); ++g) {
    groups.push_back(load_group(cfg, paths, g, need_ism));
    expected["certificate_" + std::to_string(g + 1)] = fio::artifact_hash(groups.back().cert_artifact);
  }
  fio::artifact_body(art, "composition", expected);
  std::vector<IssCertificate> certs;
  for (const auto& l : groups) certs.push_back(l.cert);
  return compose(std::move(certs), ctx.group_of, ctx.net.topology(), cfg.pipeline.strict_dense);
}

TrajectoryLog log_from_csv(const std::string& path, double h) {
  const auto t = fio::read_csv(path);
  TrajectoryLog log;
  log.h = h;
  const Eigen::Index rows = t.values.rows();
  if (rows == 0) return log;
  log.t0 = t.values(0, 0);
  log.norm.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) log.norm[r] = t.values(r, 1);
  if (t.values.cols() > 2 && !std::isnan(t.values(0, 2))) {
    log.clf.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) log.clf[r] = t.values(r, 2);
  }
  return log;
}

}  // namespace

std::vector<std::vector<int>> group_subsystems(const NetworkModel& net, bool reuse) {
  std::vector<std::vector<int>> groups;
  std::vector<Eigen::MatrixXd> coupling;
  for (int i = 0; i < net.size(); ++i) {
    const auto& s = net.subsystem(i);
    const Eigen::MatrixXd D = net.coupling_matrix(i);
    int found = -1;
    if (reuse) {
      for (std::size_t g = 0; g < groups.size() && found < 0; ++g) {
        const auto& r = net.subsystem(groups[g].front());
        // The perturbation phase does not enter the data or the designs.
        if (r.dictionary() == s.dictionary() && r.A() == s.A() && r.B() == s.B() &&
            r.perturbation().gamma_sup == s.perturbation().gamma_sup &&
            coupling[g].rows() == D.rows() && coupling[g].cols() == D.cols() && coupling[g] == D) {
          found = static_cast<int>(g);
        }
      }
    }
    if (found < 0) {
      groups.push_back({i});
      coupling.push_back(D);
    } else {
      groups[found].push_back(i);
    }
  }
  return groups;
}

int stage_collect(const RunConfig& cfg, const RunPaths& paths, int attempt, const Log& log) {
  const Context ctx = context(cfg);
  fio::write_json(paths.config(), cfg.to_json());
  const int G = static_cast<int>(ctx.groups.size());
  std::mutex log_mu;
  for_each_group(G, cfg.pipeline.parallel, [&](int g) {
    const int rep = ctx.groups[g].front();
    // Retries draw fresh trajectories of the same length: longer open-loop
    // windows run into finite escape on polynomial dynamics.
    ExperimentConfig e = cfg.experiment;
    const auto start = std::chrono::steady_clock::now();
    std::optional<DataMatrices> data;
    std::string why;
    int tries = 0;
    for (; tries <= cfg.pipeline.retries; ++tries) {
      e.seed = experiment_seed(cfg.seed, attempt, tries);
      try {
        auto d = collect_trajectories(ctx.net, rep, e);
        const auto rich = check_richness(d);
        if (rich.ok()) {
          data = std::move(d);
          break;
        }
        why = rich.diagnosis();
      } catch (const DivergenceError& err) {
        why = err.what();
      }
      std::lock_guard<std::mutex> lock(log_mu);
      log("collect: subsystem " + std::to_string(rep + 1) + " seed " + std::to_string(e.seed) +
          " rejected (" + why + "); collecting different trajectories");
    }
    if (!data) {
      throw RankError("subsystem " + std::to_string(rep + 1) + ": no rich data after " +
                      std::to_string(tries) + " experiments: " + why);
    }
    const double secs = seconds_since(start);
    fio::write_trajectory_csv(paths.trajectory(rep, "excited"), data->excited);
    fio::write_trajectory_csv(paths.trajectory(rep, "zero_input"), data->zero_input);
    const json body = {{"group", g + 1},
                       {"members", one_based(ctx.groups[g])},
                       {"representative", rep + 1},
                       {"seed", e.seed},
                       {"samples", e.samples},
                       {"attempt", attempt},
                       {"collect_seconds", secs},
                       {"data", fio::data_to_json(*data)}};
    fio::write_json(paths.data(g), fio::make_artifact("data", body,
                                                      {{"network", network_hash(cfg)},
                                                       {"experiment", experiment_hash(cfg)}}));
  });
  log("collect: " + std::to_string(G) + " data set(s) for " + std::to_string(ctx.net.size()) +
      " subsystem(s)");
  return G;
}

int stage_synthesize(const RunConfig& cfg, const RunPaths& paths, const Log& log) {
  const Context ctx = context(cfg);
  const int G = static_cast<int>(ctx.groups.size());
  std::vector<std::pair<double, double>> candidates{{cfg.synthesis.kappa, cfg.synthesis.mu}};
  const std::vector<double> mus = cfg.pipeline.mu_grid.empty() ? std::vector<double>{cfg.synthesis.mu}
                                                               : cfg.pipeline.mu_grid;
  const std::vector<double> kappas = cfg.pipeline.kappa_grid.empty()
                                         ? std::vector<double>{cfg.synthesis.kappa}
                                         : cfg.pipeline.kappa_grid;
  for (double k : kappas) {
    for (double m : mus) {
      if (std::find(candidates.begin(), candidates.end(), std::make_pair(k, m)) == candidates.end()) {
        candidates.emplace_back(k, m);
      }
    }
  }
  std::mutex log_mu;
  for_each_group(G, cfg.pipeline.parallel, [&](int g) {
    const json data_art = fio::read_json(paths.data(g));
    const json& db = fio::artifact_body(data_art, "data",
                                        {{"network", network_hash(cfg)}, {"experiment", experiment_hash(cfg)}});
    const DataMatrices d = fio::data_from_json(db.at("data"));
    const int rep = ctx.groups[g].front();
    const Eigen::MatrixXd D = ctx.net.coupling_matrix(rep);
    const auto dict = ctx.net.subsystem(rep).dictionary_ptr();
    json tried = json::array();
    std::optional<IssCertificate> cert;
    std::string family, last;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& [kappa, mu] : candidates) {
      SynthesisOptions opt = cfg.synthesis;
      opt.kappa = kappa;
      opt.mu = mu;
      try {
        cert = synthesize_iss(d, D, dict, opt);
        tried.push_back({{"kappa", kappa}, {"mu", mu}, {"result", "ok"}});
        break;
      } catch (const InfeasibleError& e) {
        family = e.family();
        last = e.what();
        tried.push_back({{"kappa", kappa}, {"mu", mu}, {"result", family}});
        std::lock_guard<std::mutex> lock(log_mu);
        log("synthesize: group " + std::to_string(g + 1) + " infeasible at kappa " +
            fio::format_double(kappa) + ", mu " + fio::format_double(mu) + " (" + family + ")");
      }
    }
    if (!cert) {
      throw InfeasibleError(family, "subsystem " + std::to_string(rep + 1) + ": no (kappa, mu) candidate is feasible; last: " + last);
    }
    const double secs = seconds_since(start);
    const auto report = validate_certificate(*cert, d, D, dict, cfg.verify.mc_samples,
                                             cfg.verify.mc_radius, derive_seed(cfg.seed, g));
    const json body = {{"group", g + 1},
                       {"members", one_based(ctx.groups[g])},
                       {"representative", rep + 1},
                       {"candidates", tried},
                       {"synthesis_seconds", secs},
                       {"certificate", fio::certificate_to_json(*cert)},
                       {"validation", fio::validation_to_json(report)}};
    fio::write_json(paths.certificate(g),
                    fio::make_artifact("certificate", body,
                                       {{"data", fio::artifact_hash(data_art)}, {"synthesis", synthesis_hash(cfg)}}));
    std::lock_guard<std::mutex> lock(log_mu);
    log("synthesize: group " + std::to_string(g + 1) + " kappa " + fio::format_double(cert->kappa) +
        ", alpha1 " + fio::format_double(cert->alpha1) + ", rho " + fio::format_double(cert->rho) +
        (report.ok() ? "" : "; VALIDATION FAILED: " + report.summary()));
  });
  return G;
}

int stage_ism(const RunConfig& cfg, const RunPaths& paths, const Log& log) {
  const Context ctx = context(cfg);
  const int G = static_cast<int>(ctx.groups.size());
  for (int g = 0; g < G; ++g) {
    Loaded l = load_group(cfg, paths, g, false);
    const int rep = ctx.groups[g].front();
    const Eigen::MatrixXd D = ctx.net.coupling_matrix(rep);
    const Eigen::MatrixXd B_hat = estimate_B(l.data, solve_Q(l.data.Delta, l.data.Delta_bar), D);
    double gamma_sup = 0.0;
    for (int i : ctx.groups[g]) gamma_sup = std::max(gamma_sup, ctx.net.subsystem(i).perturbation().gamma_sup);
    const IsmController ism = design_ism(B_hat, gamma_sup, cfg.ism);
    json art = l.cert_artifact;
    art["body"]["ism"] = {{"B_hat", matrix_to_json(B_hat)}, {"design", fio::ism_to_json(ism)}};
    art["provenance"]["inputs"]["ism"] = ism_hash(cfg);
    fio::write_json(paths.certificate(g), art);
    log("ism: group " + std::to_string(g + 1) + " Theta " + fio::format_double(ism.theta) + " (bound " +
        fio::format_double(theta_lower_bound(ism.C, B_hat, gamma_sup)) + "), band " +
        fio::format_double(ism.sliding_band(cfg.sim.h)));
  }
  return G;
}

bool stage_compose(const RunConfig& cfg, const RunPaths& paths, const Log& log) {
  const Context ctx = context(cfg);
  std::vector<IssCertificate> certs;
  std::map<std::string, std::string> inputs;
  for (int g = 0; g < static_cast<int>(ctx.groups.size()); ++g) {
    const Loaded l = load_group(cfg, paths, g, false);
    certs.push_back(l.cert);
    inputs["certificate_" + std::to_string(g + 1)] = fio::artifact_hash(l.cert_artifact);
  }
  const auto start = std::chrono::steady_clock::now();
  const auto nc = compose(std::move(certs), ctx.group_of, ctx.net.topology(), cfg.pipeline.strict_dense);
  json body = fio::composition_to_json(nc);
  body["compose_seconds"] = seconds_since(start);
  fio::write_json(paths.composition(), fio::make_artifact("composition", body, inputs));
  fio::write_xi_csv(paths.xi_table(), nc.smallgain);
  if (nc.feasible()) {
    log("compose: feasible, network kappa " + fio::format_double(nc.kappa()));
  } else {
    log("compose: " + nc.verdict.hint);
  }
  return nc.feasible();
}

void stage_simulate(const RunConfig& cfg, const RunPaths& paths, const Log& log) {
  const Context ctx = context(cfg);
  const bool need_ism = cfg.sim.controllers == ControllerMode::kIssPlusIsm;
  std::vector<Loaded> groups;
  const auto nc = load_composition(cfg, paths, ctx, groups, need_ism);
  const NetworkClf clf = nc.clf();
  std::vector<LocalController> ctrls;
  double band = 0.0;
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    const int rep = ctx.groups[g].front();
    const auto& l = groups[g];
    const ClosedLoopRep rep_cl(l.data, ctx.net.coupling_matrix(rep), l.cert.G(),
                               ctx.net.subsystem(rep).dictionary_ptr());
    ctrls.push_back(make_local_controller(l.cert, rep_cl, l.ism));
    if (l.ism) band = std::max(band, l.ism->sliding_band(cfg.sim.h));
  }
  struct Run {
    std::string name;
    SimConfig sim;
  };
  std::vector<Run> runs{{"main", cfg.sim}};
  if (cfg.verify.negative_control && cfg.sim.perturbation && cfg.sim.controllers == ControllerMode::kIssPlusIsm) {
    Run neg{"negative", cfg.sim};
    neg.sim.controllers = ControllerMode::kIssOnly;
    runs.push_back(neg);
  }
  Run nominal{"nominal", cfg.sim};
  nominal.sim.perturbation = false;
  nominal.sim.controllers = ControllerMode::kIssOnly;
  nominal.sim.horizon = cfg.verify.nominal_horizon;
  runs.push_back(nominal);

  json body = {{"kappa", nc.kappa()}, {"band", band}, {"runs", json::object()}};
  std::map<std::string, std::string> inputs{{"composition", fio::artifact_hash(fio::read_json(paths.composition()))},
                                            {"sim", sim_hash(cfg)}};
  for (const auto& r : runs) {
    SimConfig sc = r.sim;
    sc.threads = std::max(sc.threads, cfg.pipeline.parallel);
    const auto tl = simulate(ctx.net, ctrls, ctx.group_of, sc, &clf);
    const std::string prefix = paths.sim_prefix(r.name);
    fio::write_log_csv(prefix, tl, ctx.net, 1);
    json max_sigma = json::array();
    for (double s : tl.max_sigma) max_sigma.push_back(s);
    body["runs"][r.name] = {{"controllers", controller_mode_name(sc.controllers)},
                            {"perturbation", sc.perturbation},
                            {"horizon", sc.horizon},
                            {"h", sc.h},
                            {"steps", tl.steps()},
                            {"aborted", tl.aborted},
                            {"diagnosis", tl.diagnosis},
                            {"wall_seconds", tl.wall_seconds},
                            {"max_sigma", max_sigma},
                            {"worst_sigma_subsystem", tl.worst_sigma_subsystem + 1},
                            {"worst_sigma_time", tl.worst_sigma_time},
                            {"initial_sigma", tl.initial_sigma},
                            {"x0_norm", tl.norm.front()},
                            {"final_norm", tl.norm.back()}};
    inputs["log_" + r.name] = fio::sha256_hex(fio::read_text(prefix + "_norm.csv"));
    std::ostringstream s;
    s << "simulate: " << r.name << " (" << controller_mode_name(sc.controllers)
      << (sc.perturbation ? ", perturbed" : ", nominal") << ") |x(0)| " << tl.norm.front() << " -> "
      << tl.norm.back() << " in " << std::fixed << std::setprecision(2) << tl.wall_seconds << " s";
    if (tl.aborted) s << "; " << tl.diagnosis;
    log(s.str());
  }
  fio::write_json(paths.simulation(), fio::make_artifact("simulation", body, inputs));
}

Verification stage_verify(const RunConfig& cfg, const RunPaths& paths, const Log& log) {
  const Context ctx = context(cfg);
  const bool need_ism = cfg.sim.controllers == ControllerMode::kIssPlusIsm;
  std::vector<Loaded> groups;
  const auto nc = load_composition(cfg, paths, ctx, groups, need_ism);
  const json sim_art = fio::read_json(paths.simulation());
  json body = fio::artifact_body(sim_art, "simulation",
                                 {{"composition", fio::artifact_hash(fio::read_json(paths.composition()))},
                                  {"sim", sim_hash(cfg)}});
  std::map<std::string, std::string> logs;
  for (const auto& [name, run] : body["runs"].items()) {
    logs["log_" + name] = fio::sha256_hex(fio::read_text(paths.sim_prefix(name) + "_norm.csv"));
  }
  fio::artifact_body(sim_art, "simulation", logs);

  Verification v;
  json certs = json::array();
  v.certificates_ok = true;
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    const int rep = ctx.groups[g].front();
    const auto report = validate_certificate(groups[g].cert, groups[g].data, ctx.net.coupling_matrix(rep),
                                             ctx.net.subsystem(rep).dictionary_ptr(), cfg.verify.mc_samples,
                                             cfg.verify.mc_radius, derive_seed(cfg.seed, 1000 + g));
    v.certificates_ok = v.certificates_ok && report.ok();
    certs.push_back(fio::validation_to_json(report));
  }
  v.details["certificates"] = certs;

  const json& main = body["runs"]["main"];
  const TrajectoryLog main_log = log_from_csv(paths.sim_prefix("main") + "_norm.csv", main["h"].get<double>());
  auto gas = verify_gas(main_log, cfg.verify.shrink, cfg.verify.deadline, cfg.verify.gas_floor);
  if (main["aborted"].get<bool>()) {
    gas.passed = false;
    gas.diagnosis = main["diagnosis"].get<std::string>();
  }
  v.gas_ok = gas.passed;
  v.details["gas"] = fio::gas_to_json(gas);

  if (main["controllers"] == "iss_plus_ism") {
    TrajectoryLog sl_log;
    const auto ms = main["max_sigma"];
    sl_log.max_sigma.resize(static_cast<Eigen::Index>(ms.size()));
    for (std::size_t k = 0; k < ms.size(); ++k) sl_log.max_sigma[static_cast<Eigen::Index>(k)] = ms[k].get<double>();
    sl_log.worst_sigma_time = main["worst_sigma_time"].get<double>();
    sl_log.initial_sigma = main["initial_sigma"].get<double>();
    sl_log.aborted = main["aborted"].get<bool>();
    const double band = cfg.verify.sigma_band.value_or(body["band"].get<double>());
    const auto sl = verify_sliding(sl_log, band);
    v.sliding_ok = sl.passed && sl.starts_on_surface;
    v.details["sliding"] = fio::sliding_to_json(sl);
  } else {
    v.sliding_ok = true;
    v.details["sliding"] = {{"passed", true}, {"note", "no sliding variables in this controller mode"}};
  }

  const json& nom = body["runs"]["nominal"];
  const TrajectoryLog nom_log = log_from_csv(paths.sim_prefix("nominal") + "_norm.csv", nom["h"].get<double>());
  const auto decay = verify_decay(nom_log, nc.kappa(), cfg.verify.decay_slack, cfg.verify.decay_fraction);
  v.decay_ok = decay.passed && !nom["aborted"].get<bool>();
  v.details["decay"] = fio::decay_to_json(decay);

  if (body["runs"].contains("negative")) {
    const json& neg = body["runs"]["negative"];
    const TrajectoryLog neg_log = log_from_csv(paths.sim_prefix("negative") + "_norm.csv", neg["h"].get<double>());
    const auto ngas = verify_gas(neg_log, cfg.verify.shrink, cfg.verify.deadline, cfg.verify.gas_floor);
    double limsup = 0.0;
    for (long k = neg_log.index_at(neg_log.t0 + 0.5 * neg["horizon"].get<double>()); k <= neg_log.steps(); ++k) {
      limsup = std::max(limsup, neg_log.norm[k]);
    }
    v.negative_ok = !ngas.passed && limsup >= cfg.verify.residual_level;
    v.details["negative_control"] = {{"gas", fio::gas_to_json(ngas)},
                                     {"limsup_second_half", limsup},
                                     {"residual_level", cfg.verify.residual_level},
                                     {"passed", v.negative_ok}};
  }
  v.details["passed"] = v.passed();
  fio::write_json(paths.verification(), v.details);
  std::ostringstream s;
  s << "verify: certificates " << (v.certificates_ok ? "ok" : "FAIL") << ", GAS " << (v.gas_ok ? "ok" : "FAIL")
    << ", sliding " << (v.sliding_ok ? "ok" : "FAIL") << ", decay " << (v.decay_ok ? "ok" : "FAIL")
    << ", negative control " << (v.negative_ok ? "ok" : "FAIL");
  log(s.str());
  return v;
}

RunOutcome run_pipeline(const RunConfig& cfg, const RunPaths& paths, const Log& log) {
  RunOutcome out;
  json& sum = out.summary;
  sum["run_id"] = fio::hash_json(cfg.to_json()).substr(0, 12);
  sum["topology"] = topology_name(cfg.network.topology);
  sum["n"] = cfg.network.n;
  sum["seed"] = cfg.seed;
  json timing = json::object();
  auto timed = [&](const std::string& stage, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto r = fn();
    timing[stage] = timing.value(stage, 0.0) + seconds_since(start);
    return r;
  };

  bool feasible = false;
  int attempt = 0;
  for (; attempt <= cfg.pipeline.retries; ++attempt) {
    if (attempt > 0) log("run: retry " + std::to_string(attempt) + " with different trajectories");
    try {
      timed("collect", [&] { return stage_collect(cfg, paths, attempt, log); });
      timed("synthesize", [&] { return stage_synthesize(cfg, paths, log); });
      timed("ism", [&] { return stage_ism(cfg, paths, log); });
      feasible = timed("compose", [&] { return stage_compose(cfg, paths, log); });
      if (feasible) break;
      out.message = fio::read_json(paths.composition())["body"].value("hint", "");
    } catch (const InfeasibleError& e) {
      out.message = std::string(e.family()) + ": " + e.what();
    } catch (const RankError& e) {
      // Keep the design failure that triggered the retry in the report.
      out.message = out.message.empty() ? e.what() : out.message + "; retry " + std::to_string(attempt) + ": " + e.what();
      break;
    }
  }
  sum["attempts"] = std::min(attempt, cfg.pipeline.retries) + 1;

  // Per-group facts for the report, whatever happened later.
  const Context ctx = context(cfg);
  json group_rows = json::array();
  double synth_total = 0.0;
  int synth_count = 0;
  for (int g = 0; g < static_cast<int>(ctx.groups.size()); ++g) {
    json row = {{"group", g + 1}, {"members", ctx.groups[g].size()}};
    try {
      const json data = fio::read_json(paths.data(g));
      row["samples"] = data["body"]["samples"];
      const json cert = fio::read_json(paths.certificate(g));
      const json& c = cert["body"]["certificate"];
      row["kappa"] = c["kappa"];
      row["alpha1"] = c["alpha1"];
      row["alpha2"] = c["alpha2"];
      row["rho"] = c["rho"];
      row["synthesis_seconds"] = cert["body"]["synthesis_seconds"];
      row["validation_ok"] = cert["body"]["validation"]["ok"];
      synth_total += cert["body"]["synthesis_seconds"].get<double>();
      ++synth_count;
    } catch (const std::exception&) {
      // stage output missing after a failure
    }
    group_rows.push_back(row);
  }
  sum["groups"] = group_rows;
  if (!group_rows.empty() && group_rows[0].contains("samples")) sum["T"] = group_rows[0]["samples"];
  if (synth_count) sum["seconds_per_subsystem"] = synth_total / synth_count;

  if (!feasible) {
    out.exit_code = 2;
    if (out.message.empty()) out.message = "small-gain condition not satisfied";
    try {
      const json comp = fio::read_json(paths.composition())["body"];
      sum["feasible"] = false;
      sum["max_xi"] = comp["max_xi"];
    } catch (const std::exception&) {
      sum["feasible"] = false;
    }
  } else {
    const json comp = fio::read_json(paths.composition())["body"];
    sum["feasible"] = true;
    sum["kappa"] = comp["kappa"];
    sum["max_xi"] = comp["max_xi"];
    sum["alpha1"] = comp["alpha1"];
    sum["alpha2"] = comp["alpha2"];
    timed("simulate", [&] {
      stage_simulate(cfg, paths, log);
      return 0;
    });
    const Verification v = timed("verify", [&] { return stage_verify(cfg, paths, log); });
    sum["verdicts"] = {{"certificates", v.certificates_ok},
                       {"gas", v.gas_ok},
                       {"sliding", v.sliding_ok},
                       {"decay", v.decay_ok},
                       {"negative_control", v.negative_ok}};
    out.exit_code = v.passed() ? 0 : 3;
    out.message = v.passed() ? "all verdicts pass" : "verification failed; see verification.json";
  }
  sum["timing"] = timing;
  sum["exit_code"] = out.exit_code;
  sum["message"] = out.message;
  fio::write_json(paths.summary(), sum);
  fio::write_text(paths.report(), format_report({sum}));
  return out;
}

std::string format_report(const std::vector<json>& summaries) {
  std::ostringstream s;
  auto num = [](const json& j, const char* key, int precision, bool sci = false) {
    if (!j.contains(key) || !j[key].is_number()) return std::string("-");
    std::ostringstream o;
    if (sci) {
      o << std::scientific;
    } else {
      o << std::fixed;
    }
    o << std::setprecision(precision) << j[key].get<double>();
    return o.str();
  };
  auto verdict = [](const json& j, const char* key) {
    if (!j.contains("verdicts")) return std::string("-");
    return std::string(j["verdicts"].value(key, false) ? "pass" : "FAIL");
  };
  s << std::left << std::setw(16) << "topology" << std::right << std::setw(6) << "N" << std::setw(5) << "T"
    << std::setw(11) << "RT/sub(s)" << std::setw(11) << "kappa" << std::setw(11) << "alpha1" << std::setw(11)
    << "alpha2" << std::setw(10) << "feasible" << std::setw(12) << "max Xi" << std::setw(7) << "cert"
    << std::setw(7) << "GAS" << std::setw(9) << "sliding" << std::setw(7) << "decay" << std::setw(10)
    << "negative" << std::setw(6) << "exit" << "\n";
  for (const auto& j : summaries) {
    s << std::left << std::setw(16) << j.value("topology", std::string("?")) << std::right << std::setw(6)
      << j.value("n", 0) << std::setw(5) << (j.contains("T") ? std::to_string(j["T"].get<int>()) : "-")
      << std::setw(11) << num(j, "seconds_per_subsystem", 4) << std::setw(11) << num(j, "kappa", 4)
      << std::setw(11) << num(j, "alpha1", 4) << std::setw(11) << num(j, "alpha2", 4) << std::setw(10)
      << (j.value("feasible", false) ? "yes" : "no") << std::setw(12) << num(j, "max_xi", 3, true)
      << std::setw(7) << verdict(j, "certificates") << std::setw(7) << verdict(j, "gas") << std::setw(9)
      << verdict(j, "sliding") << std::setw(7) << verdict(j, "decay") << std::setw(10)
      << verdict(j, "negative_control") << std::setw(6) << j.value("exit_code", -1) << "\n";
    if (j.contains("message") && j.value("exit_code", 0) != 0) s << "  " << j["message"].get<std::string>() << "\n";
  }
  return s.str();
}

}  // namespace ismnet
