#include "ismnet/synthesis/synthesis.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ismnet/error.h"
#include "ismnet/kernels/kernels.h"
#include "ismnet/linalg.h"

namespace ismnet {

namespace {

// Decision variables: upper triangle of Phi, then the null-space
// coordinates F (q x n, column-major), then one optional scalar (t or s).
// Y = Delta^+[:, :n] Phi + N F.
struct Formulation {
  int n = 0;
  int T = 0;
  int q = 0;
  int nphi = 0;
  Eigen::MatrixXd L;      // Sp - D W
  Eigen::MatrixXd basis;  // Delta^+[:, :n]
  Eigen::MatrixXd N;      // null-space basis of Delta
  Eigen::MatrixXd delta;
  std::vector<Eigen::MatrixXd> phi_coef;  // n x n per variable (empty for F)
  std::vector<Eigen::MatrixXd> y_coef;    // T x n per variable

  int base_vars() const { return nphi + q * n; }

  Eigen::MatrixXd phi(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < nphi; ++k) out += v[k] * phi_coef[k];
    return out;
  }
  Eigen::MatrixXd y(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(T, n);
    for (int k = 0; k < base_vars(); ++k) out += v[k] * y_coef[k];
    return out;
  }
};

Formulation formulate(const DataMatrices& d, const Eigen::MatrixXd& D) {
  Formulation f;
  f.n = d.state_dim();
  f.T = d.samples();
  f.L = d.Sp;
  if (D.cols() > 0) f.L -= D * d.W;
  f.delta = d.Delta;
  f.basis = linalg::pinv(d.Delta).leftCols(f.n);
  f.N = linalg::null_space(d.Delta);
  f.q = static_cast<int>(f.N.cols());
  f.nphi = f.n * (f.n + 1) / 2;
  for (int c = 0; c < f.n; ++c) {
    for (int r = 0; r <= c; ++r) {
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(f.n, f.n);
      E(r, c) = 1.0;
      E(c, r) = 1.0;
      f.phi_coef.push_back(E);
      f.y_coef.push_back(f.basis * E);
    }
  }
  for (int c = 0; c < f.n; ++c) {
    for (int a = 0; a < f.q; ++a) {
      Eigen::MatrixXd Yk = Eigen::MatrixXd::Zero(f.T, f.n);
      Yk.col(c) = f.N.col(a);
      f.phi_coef.emplace_back();
      f.y_coef.push_back(Yk);
    }
  }
  return f;
}

enum class Stage { kFeasibility, kMinCeiling, kMaxFloor, kMinGain };

// Builds the LMI program for one stage. The trailing scalar is the ceiling
// t for kMinCeiling, the floor s for kMaxFloor and the gain bound for
// kMinGain; `ceiling` and `floor_value` bound Phi in the later stages.
sdp::Problem build(const Formulation& f, const SynthesisOptions& opt, double beta, Stage stage,
                   double ceiling = 0.0, double floor_value = 0.0) {
  const int base = f.base_vars();
  const bool extra = stage != Stage::kFeasibility;
  sdp::Problem p;
  p.num_vars = base + (extra ? 1 : 0);
  const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(f.n, f.n);
  const int gdim = f.T + f.n;
  const Eigen::MatrixXd Ig = Eigen::MatrixXd::Identity(gdim, gdim);

  auto& decay = p.add_block(std::string(kDecayLmi), -opt.mu * In);
  auto& floor = p.add_block("phi-floor", -std::max(opt.eps_pd, floor_value) * In);
  auto& gain = p.add_block("gain-bound", stage == Stage::kMinGain ? Eigen::MatrixXd::Zero(gdim, gdim)
                                                                   : Eigen::MatrixXd(beta * Ig));
  for (int k = 0; k < base; ++k) {
    const Eigen::MatrixXd LY = f.L * f.y_coef[k];
    Eigen::MatrixXd dk = -(LY + LY.transpose());
    if (k < f.nphi) {
      dk -= opt.kappa * f.phi_coef[k];
      floor.F[k] = f.phi_coef[k];
    }
    decay.F[k] = dk;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(gdim, gdim);
    g.topRightCorner(f.T, f.n) = f.y_coef[k];
    g.bottomLeftCorner(f.n, f.T) = f.y_coef[k].transpose();
    gain.F[k] = g;
  }
  if (stage == Stage::kFeasibility) {
    return p;
  } else if (stage == Stage::kMinCeiling) {
    auto& ceil = p.add_block("phi-ceiling", Eigen::MatrixXd::Zero(f.n, f.n));
    for (int k = 0; k < f.nphi; ++k) ceil.F[k] = -f.phi_coef[k];
    ceil.F[base] = In;
    // |Phi| <= |Delta| beta through the gain bound, so this cap never binds;
    // it keeps the barrier bounded below while phase I runs.
    const double cap = 2.0 * linalg::spectral_norm(f.delta) * beta + 1.0;
    auto& top = p.add_block("ceiling-cap", Eigen::MatrixXd::Constant(1, 1, cap));
    top.F[base] = -Eigen::MatrixXd::Ones(1, 1);
  } else {
    auto& ceil = p.add_block("phi-ceiling", ceiling * In);
    for (int k = 0; k < f.nphi; ++k) ceil.F[k] = -f.phi_coef[k];
    if (stage == Stage::kMaxFloor) floor.F[base] = -In;
    if (stage == Stage::kMinGain) gain.F[base] = Ig;
  }
  if (extra) {
    p.c = Eigen::VectorXd::Zero(p.num_vars);
    p.c[base] = stage == Stage::kMaxFloor ? -1.0 : 1.0;
  }
  return p;
}

struct Solution {
  Eigen::MatrixXd Phi, Y;
  int steps = 0;
};

Solution solve_at(const Formulation& f, const SynthesisOptions& opt, double beta) {
  Solution out;
  if (opt.objective == Objective::kFeasibilityOnly) {
    const auto r = sdp::solve(build(f, opt, beta, Stage::kFeasibility), opt.solver);
    out.Phi = f.phi(r.v);
    out.Y = f.y(r.v);
    out.steps = r.newton_steps;
    return out;
  }
  const int nb = f.base_vars();
  const auto r1 = sdp::solve(build(f, opt, beta, Stage::kMinCeiling), opt.solver);
  const double ceiling = (1.0 + opt.ceiling_slack) * r1.v[nb];

  // The min-ceiling optimum is only approached as the fast closed-loop pole
  // goes to infinity, so it says nothing about the gain. Spread the
  // spectrum of Phi under the ceiling first, then take the smallest gain
  // that keeps most of that floor.
  Eigen::VectorXd start(nb + 1);
  start.head(nb) = r1.v.head(nb);
  // Strictly inside the floor block Phi - eps I - s I >= 0: a start outside
  // it sends phase I down the unbounded direction s -> -inf.
  start[nb] = 0.5 * (sdp::min_eigenvalue(f.phi(r1.v)) - opt.eps_pd);
  const auto r2 = sdp::solve(build(f, opt, beta, Stage::kMaxFloor, ceiling), opt.solver, &start);
  const double floor_value = 0.9 * r2.v[nb];

  start.head(nb) = r2.v.head(nb);
  start[nb] = 1.5 * linalg::spectral_norm(f.y(r2.v)) + 1.0;
  const auto r3 =
      sdp::solve(build(f, opt, beta, Stage::kMinGain, ceiling, floor_value), opt.solver, &start);
  out.Phi = f.phi(r3.v);
  out.Y = f.y(r3.v);
  out.steps = r1.newton_steps + r2.newton_steps + r3.newton_steps;
  return out;
}

Eigen::MatrixXd tail_identity(int n, int z) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(z, z - n);
  E.bottomRows(z - n).setIdentity();
  return E;
}

Eigen::VectorXd sample_ball(int dim, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (auto& x : v) x = g(rng);
  const double norm = v.norm();
  if (norm == 0.0) return v;
  return v * (radius * std::pow(u(rng), 1.0 / dim) / norm);
}

}  // namespace

std::string_view objective_name(Objective objective) {
  return objective == Objective::kFeasibilityOnly ? "feasibility_only" : "min_condition_number";
}

Objective parse_objective(std::string_view name) {
  if (name == "feasibility_only") return Objective::kFeasibilityOnly;
  if (name == "min_condition_number") return Objective::kMinConditionNumber;
  throw ConfigError("unknown synthesis objective '" + std::string(name) + "'");
}

void SynthesisOptions::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("kappa must be > 0");
  if (!(mu > 0.0)) throw ConfigError("mu must be > 0");
  if (!(eps_pd > 0.0)) throw ConfigError("eps_pd must be > 0");
  if (!(gain_bound > 0.0) || gain_bound_max < gain_bound) {
    throw ConfigError("gain bounds must satisfy 0 < gain_bound <= gain_bound_max");
  }
  if (!(ceiling_slack > 0.0)) throw ConfigError("ceiling_slack must be > 0");
}

Eigen::MatrixXd IssCertificate::G() const {
  Eigen::MatrixXd g(Y.rows(), Y.cols() + G2.cols());
  g << Y * P, G2;
  return g;
}

IssBounds iss_bounds(const Eigen::MatrixXd& P, const Eigen::MatrixXd& D, double mu) {
  if (!(mu > 0.0)) throw DomainError("iss_bounds: mu must be > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(linalg::symmetrize(P), Eigen::EigenvaluesOnly);
  IssBounds b;
  b.alpha1 = es.eigenvalues()[0];
  b.alpha2 = es.eigenvalues()[P.rows() - 1];
  const double dn = linalg::spectral_norm(D);
  b.rho = dn * dn / mu;
  return b;
}

IssCertificate synthesize_iss(const DataMatrices& d, const Eigen::MatrixXd& D,
                              std::shared_ptr<const Dictionary> dictionary,
                              const SynthesisOptions& opt) {
  opt.validate();
  if (D.rows() != d.state_dim() || D.cols() != d.psi()) {
    throw DimensionError("synthesize_iss: D must be n x psi");
  }
  const auto clock_start = std::chrono::steady_clock::now();
  const int n = d.state_dim();
  const int z = d.dict_size();
  const Formulation f = formulate(d, D);
  if (linalg::numerical_rank(d.Delta) < z) {
    throw RankError("Delta lacks full row rank; collect different trajectories");
  }

  // Nonlinear cancellation and dictionary consistency, solved jointly.
  Eigen::MatrixXd stacked(n + z, f.T);
  stacked << f.L, d.Delta;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + z, z - n);
  rhs.bottomRows(z) = tail_identity(n, z);
  const Eigen::MatrixXd G2 = linalg::pinv(stacked) * rhs;
  const double cancel = linalg::max_abs(f.L * G2);
  const double consist = linalg::max_abs(d.Delta * G2 - tail_identity(n, z));
  if (cancel > opt.equality_tol) {
    std::ostringstream msg;
    msg << "no G2 cancels the nonlinear terms (residual " << cancel
        << "); the dictionary contains nonlinearities that are not matched by the input";
    throw InfeasibleError(std::string(kNonlinearCancellation), msg.str());
  }
  if (consist > opt.equality_tol) {
    std::ostringstream msg;
    msg << "dictionary-consistency residual " << consist << " exceeds tolerance";
    throw InfeasibleError(std::string(kDictionaryConsistency), msg.str());
  }

  Solution sol;
  double beta = opt.gain_bound;
  for (;;) {
    try {
      sol = solve_at(f, opt, beta);
      break;
    } catch (const InfeasibleError& e) {
      if (beta * 10.0 > opt.gain_bound_max * (1.0 + 1e-12)) {
        // Floor, ceiling and gain blocks are satisfiable on their own; an
        // infeasible program always conflicts with the decay LMI.
        const std::string family(kDecayLmi);
        std::ostringstream msg;
        msg << "decay LMI infeasible for kappa = " << opt.kappa << ", mu = " << opt.mu
            << " with |Y| <= " << beta << " (binding block: " << e.family() << ")";
        throw InfeasibleError(family, msg.str());
      }
      beta *= 10.0;
    }
  }

  IssCertificate cert;
  cert.Phi = linalg::symmetrize(sol.Phi);
  cert.Y = sol.Y;
  cert.G2 = G2;
  cert.P = linalg::symmetrize(cert.Phi.inverse());
  cert.K = d.I * cert.G();
  const IssBounds b = iss_bounds(cert.P, D, opt.mu);
  cert.alpha1 = b.alpha1;
  cert.alpha2 = b.alpha2;
  cert.rho = b.rho;
  cert.kappa = opt.kappa;
  cert.mu = opt.mu;
  cert.objective = opt.objective;
  cert.gain_bound = beta;
  cert.newton_steps = sol.steps;

  const auto report = validate_certificate(cert, d, D, std::move(dictionary),
                                           opt.validation_samples, opt.validation_radius,
                                           opt.validation_seed, opt.equality_tol, opt.lmi_tol);
  if (!report.ok()) {
    throw SolverError("synthesized certificate failed validation: " + report.summary());
  }
  cert.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return cert;
}

std::string ValidationReport::summary() const {
  std::ostringstream s;
  s << "residuals (cancellation " << residual_cancellation << ", consistency "
    << residual_consistency << ", parametrization " << residual_parametrization
    << ") " << (residuals_ok ? "ok" : "FAIL") << "; decay LMI lambda_max " << lmi_max_eig
    << (lmi_ok ? " ok" : " FAIL") << "; P lambda_min " << p_min_eig << "; Monte Carlo "
    << monte_carlo.violations << "/" << monte_carlo.samples << " violations (max "
    << monte_carlo.max_violation << ")";
  if (!note.empty()) s << "; " << note;
  return s.str();
}

ValidationReport validate_certificate(const IssCertificate& cert, const DataMatrices& d,
                                      const Eigen::MatrixXd& D,
                                      std::shared_ptr<const Dictionary> dictionary,
                                      int n_mc, double radius, std::uint64_t seed,
                                      double equality_tol, double lmi_tol) {
  const int n = d.state_dim();
  const int z = d.dict_size();
  if (cert.P.rows() != n || cert.Y.rows() != d.samples() || cert.G2.cols() != z - n) {
    throw DimensionError("certificate does not match the data dimensions");
  }
  Eigen::MatrixXd L = d.Sp;
  if (D.cols() > 0) L -= D * d.W;

  ValidationReport r;
  r.residual_cancellation = linalg::max_abs(L * cert.G2);
  r.residual_consistency = linalg::max_abs(d.Delta * cert.G2 - tail_identity(n, z));
  Eigen::MatrixXd phi_pad = Eigen::MatrixXd::Zero(z, n);
  phi_pad.topRows(n) = cert.Phi;
  r.residual_parametrization = linalg::max_abs(d.Delta * cert.Y - phi_pad);
  r.residuals_ok = r.residual_cancellation <= equality_tol &&
                   r.residual_consistency <= equality_tol &&
                   r.residual_parametrization <= equality_tol;

  const Eigen::MatrixXd LY = L * cert.Y;
  const Eigen::MatrixXd lhs = LY + LY.transpose() +
                              cert.mu * Eigen::MatrixXd::Identity(n, n) + cert.kappa * cert.Phi;
  r.lmi_max_eig = -sdp::min_eigenvalue(-linalg::symmetrize(lhs));
  r.p_min_eig = sdp::min_eigenvalue(cert.P);
  r.gain_formula_error = linalg::max_abs(cert.K - d.I * cert.G());
  r.lmi_ok = r.lmi_max_eig <= lmi_tol && r.p_min_eig > 0.0 &&
             r.gain_formula_error <= 1e-9 * (1.0 + linalg::max_abs(cert.K));

  if (r.residuals_ok && r.p_min_eig > 0.0) {
    try {
      const ClosedLoopRep rep(d, D, cert.G(), std::move(dictionary));
      r.monte_carlo = monte_carlo_iss(cert, rep, D, n_mc, radius, seed);
    } catch (const Error& e) {
      r.note = e.what();
      r.monte_carlo.samples = n_mc;
      r.monte_carlo.violations = n_mc;
      r.residuals_ok = false;
    }
  } else {
    r.monte_carlo.samples = n_mc;
    r.monte_carlo.violations = n_mc;
  }
  return r;
}

MonteCarloReport monte_carlo_iss(const IssCertificate& cert, const ClosedLoopRep& rep,
                                 const Eigen::MatrixXd& D, int n_mc, double radius,
                                 std::uint64_t seed) {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto& k = kernels::active();
  const int n = cert.state_dim();
  const int z = rep.dictionary().size();
  const int psi = static_cast<int>(D.cols());
  const RowMat LG = rep.matrix();
  const RowMat P = cert.P;
  const RowMat Dr = D;

  MonteCarloReport rep_out;
  rep_out.samples = n_mc;
  rep_out.max_violation = -std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  constexpr int kChunk = 512;
  RowMat X, Z, W, F, DW, PX;
  Eigen::VectorXd V;
  for (int start = 0; start < n_mc; start += kChunk) {
    const int cnt = std::min(kChunk, n_mc - start);
    X.resize(cnt, n);
    Z.resize(cnt, z);
    W.resize(cnt, psi);
    for (int s = 0; s < cnt; ++s) {
      X.row(s) = sample_ball(n, radius, rng).transpose();
      if (psi > 0) W.row(s) = sample_ball(psi, radius, rng).transpose();
      rep.dictionary().eval(std::span<const double>(X.row(s).data(), n),
                            std::span<double>(Z.row(s).data(), z));
    }
    F.resize(cnt, n);
    k.batched_matvec(LG.data(), n, z, Z.data(), cnt, F.data());
    if (psi > 0) {
      DW.resize(cnt, n);
      k.batched_matvec(Dr.data(), n, psi, W.data(), cnt, DW.data());
      F += DW;
    }
    PX.resize(cnt, n);
    k.batched_matvec(P.data(), n, n, X.data(), cnt, PX.data());
    V.resize(cnt);
    k.shared_quadratic_forms(X.data(), P.data(), cnt, n, V.data());
    for (int s = 0; s < cnt; ++s) {
      const double lv = 2.0 * PX.row(s).dot(F.row(s));
      const double w2 = psi > 0 ? W.row(s).squaredNorm() : 0.0;
      const double bound = -cert.kappa * V[s] + cert.rho * w2;
      const double excess = lv - bound;
      const double scale = 1.0 + std::abs(lv) + std::abs(cert.kappa * V[s]) + cert.rho * w2;
      if (excess > 1e-6) {
        const double rel = excess / scale;
        rep_out.max_relative_violation = std::max(rep_out.max_relative_violation, rel);
        if (rel < 1e-10) {
          ++rep_out.conditioning_violations;
        } else {
          ++rep_out.violations;
          if (rep_out.worst_x.size() < 5) rep_out.worst_x.push_back(X.row(s).transpose());
        }
      }
      rep_out.max_violation = std::max(rep_out.max_violation, excess);
    }
  }
  return rep_out;
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw ConfigError("geometric grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> out;
  if (count == 1) return {lo};
  const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
  for (int i = 0; i < count; ++i) out.push_back(i + 1 == count ? hi : lo * std::pow(ratio, i));
  return out;
}

}  // namespace ismnet
