#include "ismnet/experiment/experiment.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ismnet/error.h"
#include "ismnet/integrator.h"
#include "ismnet/linalg.h"

namespace ismnet {

namespace {

constexpr double kOverflow = 1e12;

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Trajectory run_network(const NetworkModel& net, int i, const ExperimentConfig& cfg,
                       const Eigen::VectorXd& x0, const Eigen::MatrixXd& excitation) {
  const int T = cfg.samples;
  const int n = net.subsystem(i).state_dim();
  const int m = net.subsystem(i).input_dim();
  const int off = net.state_offset(i);
  const int uoff = net.input_offset(i);
  const double h = cfg.tau / cfg.substeps;

  Trajectory tr;
  tr.time.resize(T + 1);
  tr.x.resize(n, T + 1);
  tr.u = excitation;
  tr.w.resize(net.psi(i), T + 1);
  tr.xdot.resize(n, T);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(net.input_dim());
  Eigen::VectorXd dx(x.size());
  FixedStepIntegrator integrator(Scheme::kRk4, x.size());
  auto f = [&](double t, std::span<const double> xs, std::span<double> out) {
    net.rhs(xs, std::span<const double>(u.data(), u.size()), t, false, out);
  };
  for (int k = 0; k <= T; ++k) {
    const double t = k * cfg.tau;
    tr.time[k] = t;
    tr.x.col(k) = x.segment(off, n);
    net.gather_w(i, std::span<const double>(x.data(), x.size()),
                 std::span<double>(tr.w.col(k).data(), tr.w.rows()));
    if (k == T) break;
    u.segment(uoff, m) = excitation.col(k);
    f(t, std::span<const double>(x.data(), x.size()), std::span<double>(dx.data(), dx.size()));
    tr.xdot.col(k) = dx.segment(off, n);
    bool escaped = false;
    try {
      for (int s = 0; s < cfg.substeps; ++s) {
        integrator.step(f, t + s * h, h, std::span<double>(x.data(), x.size()));
      }
    } catch (const DomainError&) {
      escaped = true;  // a dictionary term overflowed inside an RK stage
    }
    const double peak = escaped ? kOverflow * 2 : x.cwiseAbs().maxCoeff();
    if (!std::isfinite(peak) || peak > kOverflow) {
      std::ostringstream msg;
      msg << "network state diverged (|x| > 1e12) at t = " << t + cfg.tau
          << " while collecting data for subsystem " << i + 1
          << "; try a shorter window tau * T or a smaller initial-state box";
      throw DivergenceError(msg.str());
    }
  }
  return tr;
}

}  // namespace

std::string_view derivative_mode_name(DerivativeMode mode) {
  return mode == DerivativeMode::kExactOracle ? "exact_oracle" : "forward_difference";
}

DerivativeMode parse_derivative_mode(std::string_view name) {
  if (name == "exact_oracle") return DerivativeMode::kExactOracle;
  if (name == "forward_difference") return DerivativeMode::kForwardDifference;
  throw ConfigError("unknown derivative mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate(int dict_size) const {
  if (!(tau > 0.0)) throw ConfigError("experiment tau must be > 0");
  if (samples <= dict_size) {
    throw ConfigError("experiment needs T > z (T = " + std::to_string(samples) +
                      ", z = " + std::to_string(dict_size) + ")");
  }
  if (substeps < 1) throw ConfigError("experiment substeps must be >= 1");
  if (!(amplitude > 0.0)) throw ConfigError("excitation amplitude must be > 0");
  if (!(x0_box >= 0.0)) throw ConfigError("initial-state box must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t seed, int index) {
  return mix(seed ^ mix(static_cast<std::uint64_t>(index) + 0x51ed2701ULL));
}

DataMatrices collect_trajectories(const NetworkModel& net, int i, const ExperimentConfig& cfg) {
  if (i < 0 || i >= net.size()) throw DimensionError("subsystem index out of range");
  const auto& sub = net.subsystem(i);
  cfg.validate(sub.dict_size());

  std::mt19937_64 rng(derive_seed(cfg.seed, i));
  std::uniform_real_distribution<double> box(-cfg.x0_box, cfg.x0_box);
  std::uniform_real_distribution<double> excite(-cfg.amplitude, cfg.amplitude);
  Eigen::VectorXd x0(net.state_dim());
  for (auto& v : x0) v = box(rng);
  Eigen::MatrixXd excitation(sub.input_dim(), cfg.samples);
  for (auto& v : excitation.reshaped()) v = excite(rng);

  DataMatrices d;
  d.subsystem = i;
  d.network_x0 = x0;
  d.x0 = x0.segment(net.state_offset(i), sub.state_dim());
  d.excited = run_network(net, i, cfg, x0, excitation);
  d.zero_input = run_network(net, i, cfg, x0, Eigen::MatrixXd::Zero(sub.input_dim(), cfg.samples));

  const int T = cfg.samples;
  const auto& dict = sub.dictionary();
  d.I = d.excited.u;
  d.S = d.excited.x.leftCols(T);
  d.W = d.excited.w.leftCols(T);
  d.S_bar = d.zero_input.x.leftCols(T);
  d.W_bar = d.zero_input.w.leftCols(T);
  if (cfg.derivative_mode == DerivativeMode::kExactOracle) {
    d.Sp = d.excited.xdot;
    d.Sp_bar = d.zero_input.xdot;
  } else {
    d.Sp = forward_difference(d.excited.x, cfg.tau);
    d.Sp_bar = forward_difference(d.zero_input.x, cfg.tau);
  }
  d.Delta = dict.eval_columns(d.S);
  d.Delta_bar = dict.eval_columns(d.S_bar);
  return d;
}

Eigen::MatrixXd forward_difference(const Eigen::MatrixXd& states, double tau) {
  if (states.cols() < 2) throw DimensionError("forward difference needs >= 2 samples");
  if (!(tau > 0.0)) throw DomainError("forward difference needs tau > 0");
  const Eigen::Index T = states.cols() - 1;
  return (states.rightCols(T) - states.leftCols(T)) / tau;
}

std::string RichnessReport::diagnosis() const {
  if (ok()) return {};
  std::ostringstream s;
  s << "data not rich enough:";
  if (!delta_full()) s << " rank(Delta) = " << rank_delta << " < z = " << dict_size << ";";
  if (!delta_bar_full()) {
    s << " rank(Delta_bar) = " << rank_delta_bar << " < z = " << dict_size << ";";
  }
  if (!input_full()) s << " rank(I) = " << rank_input << " < m = " << input_dim << ";";
  s << " collect different trajectories (new seed, more samples or a larger tau)";
  return s.str();
}

RichnessReport check_richness(const DataMatrices& d) {
  auto cond = [](const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    const auto sv = m.jacobiSvd().singularValues();
    const double lo = sv[sv.size() - 1];
    return lo > 0.0 ? sv[0] / lo : std::numeric_limits<double>::infinity();
  };
  RichnessReport r;
  r.dict_size = d.dict_size();
  r.input_dim = d.input_dim();
  r.rank_delta = linalg::numerical_rank(d.Delta);
  r.rank_delta_bar = linalg::numerical_rank(d.Delta_bar);
  r.rank_input = linalg::numerical_rank(d.I);
  r.cond_delta = cond(d.Delta);
  r.cond_delta_bar = cond(d.Delta_bar);
  return r;
}

Eigen::MatrixXd solve_Q(const Eigen::MatrixXd& Delta, const Eigen::MatrixXd& Delta_bar) {
  if (Delta.rows() != Delta_bar.rows() || Delta.cols() != Delta_bar.cols()) {
    throw DimensionError("solve_Q: Delta and Delta_bar must have equal shapes");
  }
  const int rank = linalg::numerical_rank(Delta_bar);
  if (rank < Delta_bar.rows()) {
    throw RankError("Delta_bar has rank " + std::to_string(rank) + " < z = " +
                    std::to_string(Delta_bar.rows()) + "; collect different trajectories");
  }
  Eigen::MatrixXd Q = linalg::pinv(Delta_bar) * Delta;
  const double residual = linalg::spectral_norm(Delta_bar * Q - Delta);
  if (residual > 1e-8 * (1.0 + linalg::spectral_norm(Delta))) {
    throw RankError("Delta_bar Q = Delta residual " + std::to_string(residual) +
                    " exceeds tolerance; data are ill-conditioned");
  }
  return Q;
}

Eigen::MatrixXd estimate_B(const DataMatrices& d, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& D) {
  const int T = d.samples();
  if (Q.rows() != T || Q.cols() != T) throw DimensionError("estimate_B: Q must be T x T");
  if (D.rows() != d.state_dim() || D.cols() != d.psi()) {
    throw DimensionError("estimate_B: D must be n x psi");
  }
  const int rank = linalg::numerical_rank(d.I);
  if (rank < d.input_dim()) {
    throw RankError("input block has rank " + std::to_string(rank) + " < m = " +
                    std::to_string(d.input_dim()) + "; use a richer excitation");
  }
  Eigen::MatrixXd L = d.Sp - (d.Sp_bar - D * d.W_bar) * Q;
  if (D.cols() > 0) L -= D * d.W;
  return L * linalg::pinv(d.I);
}

ClosedLoopRep::ClosedLoopRep(const DataMatrices& d, const Eigen::MatrixXd& D,
                             const Eigen::MatrixXd& G,
                             std::shared_ptr<const Dictionary> dictionary, double tol)
    : dictionary_(std::move(dictionary)) {
  if (!dictionary_ || dictionary_->size() != d.dict_size()) {
    throw DimensionError("closed-loop representation: dictionary does not match data");
  }
  if (G.rows() != d.samples() || G.cols() != d.dict_size()) {
    throw DimensionError("closed-loop representation: G must be T x z");
  }
  const Eigen::MatrixXd consistency =
      d.Delta * G - Eigen::MatrixXd::Identity(d.dict_size(), d.dict_size());
  const double err = linalg::max_abs(consistency);
  if (!(err <= tol)) {
    std::ostringstream msg;
    msg << "Delta G = I violated: max residual " << err << " > " << tol;
    throw Error(msg.str());
  }
  Eigen::MatrixXd L = d.Sp;
  if (D.cols() > 0) L -= D * d.W;
  LG_ = L * G;
}

Eigen::VectorXd ClosedLoopRep::operator()(const Eigen::VectorXd& x) const {
  return LG_ * dictionary_->eval(x);
}

void ClosedLoopRep::eval(std::span<const double> x, std::span<double> z,
                         std::span<double> out) const {
  dictionary_->eval(x, z);
  const Eigen::Index n = LG_.rows();
  const Eigen::Index cols = LG_.cols();
  for (Eigen::Index r = 0; r < n; ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) acc += LG_(r, c) * z[c];
    out[r] = acc;
  }
}

}  // namespace ismnet
