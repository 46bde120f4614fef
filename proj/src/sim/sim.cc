#include "ismnet/sim/sim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "ismnet/error.h"

namespace ismnet {

namespace {

constexpr double kOverflow = 1e12;

// Fixed pool that runs one function over a static partition of [0, n) and
// waits for all workers. Each index is always handled by the same worker,
// so results do not depend on scheduling.
class WorkerPool {
 public:
  WorkerPool(int threads, int n) : n_(n) {
    threads = std::max(1, std::min(threads, n));
    for (int w = 0; w <= threads; ++w) bounds_.push_back(static_cast<int>(static_cast<long>(n) * w / threads));
    for (int w = 1; w < threads; ++w) workers_.emplace_back([this, w] { loop(w); });
  }
  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int workers() const { return static_cast<int>(bounds_.size()) - 1; }

  void run(const std::function<void(int worker, int begin, int end)>& fn) {
    if (workers_.empty()) {
      fn(0, 0, n_);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      fn_ = &fn;
      pending_ = static_cast<int>(workers_.size());
      ++generation_;
    }
    cv_.notify_all();
    fn(0, bounds_[0], bounds_[1]);
    std::unique_lock<std::mutex> lock(mu_);
    done_.wait(lock, [this] { return pending_ == 0; });
    fn_ = nullptr;
  }

 private:
  void loop(int w) {
    long seen = 0;
    for (;;) {
      const std::function<void(int, int, int)>* fn = nullptr;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        fn = fn_;
      }
      (*fn)(w, bounds_[w], bounds_[w + 1]);
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (--pending_ == 0) done_.notify_one();
      }
    }
  }

  int n_;
  std::vector<int> bounds_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_;
  const std::function<void(int, int, int)>* fn_ = nullptr;
  long generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

struct Scratch {
  std::vector<double> z, u, coupling, sigma, uism, gamma;
};

using ConstMap = Eigen::Map<const Eigen::VectorXd>;
using Map = Eigen::Map<Eigen::VectorXd>;

// Everything the right-hand side needs about one subsystem.
struct Layout {
  std::vector<int> zeta_offset;  // into the augmented state
  int nx = 0;
  int dim = 0;
  bool ism = false;
  bool control = false;
};

}  // namespace

std::string_view controller_mode_name(ControllerMode mode) {
  switch (mode) {
    case ControllerMode::kNone: return "none";
    case ControllerMode::kIssOnly: return "iss_only";
    case ControllerMode::kIssPlusIsm: return "iss_plus_ism";
  }
  return "unknown";
}

ControllerMode parse_controller_mode(std::string_view name) {
  for (auto m : {ControllerMode::kNone, ControllerMode::kIssOnly, ControllerMode::kIssPlusIsm}) {
    if (controller_mode_name(m) == name) return m;
  }
  throw ConfigError("unknown controller mode '" + std::string(name) + "'");
}

LocalController make_local_controller(const IssCertificate& cert, const ClosedLoopRep& rep,
                                      std::optional<IsmController> ism) {
  if (rep.matrix().rows() != cert.state_dim() || rep.matrix().cols() != cert.K.cols()) {
    throw DimensionError("closed-loop representation does not match the certificate");
  }
  if (ism && ism->state_dim() != cert.state_dim()) {
    throw DimensionError("ISM controller does not match the certificate");
  }
  return {cert.K, rep.matrix(), std::move(ism)};
}

void SimConfig::validate(const NetworkModel& net) const {
  if (!(h > 0.0)) throw ConfigError("sim step h must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("sim horizon must be > 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!x0 && !(x0_box >= 0.0)) throw ConfigError("x0 box must be >= 0");
  if (x0 && x0->size() != net.state_dim()) throw DimensionError("explicit x0 has the wrong length");
  if (!enforce_step_rule) return;
  double limit = sampling_tau / 10.0;
  if (perturbation) {
    for (const auto& s : net.subsystems()) {
      const double p = s.perturbation().period();
      if (std::isfinite(p) && p > 0.0) limit = std::min(limit, p / 50.0);
    }
  }
  if (h > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "step h = " << h << " exceeds the limit " << limit
        << " (tau / 10 and perturbation period / 50)";
    throw ConfigError(msg.str());
  }
}

long SimConfig::steps() const { return std::lround(horizon / h); }

long TrajectoryLog::index_at(double t) const {
  const long k = std::lround((t - t0) / h);
  return std::clamp(k, 0L, steps());
}

Eigen::VectorXd initial_state(const NetworkModel& net, const SimConfig& cfg) {
  if (cfg.x0) return *cfg.x0;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-cfg.x0_box, cfg.x0_box);
  Eigen::VectorXd x(net.state_dim());
  for (auto& v : x) v = u(rng);
  return x;
}

TrajectoryLog simulate(const NetworkModel& net, std::span<const LocalController> controllers,
                       std::span<const int> ctrl_of, const SimConfig& cfg, const NetworkClf* clf) {
  cfg.validate(net);
  const auto clock = std::chrono::steady_clock::now();
  const int N = net.size();
  Layout lay;
  lay.nx = net.state_dim();
  lay.control = cfg.controllers != ControllerMode::kNone;
  lay.ism = cfg.controllers == ControllerMode::kIssPlusIsm;
  if (lay.control) {
    if (static_cast<int>(ctrl_of.size()) != N) throw DimensionError("simulate: one controller index per subsystem");
    for (int i = 0; i < N; ++i) {
      const int c = ctrl_of[i];
      if (c < 0 || c >= static_cast<int>(controllers.size())) throw DimensionError("simulate: controller index out of range");
      const auto& s = net.subsystem(i);
      const auto& k = controllers[c];
      if (k.K.rows() != s.input_dim() || k.K.cols() != s.dict_size() ||
          k.LG.rows() != s.state_dim()) {
        throw DimensionError("simulate: controller " + std::to_string(c) + " does not fit subsystem " + std::to_string(i));
      }
      if (lay.ism && !k.ism) throw ConfigError("iss_plus_ism needs an ISM design for every subsystem");
    }
  }
  if (clf && clf->state_dim() != lay.nx) throw DimensionError("simulate: CLF does not match the network");
  int zmax = 0, mmax = 0, nmax = 0;
  lay.zeta_offset.resize(N + 1);
  lay.zeta_offset[0] = lay.nx;
  for (int i = 0; i < N; ++i) {
    const auto& s = net.subsystem(i);
    zmax = std::max(zmax, s.dict_size());
    mmax = std::max(mmax, s.input_dim());
    nmax = std::max(nmax, s.state_dim());
    lay.zeta_offset[i + 1] = lay.zeta_offset[i] + (lay.ism ? s.input_dim() : 0);
  }
  lay.dim = lay.zeta_offset[N];

  WorkerPool pool(cfg.threads, N);
  std::vector<Scratch> scratch(pool.workers());
  for (auto& s : scratch) {
    s.z.resize(zmax);
    s.u.resize(mmax);
    s.coupling.resize(nmax);
    s.sigma.resize(mmax);
    s.uism.resize(mmax);
    s.gamma.resize(mmax);
  }

  // sigma_i = C_i x_i + zeta_i; the same expression is used for the
  // initial zeta, so sigma(t0) is exactly zero.
  auto sliding = [&](int i, const double* y, double* sigma) {
    const auto& ism = *controllers[ctrl_of[i]].ism;
    const int n = net.subsystem(i).state_dim();
    const ConstMap xi(y + net.state_offset(i), n);
    Map(sigma, ism.input_dim()).noalias() = ism.C * xi;
    for (int k = 0; k < ism.input_dim(); ++k) sigma[k] += y[lay.zeta_offset[i] + k];
  };

  // Local control of subsystem i into s.u (ISS part) and s.uism.
  auto local_control = [&](int i, const double* y, Scratch& s) {
    const auto& sub = net.subsystem(i);
    const int m = sub.input_dim();
    std::fill(s.u.begin(), s.u.begin() + m, 0.0);
    std::fill(s.uism.begin(), s.uism.begin() + m, 0.0);
    if (!lay.control) return;
    const auto& c = controllers[ctrl_of[i]];
    Map(s.u.data(), m).noalias() = c.K * ConstMap(s.z.data(), sub.dict_size());
    if (lay.ism) {
      sliding(i, y, s.sigma.data());
      ism_control(*c.ism, std::span<const double>(s.sigma.data(), m), std::span<double>(s.uism.data(), m));
    }
  };

  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    pool.run([&](int w, int begin, int end) {
      Scratch& s = scratch[w];
      for (int i = begin; i < end; ++i) {
        const auto& sub = net.subsystem(i);
        const int n = sub.state_dim(), m = sub.input_dim(), z = sub.dict_size();
        const int off = net.state_offset(i);
        sub.dictionary().eval(y.subspan(off, n), std::span<double>(s.z.data(), z));
        local_control(i, y.data(), s);
        if (cfg.perturbation) {
          sub.perturbation().eval(t, std::span<double>(s.gamma.data(), m));
        } else {
          std::fill(s.gamma.begin(), s.gamma.begin() + m, 0.0);
        }
        std::fill(s.coupling.begin(), s.coupling.begin() + n, 0.0);
        net.add_coupling(i, y.first(lay.nx), s.coupling.data());
        const ConstMap Z(s.z.data(), z);
        const ConstMap Dw(s.coupling.data(), n);
        Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1> utot(m);
        for (int k = 0; k < m; ++k) utot[k] = s.u[k] + s.uism[k] + s.gamma[k];
        Map dx(dy.data() + off, n);
        dx.noalias() = sub.A() * Z;
        dx.noalias() += sub.B() * utot;
        dx += Dw;
        if (lay.ism) {
          const auto& c = controllers[ctrl_of[i]];
          Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 16, 1> drift = Dw;
          drift.noalias() += c.LG * Z;
          Map(dy.data() + lay.zeta_offset[i], m).noalias() = -(c.ism->C * drift);
        }
      }
    });
  };

  // Initial augmented state.
  std::vector<double> y(lay.dim, 0.0);
  {
    const Eigen::VectorXd x0 = initial_state(net, cfg);
    std::copy(x0.data(), x0.data() + lay.nx, y.begin());
    if (lay.ism) {
      std::vector<double> cx(mmax);
      for (int i = 0; i < N; ++i) {
        const auto& ism = *controllers[ctrl_of[i]].ism;
        const int n = net.subsystem(i).state_dim();
        Map(cx.data(), ism.input_dim()).noalias() = ism.C * ConstMap(y.data() + net.state_offset(i), n);
        for (int k = 0; k < ism.input_dim(); ++k) y[lay.zeta_offset[i] + k] = -cx[k];
      }
    }
  }

  const long steps = cfg.steps();
  const long samples = steps / cfg.log_every + 1 + (steps % cfg.log_every ? 1 : 0);
  const int nsigma = lay.ism ? lay.zeta_offset[N] - lay.nx : 0;
  TrajectoryLog log;
  log.t0 = cfg.t0;
  log.h = cfg.h;
  log.norm.reserve(steps + 1);
  if (clf) log.clf.reserve(steps + 1);
  log.x.resize(lay.nx, samples);
  log.sigma.resize(nsigma, samples);
  log.zeta.resize(nsigma, samples);
  log.u_star.resize(net.input_dim(), samples);
  log.u_ism.resize(net.input_dim(), samples);
  log.max_sigma = Eigen::VectorXd::Zero(lay.ism ? N : 0);

  std::vector<double> sigma(mmax);
  long column = 0;
  auto record = [&](long k, bool heavy) {
    const std::span<const double> x(y.data(), lay.nx);
    double n2 = 0.0;
    for (double v : x) n2 += v * v;
    log.norm.push_back(std::sqrt(n2));
    if (clf) log.clf.push_back(clf->value(x));
    const double t = cfg.t0 + static_cast<double>(k) * cfg.h;
    if (lay.ism) {
      double worst0 = 0.0;
      for (int i = 0; i < N; ++i) {
        sliding(i, y.data(), sigma.data());
        const int m = net.subsystem(i).input_dim();
        const double s = ConstMap(sigma.data(), m).norm();
        if (k == 0) worst0 = std::max(worst0, s);
        if (s > log.max_sigma[i]) {
          log.max_sigma[i] = s;
          if (log.worst_sigma_subsystem < 0 || s > log.max_sigma[log.worst_sigma_subsystem]) {
            log.worst_sigma_subsystem = i;
            log.worst_sigma_time = t;
          }
        }
      }
      if (k == 0) log.initial_sigma = worst0;
    }
    if (!heavy) return;
    log.time.push_back(t);
    log.x.col(column) = ConstMap(y.data(), lay.nx);
    Scratch& s = scratch[0];
    for (int i = 0; i < N; ++i) {
      const auto& sub = net.subsystem(i);
      const int m = sub.input_dim();
      sub.dictionary().eval(x.subspan(net.state_offset(i), sub.state_dim()),
                            std::span<double>(s.z.data(), sub.dict_size()));
      local_control(i, y.data(), s);
      const int uo = net.input_offset(i);
      for (int k2 = 0; k2 < m; ++k2) {
        log.u_star(uo + k2, column) = s.u[k2];
        log.u_ism(uo + k2, column) = s.uism[k2];
      }
      if (lay.ism) {
        const int zo = lay.zeta_offset[i] - lay.nx;
        for (int k2 = 0; k2 < m; ++k2) {
          log.sigma(zo + k2, column) = s.sigma[k2];
          log.zeta(zo + k2, column) = y[lay.zeta_offset[i] + k2];
        }
      }
    }
    ++column;
  };

  FixedStepIntegrator integ(cfg.scheme, lay.dim);
  record(0, true);
  for (long k = 1; k <= steps; ++k) {
    const double t = cfg.t0 + static_cast<double>(k - 1) * cfg.h;
    integ.step(rhs, t, cfg.h, std::span<double>(y));
    double n2 = 0.0;
    for (int j = 0; j < lay.nx; ++j) n2 += y[j] * y[j];
    if (!(n2 <= kOverflow * kOverflow)) {
      std::ostringstream msg;
      msg << "state norm exceeded " << kOverflow << " at t = " << t + cfg.h << "; run aborted";
      log.aborted = true;
      log.diagnosis = msg.str();
      break;
    }
    record(k, k % cfg.log_every == 0 || k == steps);
  }
  log.time.shrink_to_fit();
  log.x.conservativeResize(Eigen::NoChange, column);
  log.sigma.conservativeResize(Eigen::NoChange, column);
  log.zeta.conservativeResize(Eigen::NoChange, column);
  log.u_star.conservativeResize(Eigen::NoChange, column);
  log.u_ism.conservativeResize(Eigen::NoChange, column);
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
  return log;
}

GasReport verify_gas(const TrajectoryLog& log, double shrink_factor, double deadline, double floor) {
  GasReport r;
  r.floor = floor;
  if (log.norm.empty()) {
    r.diagnosis = "empty log";
    return r;
  }
  if (log.aborted) {
    r.diagnosis = "run aborted: " + log.diagnosis;
    return r;
  }
  const long last = log.steps();
  if (deadline > log.time_at(last) + 0.5 * log.h) {
    r.diagnosis = "deadline lies beyond the simulated horizon";
    return r;
  }
  const long kd = log.index_at(deadline);
  r.x0_norm = log.norm[0];
  r.deadline_norm = log.norm[kd];
  r.shrink_ok = r.deadline_norm <= shrink_factor * r.x0_norm;

  // Fit ln(|x| / |x0|) = -lambda t on the part of the run above 10 floor.
  long prefix = 0;
  while (prefix <= last && log.norm[prefix] > 10.0 * floor) ++prefix;
  if (r.x0_norm <= floor) {
    r.decay_exponent = std::numeric_limits<double>::infinity();
    r.envelope_gain = 1.0;
    r.tail_max = *std::max_element(log.norm.begin(), log.norm.end());
    r.envelope_ok = r.tail_max <= floor;
  } else if (prefix >= 2) {
    double stt = 0.0, sty = 0.0;
    for (long k = 0; k < prefix; ++k) {
      const double t = log.time_at(k) - log.t0;
      stt += t * t;
      sty += t * std::log(log.norm[k] / r.x0_norm);
    }
    r.decay_exponent = -sty / stt;
    if (r.decay_exponent > 0.0) {
      // M covers every sample above the floor, so the envelope bounds the
      // run by construction; a residual above the floor pushes t_floor out.
      double M = 1.0;
      for (long k = 0; k <= last; ++k) {
        if (log.norm[k] <= floor) continue;
        const double t = log.time_at(k) - log.t0;
        M = std::max(M, log.norm[k] / (r.x0_norm * std::exp(-r.decay_exponent * t)));
      }
      r.envelope_gain = M;
      const double t_floor = std::log(M * r.x0_norm / floor) / r.decay_exponent;
      for (long k = 0; k <= last; ++k) {
        if (log.time_at(k) - log.t0 >= t_floor) r.tail_max = std::max(r.tail_max, log.norm[k]);
      }
      r.envelope_ok = t_floor <= deadline - log.t0 && r.tail_max <= floor;
      if (!r.envelope_ok) {
        std::ostringstream s;
        s << "envelope reaches the floor " << floor << " only at t = " << t_floor + log.t0
          << " (max |x| after that " << r.tail_max << ")";
        r.diagnosis = s.str();
      }
    } else {
      r.diagnosis = "no decay: fitted exponent " + std::to_string(r.decay_exponent);
    }
  } else {
    // Dropped below 10 floor within one step: only the tail matters.
    r.decay_exponent = std::numeric_limits<double>::infinity();
    r.envelope_gain = 1.0;
    for (long k = 1; k <= last; ++k) r.tail_max = std::max(r.tail_max, log.norm[k]);
    r.envelope_ok = r.tail_max <= 10.0 * floor;
  }
  if (!r.shrink_ok && r.diagnosis.empty()) {
    std::ostringstream s;
    s << "|x(" << deadline << ")| = " << r.deadline_norm << " exceeds " << shrink_factor
      << " |x(0)| = " << shrink_factor * r.x0_norm;
    r.diagnosis = s.str();
  }
  r.passed = r.shrink_ok && r.envelope_ok;
  return r;
}

SlidingReport verify_sliding(const TrajectoryLog& log, double band) {
  SlidingReport r;
  r.band = band;
  if (log.max_sigma.size() == 0) return r;  // no sliding variables: not an ISM run
  Eigen::Index arg = 0;
  r.max_sigma = log.max_sigma.maxCoeff(&arg);
  r.worst_subsystem = static_cast<int>(arg);
  r.worst_time = log.worst_sigma_time;
  r.starts_on_surface = log.initial_sigma == 0.0;
  r.passed = !log.aborted && r.max_sigma <= band;
  return r;
}

DecayReport verify_decay(const TrajectoryLog& log, double kappa, double slack, double required) {
  DecayReport r;
  r.kappa = kappa;
  r.worst_excess = -std::numeric_limits<double>::infinity();
  const auto& V = log.clf;
  if (V.size() < 3) return r;
  for (std::size_t k = 1; k + 1 < V.size(); ++k) {
    const double dv = (V[k + 1] - V[k - 1]) / (2.0 * log.h);
    const double excess = dv + kappa * V[k] - slack * (1.0 + V[k]);
    ++r.checked;
    if (excess <= 0.0) ++r.satisfied;
    if (excess > r.worst_excess) {
      r.worst_excess = excess;
      r.worst_time = log.time_at(static_cast<long>(k));
    }
  }
  r.fraction = static_cast<double>(r.satisfied) / static_cast<double>(r.checked);
  r.passed = !log.aborted && r.fraction >= required;
  return r;
}

}  // namespace ismnet
