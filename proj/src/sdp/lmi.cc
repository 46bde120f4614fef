#include "ismnet/sdp/lmi.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "ismnet/error.h"

namespace ismnet::sdp {

namespace {

// Barrier value, gradient and Hessian of -sum_j log det F_j(v).
struct BarrierEval {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

bool blocks_feasible(const Problem& p, const Eigen::VectorXd& v, double* barrier) {
  double acc = 0.0;
  for (const auto& b : p.blocks) {
    if (b.dim() == 0) continue;
    Eigen::LLT<Eigen::MatrixXd> llt(b.eval(v));
    if (llt.info() != Eigen::Success) return false;
    const auto d = llt.matrixLLT().diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(d[i] > 0.0) || !std::isfinite(d[i])) return false;
      acc -= 2.0 * std::log(d[i]);
    }
  }
  if (barrier) *barrier = acc;
  return true;
}

BarrierEval evaluate(const Problem& p, const Eigen::VectorXd& v) {
  BarrierEval out;
  const int nv = p.num_vars;
  out.grad = Eigen::VectorXd::Zero(nv);
  out.hess = Eigen::MatrixXd::Zero(nv, nv);
  std::vector<Eigen::MatrixXd> scaled(nv);
  for (const auto& b : p.blocks) {
    if (b.dim() == 0) continue;
    Eigen::LLT<Eigen::MatrixXd> llt(b.eval(v));
    if (llt.info() != Eigen::Success) return out;
    const auto L = llt.matrixL();
    const auto d = llt.matrixLLT().diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(d[i] > 0.0)) return out;
      out.value -= 2.0 * std::log(d[i]);
    }
    std::vector<int> active;
    for (int k = 0; k < nv; ++k) {
      if (b.F[k].size() == 0) continue;
      // A_k = L^{-1} F_k L^{-T}
      Eigen::MatrixXd X = L.solve(b.F[k]);
      scaled[k] = L.solve(X.transpose());
      active.push_back(k);
    }
    for (std::size_t a = 0; a < active.size(); ++a) {
      const int k = active[a];
      out.grad[k] -= scaled[k].trace();
      for (std::size_t c = a; c < active.size(); ++c) {
        const int l = active[c];
        const double h = scaled[k].cwiseProduct(scaled[l]).sum();
        out.hess(k, l) += h;
        if (l != k) out.hess(l, k) += h;
      }
    }
  }
  out.feasible = true;
  return out;
}

int total_dim(const Problem& p) {
  int m = 0;
  for (const auto& b : p.blocks) m += b.dim();
  return m;
}

// Initial barrier weight. With a large objective at the start, t_init would
// put the first central point far away and damped Newton only closes that
// distance by O(1) per step; m / |c^T v| keeps it nearby.
double initial_weight(const Options& opt, int m, double objective) {
  const double a = std::abs(objective);
  return a > 0.0 ? std::min(opt.t_init, m / a) : opt.t_init;
}

Eigen::VectorXd solve_newton(const Eigen::MatrixXd& H, const Eigen::VectorXd& rhs) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd dx = ldlt.solve(rhs);
    if (dx.allFinite() && (H * dx - rhs).norm() <= 1e-8 * (1.0 + rhs.norm())) return dx;
  }
  // Singular Hessian: variables the barrier does not see. Regularize.
  const double ridge = 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd Hr = H;
  Hr.diagonal().array() += ridge;
  return Hr.ldlt().solve(rhs);
}

// One centering step sequence for the objective t c^T v + barrier(v).
// Returns Newton steps used. `stop` is polled after every accepted step.
template <class Stop>
int center(const Problem& p, const Eigen::VectorXd& c, double t, Eigen::VectorXd& v,
           const Options& opt, int budget, Stop&& stop, bool* stopped) {
  int steps = 0;
  while (steps < budget) {
    const BarrierEval e = evaluate(p, v);
    if (!e.feasible) throw SolverError("interior-point iterate left the feasible set");
    const Eigen::VectorXd g = t * c + e.grad;
    const Eigen::VectorXd dx = solve_newton(e.hess, -g);
    const double decrement2 = -g.dot(dx);
    if (!std::isfinite(decrement2)) throw SolverError("non-finite Newton step");
    if (decrement2 / 2.0 <= opt.newton_tol) return steps;
    const double f0 = t * c.dot(v) + e.value;
    double alpha = 1.0;
    Eigen::VectorXd trial;
    double f1 = f0;
    for (;;) {
      trial = v + alpha * dx;
      double bar = 0.0;
      if (blocks_feasible(p, trial, &bar) &&
          (f1 = t * c.dot(trial) + bar) <= f0 - 0.01 * alpha * decrement2) {
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-14) return steps;  // no progress possible at this t
    }
    const double gained = f0 - f1;
    v = trial;
    ++steps;
    if (stop(v)) {
      *stopped = true;
      return steps;
    }
    // Rounding floor: the merit function no longer moves measurably.
    if (gained <= 1e-13 * (1.0 + std::abs(f0))) return steps;
  }
  return steps;
}

std::string dominant_dual_block(const Problem& p, const Eigen::VectorXd& v) {
  double best = -1.0;
  std::string name = p.blocks.empty() ? std::string("none") : p.blocks.front().name;
  for (const auto& b : p.blocks) {
    if (b.dim() == 0) continue;
    Eigen::LLT<Eigen::MatrixXd> llt(b.eval(v));
    if (llt.info() != Eigen::Success) continue;
    const double w = llt.solve(Eigen::MatrixXd::Identity(b.dim(), b.dim())).trace();
    if (w > best) {
      best = w;
      name = b.name;
    }
  }
  return name;
}

// Phase I: returns a strictly feasible point or throws InfeasibleError.
Eigen::VectorXd find_interior(const Problem& p, const Eigen::VectorXd& v0, const Options& opt,
                              int* steps) {
  double scale = 0.0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& b : p.blocks) {
    if (b.dim() == 0) continue;
    const Eigen::MatrixXd F = b.eval(v0);
    scale = std::max(scale, F.cwiseAbs().maxCoeff());
    worst = std::min(worst, min_eigenvalue(F));
  }
  Problem aux;
  aux.num_vars = p.num_vars + 1;
  aux.c = Eigen::VectorXd::Zero(aux.num_vars);
  aux.c[p.num_vars] = 1.0;
  for (const auto& b : p.blocks) {
    LmiBlock a{b.name, b.F0, b.F};
    a.F.push_back(Eigen::MatrixXd::Identity(b.dim(), b.dim()));
    aux.blocks.push_back(std::move(a));
  }
  Eigen::VectorXd v(aux.num_vars);
  v.head(p.num_vars) = v0;
  v[p.num_vars] = std::max(0.0, -worst) + 1.0 + 1e-3 * scale;

  const int m = total_dim(p);
  double t = initial_weight(opt, m, v[p.num_vars]);
  bool found = false;
  auto stop = [&](const Eigen::VectorXd& x) {
    return x[p.num_vars] < 0.0 && blocks_feasible(p, x.head(p.num_vars), nullptr);
  };
  while (*steps < opt.max_newton) {
    *steps += center(aux, aux.c, t, v, opt, opt.max_newton - *steps, stop, &found);
    const double s = v[p.num_vars];
    if (found || (s < 0.0 && blocks_feasible(p, v.head(p.num_vars), nullptr))) {
      return v.head(p.num_vars);
    }
    const double gap = m / t;
    if (s - gap > 0.0 || gap < opt.gap_tol * (1.0 + std::abs(s))) {
      std::ostringstream msg;
      msg << "no strictly feasible point: constraint violation bound " << s
          << " at the phase-I optimum";
      const std::string family = dominant_dual_block(aux, v);
      throw InfeasibleError(family, msg.str() + " (binding block: " + family + ")");
    }
    t *= opt.t_growth;
  }
  throw SolverError("phase I did not converge within the Newton budget");
}

}  // namespace

Eigen::MatrixXd LmiBlock::eval(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd out = F0;
  for (std::size_t k = 0; k < F.size(); ++k) {
    if (F[k].size() != 0 && v[k] != 0.0) out.noalias() += v[k] * F[k];
  }
  return out;
}

LmiBlock& Problem::add_block(std::string name, Eigen::MatrixXd F0) {
  LmiBlock b;
  b.name = std::move(name);
  b.F0 = std::move(F0);
  b.F.resize(num_vars);
  blocks.push_back(std::move(b));
  return blocks.back();
}

void Problem::validate() const {
  if (num_vars < 1) throw DimensionError("LMI problem without variables");
  if (c.size() != 0 && c.size() != num_vars) throw DimensionError("objective has wrong length");
  for (const auto& b : blocks) {
    if (b.F0.rows() != b.F0.cols()) throw DimensionError("block '" + b.name + "' is not square");
    if (static_cast<int>(b.F.size()) != num_vars) {
      throw DimensionError("block '" + b.name + "' has the wrong number of coefficients");
    }
    for (const auto& f : b.F) {
      if (f.size() != 0 && (f.rows() != b.dim() || f.cols() != b.dim())) {
        throw DimensionError("block '" + b.name + "' has a mis-sized coefficient");
      }
    }
    if ((b.F0 - b.F0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + b.F0.norm())) {
      throw DimensionError("block '" + b.name + "' is not symmetric");
    }
  }
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

Result solve(const Problem& problem, const Options& opt, const Eigen::VectorXd* start) {
  problem.validate();
  Result r;
  Eigen::VectorXd v = start ? *start : Eigen::VectorXd::Zero(problem.num_vars);
  if (v.size() != problem.num_vars) throw DimensionError("start point has wrong length");
  if (!blocks_feasible(problem, v, nullptr)) v = find_interior(problem, v, opt, &r.newton_steps);

  const Eigen::VectorXd c =
      problem.c.size() ? problem.c : Eigen::VectorXd::Zero(problem.num_vars);
  bool unused = false;
  auto never = [](const Eigen::VectorXd&) { return false; };
  int steps = 0;
  if (c.isZero()) {
    steps = center(problem, c, 0.0, v, opt, opt.max_center, never, &unused);
  } else {
    const int m = total_dim(problem);
    double t = initial_weight(opt, m, c.dot(v));
    for (;;) {
      steps += center(problem, c, t, v, opt, opt.max_newton - steps, never, &unused);
      const double scale = 1.0 + std::abs(c.dot(v));
      if (m / t < opt.gap_tol * scale) break;
      if (steps >= opt.max_newton) {
        // Precision-limited before the requested gap: accept a point whose
        // gap is still small, otherwise give up.
        if (m / t < opt.gap_accept * scale) break;
        throw SolverError("barrier method did not reach the duality-gap tolerance");
      }
      t *= opt.t_growth;
    }
  }
  r.newton_steps += steps;
  r.v = v;
  r.objective = c.dot(v);
  for (const auto& b : problem.blocks) r.min_eig.push_back(min_eigenvalue(b.eval(v)));
  return r;
}

}  // namespace ismnet::sdp
