#include "ismnet/model/network.h"

#include "ismnet/error.h"

namespace ismnet {

NetworkModel::NetworkModel(std::vector<SubsystemModel> subsystems, Topology topology)
    : subsystems_(std::move(subsystems)), topology_(std::move(topology)) {
  const int n = size();
  if (n != topology_.size()) {
    throw DimensionError("topology has " + std::to_string(topology_.size()) +
                         " nodes but " + std::to_string(n) + " subsystems were given");
  }
  state_offset_.assign(n + 1, 0);
  input_offset_.assign(n + 1, 0);
  dict_offset_.assign(n + 1, 0);
  psi_.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    state_offset_[i + 1] = state_offset_[i] + subsystems_[i].state_dim();
    input_offset_[i + 1] = input_offset_[i] + subsystems_[i].input_dim();
    dict_offset_[i + 1] = dict_offset_[i] + subsystems_[i].dict_size();
  }
  for (const auto& e : topology_.edges()) {
    const auto& w = topology_.weight(e);
    const int ni = subsystems_[e.to].state_dim();
    const int nj = subsystems_[e.from].state_dim();
    if (w.rows() != ni || w.cols() != nj) {
      throw DimensionError("coupling " + std::to_string(e.from + 1) + " -> " +
                           std::to_string(e.to + 1) + " must be " + std::to_string(ni) +
                           " x " + std::to_string(nj));
    }
    psi_[e.to] += nj;
  }
}

Eigen::MatrixXd NetworkModel::coupling_matrix(int i) const {
  Eigen::MatrixXd D(subsystems_[i].state_dim(), psi_[i]);
  int col = 0;
  for (const auto& e : topology_.in_edges(i)) {
    const auto& w = topology_.weight(e);
    D.middleCols(col, w.cols()) = w;
    col += static_cast<int>(w.cols());
  }
  return D;
}

void NetworkModel::gather_w(int i, std::span<const double> x, std::span<double> w) const {
  std::size_t k = 0;
  for (const auto& e : topology_.in_edges(i)) {
    const int off = state_offset_[e.from];
    const int nj = subsystems_[e.from].state_dim();
    for (int r = 0; r < nj; ++r) w[k++] = x[off + r];
  }
}

Eigen::VectorXd NetworkModel::gather_w(int i, const Eigen::VectorXd& x) const {
  if (x.size() != state_dim()) throw DimensionError("gather_w: x has wrong length");
  Eigen::VectorXd w(psi_[i]);
  gather_w(i, std::span<const double>(x.data(), x.size()),
           std::span<double>(w.data(), w.size()));
  return w;
}

Eigen::SparseMatrix<double> NetworkModel::assembled_A() const {
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < size(); ++i) {
    const auto& A = subsystems_[i].A();
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      for (Eigen::Index c = 0; c < A.cols(); ++c) {
        if (A(r, c) != 0.0) trip.emplace_back(state_offset_[i] + r, dict_offset_[i] + c, A(r, c));
      }
    }
  }
  // Off-diagonal blocks touch only the linear head of Z_j; the padding is zero.
  for (const auto& e : topology_.edges()) {
    const auto& w = topology_.weight(e);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (w(r, c) != 0.0) {
          trip.emplace_back(state_offset_[e.to] + r, dict_offset_[e.from] + c, w(r, c));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> out(state_dim(), dict_dim());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::SparseMatrix<double> NetworkModel::assembled_B() const {
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < size(); ++i) {
    const auto& B = subsystems_[i].B();
    for (Eigen::Index r = 0; r < B.rows(); ++r) {
      for (Eigen::Index c = 0; c < B.cols(); ++c) {
        if (B(r, c) != 0.0) trip.emplace_back(state_offset_[i] + r, input_offset_[i] + c, B(r, c));
      }
    }
  }
  Eigen::SparseMatrix<double> out(state_dim(), input_dim());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::MatrixXd NetworkModel::block(const Eigen::SparseMatrix<double>& assembled,
                                    int i, int j) const {
  if (assembled.rows() != state_dim() || assembled.cols() != dict_dim()) {
    throw DimensionError("block: matrix is not laid out like assembled_A()");
  }
  const int ni = subsystems_[i].state_dim();
  const int zj = subsystems_[j].dict_size();
  return Eigen::MatrixXd(assembled.block(state_offset_[i], dict_offset_[j], ni, zj));
}

void NetworkModel::rhs(std::span<const double> x, std::span<const double> u, double t,
                       bool perturbed, std::span<double> xdot) const {
  if (static_cast<int>(x.size()) != state_dim() || static_cast<int>(u.size()) != input_dim() ||
      x.size() != xdot.size()) {
    throw DimensionError("network rhs: wrong stacked vector lengths");
  }
  Eigen::VectorXd z, gamma;
  for (int i = 0; i < size(); ++i) {
    const auto& s = subsystems_[i];
    const int n = s.state_dim();
    const int m = s.input_dim();
    z.resize(s.dict_size());
    s.dictionary().eval(x.subspan(state_offset_[i], n), std::span<double>(z.data(), z.size()));
    Eigen::Map<Eigen::VectorXd> out(xdot.data() + state_offset_[i], n);
    Eigen::Map<const Eigen::VectorXd> ui(u.data() + input_offset_[i], m);
    out.noalias() = s.A() * z;
    out.noalias() += s.B() * ui;
    add_coupling(i, x, out.data());
    if (perturbed) {
      gamma = s.perturbation().eval(m, t);
      out.noalias() += s.B() * gamma;
    }
  }
}

void NetworkModel::add_coupling(int i, std::span<const double> x, double* out) const {
  const int ni = subsystems_[i].state_dim();
  for (const auto& e : topology_.in_edges(i)) {
    const auto& w = topology_.weight(e);
    const double* xj = x.data() + state_offset_[e.from];
    const Eigen::Index nj = w.cols();
    for (int r = 0; r < ni; ++r) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < nj; ++c) acc += w(r, c) * xj[c];
      out[r] += acc;
    }
  }
}

Eigen::VectorXd NetworkModel::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  double t, bool perturbed) const {
  Eigen::VectorXd xdot(x.size());
  rhs(std::span<const double>(x.data(), x.size()), std::span<const double>(u.data(), u.size()),
      t, perturbed, std::span<double>(xdot.data(), xdot.size()));
  return xdot;
}

std::vector<int> NetworkModel::equivalence_classes() const {
  std::vector<int> rep(size());
  std::vector<int> reps;
  auto same_coupling = [&](int a, int b) {
    const auto ea = topology_.in_edges(a);
    const auto eb = topology_.in_edges(b);
    if (ea.size() != eb.size()) return false;
    for (std::size_t k = 0; k < ea.size(); ++k) {
      if (ea[k].weight == eb[k].weight) continue;
      const auto& wa = topology_.weight(ea[k]);
      const auto& wb = topology_.weight(eb[k]);
      if (wa.rows() != wb.rows() || wa.cols() != wb.cols() || wa != wb) return false;
    }
    return true;
  };
  for (int i = 0; i < size(); ++i) {
    rep[i] = i;
    for (int r : reps) {
      if (subsystems_[r].same_dynamics(subsystems_[i]) && same_coupling(r, i)) {
        rep[i] = r;
        break;
      }
    }
    if (rep[i] == i) reps.push_back(i);
  }
  return rep;
}

}  // namespace ismnet
