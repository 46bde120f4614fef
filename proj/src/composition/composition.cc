#include "ismnet/composition/composition.h"

#include <algorithm>
#include <limits>
#include <sstream>

#include "ismnet/error.h"
#include "ismnet/kernels/kernels.h"

namespace ismnet {

IssConstants IssConstants::from(const IssCertificate& cert) {
  return {cert.kappa, cert.rho, cert.alpha1, cert.alpha2};
}

double SmallGainData::rho_hat(int i, int j) const {
  if (i == j) return 0.0;
  if (!strict_dense && !topology->has_edge(j, i)) return 0.0;
  return rho[i] / alpha1[j];
}

Eigen::SparseMatrix<double> SmallGainData::rho_hat_sparse() const {
  Eigen::SparseMatrix<double> m(size(), size());
  if (strict_dense) return m;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(topology->edges().size());
  for (const auto& e : topology->edges()) trips.emplace_back(e.to, e.from, rho[e.to] / alpha1[e.from]);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SmallGainData smallgain_matrix(std::span<const IssConstants> constants, const Topology& topology,
                               bool strict_dense) {
  const int N = topology.size();
  if (static_cast<int>(constants.size()) != N) {
    throw DimensionError("smallgain_matrix: one certificate per subsystem is required");
  }
  SmallGainData d;
  d.strict_dense = strict_dense;
  d.topology = std::make_shared<const Topology>(topology);
  d.kappa.resize(N);
  d.rho.resize(N);
  d.alpha1.resize(N);
  for (int i = 0; i < N; ++i) {
    const auto& c = constants[i];
    if (!(c.alpha1 > 0.0) || !(c.kappa > 0.0) || !(c.rho >= 0.0)) {
      throw DomainError("smallgain_matrix: subsystem " + std::to_string(i) +
                        " needs kappa > 0, rho >= 0, alpha1 > 0");
    }
    d.kappa[i] = c.kappa;
    d.rho[i] = c.rho;
    d.alpha1[i] = c.alpha1;
  }
  // Xi_j = -kappa_j + (sum of rho_i over the subsystems j influences) / alpha1_j
  Eigen::VectorXd influenced = Eigen::VectorXd::Zero(N);
  if (strict_dense) {
    const double total = d.rho.sum();
    for (int j = 0; j < N; ++j) influenced[j] = total - d.rho[j];
  } else {
    for (const auto& e : topology.edges()) influenced[e.from] += d.rho[e.to];
  }
  d.Xi = -d.kappa + influenced.cwiseQuotient(d.alpha1);
  return d;
}

Eigen::VectorXd column_sums(const SmallGainData& data) {
  const int N = data.size();
  Eigen::VectorXd out(N);
  if (data.strict_dense) {
    for (int j = 0; j < N; ++j) {
      double s = -data.kappa[j];
      for (int i = 0; i < N; ++i) s += data.rho_hat(i, j);
      out[j] = s;
    }
    return out;
  }
  const Eigen::SparseMatrix<double> rh = data.rho_hat_sparse();
  for (int j = 0; j < N; ++j) {
    double s = -data.kappa[j];
    for (Eigen::SparseMatrix<double>::InnerIterator it(rh, j); it; ++it) s += it.value();
    out[j] = s;
  }
  return out;
}

SmallGainVerdict check_smallgain(const Eigen::VectorXd& Xi) {
  SmallGainVerdict v;
  if (Xi.size() == 0) throw DimensionError("check_smallgain: empty Xi");
  Eigen::Index arg = 0;
  v.max_xi = Xi.maxCoeff(&arg);
  v.argmax = static_cast<int>(arg);
  v.feasible = v.max_xi < -1e-12;
  if (v.feasible) {
    v.kappa = -v.max_xi;
  } else {
    std::ostringstream s;
    s << "small-gain condition fails at subsystem " << v.argmax << " (Xi = " << v.max_xi
      << "); collect different trajectories or retry with larger kappa / smaller rho";
    v.hint = s.str();
  }
  return v;
}

NetworkClf::NetworkClf(std::vector<Eigen::MatrixXd> blocks, std::vector<int> block_of,
                       double alpha1, double alpha2, double kappa)
    : blocks_(std::move(blocks)),
      block_of_(std::move(block_of)),
      alpha1_(alpha1),
      alpha2_(alpha2),
      kappa_(kappa) {
  if (block_of_.empty()) throw DimensionError("NetworkClf without subsystems");
  offsets_.push_back(0);
  for (int b : block_of_) {
    if (b < 0 || b >= static_cast<int>(blocks_.size())) throw DimensionError("bad CLF block index");
    offsets_.push_back(offsets_.back() + static_cast<int>(blocks_[b].rows()));
  }
  for (const auto& P : blocks_) row_major_.emplace_back(P);
  shared_ = blocks_.size() == 1;
}

double NetworkClf::value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != state_dim()) throw DimensionError("CLF: wrong state length");
  const auto& k = kernels::active();
  if (shared_) {
    const auto n = static_cast<std::size_t>(blocks_[0].rows());
    std::vector<double> q(block_of_.size());
    k.shared_quadratic_forms(x.data(), row_major_[0].data(), q.size(), n, q.data());
    double v = 0.0;
    for (double t : q) v += t;
    return v;
  }
  double v = 0.0;
  for (int i = 0; i < size(); ++i) {
    const auto& P = row_major_[block_of_[i]];
    double q = 0.0;
    k.quadratic_forms(x.data() + offsets_[i], P.data(), 1, P.rows(), &q);
    v += q;
  }
  return v;
}

double NetworkClf::value(const Eigen::VectorXd& x) const {
  return value(std::span<const double>(x.data(), x.size()));
}

Eigen::VectorXd NetworkClf::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != state_dim()) throw DimensionError("CLF: wrong state length");
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < size(); ++i) {
    const auto& Pi = P(i);
    g.segment(offsets_[i], Pi.rows()) = 2.0 * Pi * x.segment(offsets_[i], Pi.rows());
  }
  return g;
}

NetworkClf NetworkCertificate::clf() const {
  if (!feasible()) throw InfeasibleError("small-gain", "network CLF requested for an infeasible composition");
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& c : certs) blocks.push_back(c.P);
  return NetworkClf(std::move(blocks), cert_of, alpha1, alpha2, kappa());
}

NetworkCertificate compose(std::vector<IssCertificate> certs, std::vector<int> cert_of,
                           const Topology& topology, bool strict_dense) {
  if (static_cast<int>(cert_of.size()) != topology.size()) {
    throw DimensionError("compose: missing certificate for some subsystem");
  }
  NetworkCertificate nc;
  nc.certs = std::move(certs);
  nc.cert_of = std::move(cert_of);
  std::vector<IssConstants> k;
  k.reserve(nc.cert_of.size());
  nc.alpha1 = std::numeric_limits<double>::infinity();
  for (int c : nc.cert_of) {
    if (c < 0 || c >= static_cast<int>(nc.certs.size())) {
      throw DimensionError("compose: certificate index out of range");
    }
    k.push_back(IssConstants::from(nc.certs[c]));
    nc.alpha1 = std::min(nc.alpha1, nc.certs[c].alpha1);
    nc.alpha2 = std::max(nc.alpha2, nc.certs[c].alpha2);
  }
  nc.smallgain = smallgain_matrix(k, topology, strict_dense);
  nc.verdict = check_smallgain(nc.smallgain.Xi);
  return nc;
}

}  // namespace ismnet
