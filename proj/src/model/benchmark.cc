#include "ismnet/model/benchmark.h"

namespace ismnet {

std::shared_ptr<const Dictionary> benchmark_dictionary() {
  static const auto dict = std::make_shared<const Dictionary>(Dictionary::parse(
      2, {"x1^2", "x1*x2", "x2^2", "sin(x1*x2)", "cos(x1*x2)", "ln(1+x1^2)",
          "ln(1+x2^2)"}));
  return dict;
}

SubsystemModel benchmark_subsystem() {
  Eigen::MatrixXd A(2, 9);
  A << 1, 1, 0, 0, 0, 0, 0, 0, 0,
       0, 0, 1, 1, 0, 0, 1, 0, 1;
  Eigen::MatrixXd B(2, 1);
  B << 0, 1;
  Perturbation p;
  p.amplitude = 20.0;
  p.frequency = 100.0;
  p.gamma_sup = 20.0;
  return SubsystemModel(benchmark_dictionary(), A, B, p);
}

NetworkModel benchmark_network(TopologyKind kind, int n_subsystems) {
  std::vector<SubsystemModel> subs(n_subsystems, benchmark_subsystem());
  return NetworkModel(std::move(subs), Topology::build(kind, n_subsystems, 2));
}

}  // namespace ismnet
