#pragma once

#include <memory>

#include "ismnet/model/network.h"

namespace ismnet {

/// Learner dictionary of the two-state benchmark:
/// [x1, x2, x1^2, x1*x2, x2^2, sin(x1*x2), cos(x1*x2), ln(1+x1^2), ln(1+x2^2)].
std::shared_ptr<const Dictionary> benchmark_dictionary();

/// Two-state benchmark subsystem
///   dx1 = x1 + x2
///   dx2 = x1^2 + x1*x2 + ln(1+x2^2) + cos(x1*x2) + u + 20 sin(100 t)
/// with B = (0, 1)^T and Gamma_sup = 20.
SubsystemModel benchmark_subsystem();

/// Homogeneous network of benchmark subsystems with the default coupling
/// weight of the topology kind.
NetworkModel benchmark_network(TopologyKind kind, int n_subsystems);

}  // namespace ismnet
