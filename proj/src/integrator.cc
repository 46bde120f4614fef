#include "ismnet/integrator.h"

#include <string>

#include "ismnet/error.h"

namespace ismnet {

std::string_view scheme_name(Scheme scheme) {
  return scheme == Scheme::kRk4 ? "rk4" : "euler";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "rk4") return Scheme::kRk4;
  if (name == "euler") return Scheme::kEuler;
  throw ConfigError("unknown integration scheme '" + std::string(name) + "'");
}

}  // namespace ismnet
