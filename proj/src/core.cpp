#include "harmapprox/core.hpp"

#include <numbers>

namespace ha {

double sphere_area(int d) {
  // sigma_{d-1} = 2 pi^{d/2} / Gamma(d/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double newton_constant(int d) {
  if (d < 3) throw InvalidArgument("Newtonian kernel requires d >= 3");
  return -1.0 / ((d - 2) * sphere_area(d));
}

}  // namespace ha
