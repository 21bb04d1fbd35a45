#include "rlop/costs.hpp"

#include <cmath>
#include <stdexcept>

namespace rlop {

double transaction_cost(double delta_u, double s_mid, double epsilon) {
  if (!(s_mid > 0.0)) throw std::invalid_argument("transaction_cost: mid price must be > 0");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("transaction_cost: epsilon must be >= 0");
  return 0.5 * epsilon * s_mid * std::abs(delta_u);
}

}  // namespace rlop
