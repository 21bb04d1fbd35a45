#pragma once

namespace rlop {

struct FrictionSpec {
  double epsilon = 0.0;  // spread as a fraction of mid price
};

// Half-spread charged on |delta_u| shares: (epsilon / 2) * s_mid * |delta_u|.
double transaction_cost(double delta_u, double s_mid, double epsilon);

inline double transaction_cost(double delta_u, double s_mid, FrictionSpec friction) {
  return transaction_cost(delta_u, s_mid, friction.epsilon);
}

}  // namespace rlop
