#ifndef UTMLINK_CONTROL_HPP_
#define UTMLINK_CONTROL_HPP_

#include <vector>

#include "utmlink/dynamics.hpp"
#include "utmlink/geometry.hpp"
#include "utmlink/potentials.hpp"

namespace utmlink {

struct ProtocolParams {
  double damping = 0.1;  // > 0, per second
  PotentialConfig potentials;
  LinkSpec link;
};

// Control acceleration for vehicle i:
//   u_i = -grad_{q_i}(V_p + V_b) - K (qdot_i - v_hat)
// with the pairwise gradient phi(|q_ij|_sigma) * q_ij / sqrt(1+eps|q_ij|^2)
// and the boundary gradient -phi_b(d_in) * n_hat for each wall, so that
// H loses energy at exactly the damping rate. Accumulation is in fixed
// index order for determinism.
inline FlatInput control_accel(std::size_t i, const std::vector<FlatState>& states,
                               const ProtocolParams& params) {
  const PotentialConfig& pot = params.potentials;
  const double eps = pot.sigma.epsilon;
  const FlatState& self = states[i];

  Eigen::Vector3d u = Eigen::Vector3d::Zero();
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (j == i) continue;
    const Eigen::Vector3d q_ij = self.q - states[j].q;
    const double d_sigma = sigma_norm(q_ij, eps);
    const double slope = pot.phi(d_sigma);
    if (slope != 0.0) u -= slope * sigma_grad(q_ij, eps);
  }
  for (const auto& wall : params.link.walls) {
    const double d_in = wall_distance(self.q, wall);
    const double slope = pot.phi_b(d_in);
    if (slope != 0.0) u += slope * wall.normal;
  }
  u -= params.damping * (self.qdot - params.link.v_hat);
  return FlatInput{u};
}

inline std::vector<FlatInput> control_all(const std::vector<FlatState>& states,
                                          const ProtocolParams& params) {
  std::vector<FlatInput> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    out.push_back(control_accel(i, states, params));
  }
  return out;
}

}  // namespace utmlink

#endif  // UTMLINK_CONTROL_HPP_
