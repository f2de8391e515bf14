#ifndef UTMLINK_ENERGY_HPP_
#define UTMLINK_ENERGY_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "utmlink/control.hpp"
#include "utmlink/dynamics.hpp"
#include "utmlink/geometry.hpp"
#include "utmlink/potentials.hpp"

namespace utmlink {

class DegenerateSamples : public std::invalid_argument {
 public:
  DegenerateSamples() : std::invalid_argument("sample box has zero volume") {}
};

class AssumptionViolated : public std::runtime_error {
 public:
  AssumptionViolated(double k, double l)
      : std::runtime_error("damping " + std::to_string(k) +
                           " does not exceed sqrt(1/(4L)) for L=" + std::to_string(l)) {}
};

// Hamiltonian decomposition at one instant.
struct EnergyBreakdown {
  double v_p = 0.0;  // pairwise collision potential
  double v_b = 0.0;  // boundary potential
  double v_k = 0.0;  // kinetic energy of the velocity error
  double h = 0.0;    // v_p + v_b + v_k
  double t = 0.0;
};

inline EnergyBreakdown energy(const std::vector<FlatState>& states,
                              const ProtocolParams& params, double t = 0.0) {
  const PotentialConfig& pot = params.potentials;
  const double eps = pot.sigma.epsilon;
  EnergyBreakdown out;
  out.t = t;
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < states.size(); ++j) {
      if (j == i) continue;
      out.v_p += 0.5 * pot.psi(sigma_norm(states[i].q - states[j].q, eps));
    }
    for (const auto& wall : params.link.walls) {
      out.v_b += pot.psi_b(wall_distance(states[i].q, wall));
    }
    out.v_k += 0.5 * (states[i].qdot - params.link.v_hat).squaredNorm();
  }
  out.h = out.v_p + out.v_b + out.v_k;
  return out;
}

// Energy levels below which minimum separation (c1), the speed envelope (c2)
// and minimum boundary clearance (c3) are certified.
struct SafetyThresholds {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c_star = 0.0;
};

inline SafetyThresholds thresholds(const LinkSpec& link, const PotentialConfig& pot) {
  SafetyThresholds out;
  out.c1 = pot.psi(sigma_norm_scalar(link.d_min, pot.sigma.epsilon));
  const double speed = link.v_hat.norm();
  const double v_tilde = std::min(link.v_upper - speed, speed - link.v_lower);
  out.c2 = 0.5 * v_tilde * v_tilde;
  out.c3 = pot.psi_b(link.d_b_min);
  out.c_star = std::min({out.c1, out.c2, out.c3});
  return out;
}

struct DissipationReport {
  bool monotone = true;
  double max_step_increase = 0.0;   // worst H(t+) - H(t) beyond tolerance
  double rms_mismatch = 0.0;        // relative RMS of dH/dt vs -sum K|dv|^2
  bool rate_matches = true;
};

// Checks per-step monotonicity of H within tol_rel*(1+H) and that the
// numeric dH/dt tracks the measured damping dissipation. The window must be
// free of entry events, which raise H by construction.
inline DissipationReport check_dissipation(const std::vector<EnergyBreakdown>& traj,
                                           const std::vector<double>& dissipation,
                                           const std::vector<int>& entry_steps = {},
                                           double tol_rel = 1e-6,
                                           double rate_tol = 0.02) {
  if (traj.size() != dissipation.size()) {
    throw std::invalid_argument("trajectory and dissipation lengths differ");
  }
  if (!entry_steps.empty()) {
    throw std::invalid_argument("dissipation window contains entry events");
  }
  DissipationReport out;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double dt = traj[k + 1].t - traj[k].t;
    const double dh = traj[k + 1].h - traj[k].h;
    const double tol = tol_rel * (1.0 + traj[k].h);
    if (dh > tol) {
      out.monotone = false;
      out.max_step_increase = std::max(out.max_step_increase, dh - tol);
    }
    const double expected = -0.5 * (dissipation[k] + dissipation[k + 1]);
    const double err = dh / dt - expected;
    num += err * err;
    den += expected * expected;
  }
  out.rms_mismatch = den > 0.0 ? std::sqrt(num / den) : 0.0;
  out.rate_matches = out.rms_mismatch <= rate_tol;
  return out;
}

// Empirical Lipschitz constant for a gradient field over an axis-aligned box:
// the largest sampled difference quotient, inflated by a 1.5 safety factor.
// Half the probes are nearly-coincident pairs so local curvature is captured.
inline double estimate_lipschitz(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int samples = 2000,
    unsigned seed = 0) {
  if (lo.size() != hi.size() || lo.size() == 0 || (hi - lo).minCoeff() <= 0.0) {
    throw DegenerateSamples();
  }
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const long n = lo.size();
  const double diam = (hi - lo).norm();

  const auto draw = [&]() {
    Eigen::VectorXd q(n);
    for (long d = 0; d < n; ++d) q(d) = lo(d) + unit(rng) * (hi(d) - lo(d));
    return q;
  };
  const auto clamp = [&](Eigen::VectorXd q) {
    for (long d = 0; d < n; ++d) q(d) = std::clamp(q(d), lo(d), hi(d));
    return q;
  };

  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd a = draw();
    Eigen::VectorXd b;
    if (s % 2 == 0) {
      Eigen::VectorXd dir(n);
      for (long d = 0; d < n; ++d) dir(d) = gauss(rng);
      if (dir.norm() < 1e-12) continue;
      b = clamp(a + dir.normalized() * (1e-4 * diam));
    } else {
      b = draw();
    }
    const double dist = (a - b).norm();
    if (dist < 1e-12) continue;
    best = std::max(best, (grad(a) - grad(b)).norm() / dist);
  }
  return 1.5 * best;
}

// One sample of the damped gradient flow, in the frame where the damping
// acts on qdot: Psi value, |grad Psi|^2, |qdot|^2 and grad.qdot.
struct RateSample {
  double t = 0.0;
  double psi = 0.0;
  double grad_sq = 0.0;
  double vel_sq = 0.0;
  double grad_dot_vel = 0.0;
};

struct RateCertificate {
  double lipschitz = 0.0;
  double damping = 0.0;
  double p = 0.0;
  double r = 0.0;
  double alpha = 0.0;
  double rhs_numerator = 0.0;      // (alpha+K) Psi(0) form
  double rhs_numerator_alt = 0.0;  // (alpha*K+1) Psi(0) form
};

inline RateCertificate make_rate_certificate(double damping, double lipschitz,
                                             const RateSample& initial) {
  if (!(damping > std::sqrt(1.0 / (4.0 * lipschitz)))) {
    throw AssumptionViolated(damping, lipschitz);
  }
  RateCertificate c;
  c.lipschitz = lipschitz;
  c.damping = damping;
  c.p = (2.0 * damping * lipschitz - damping * damping) /
        (4.0 * lipschitz * lipschitz);
  c.r = damping / 4.0;
  c.alpha = damping / (2.0 * lipschitz);
  const double v1_0 = 0.5 * (c.alpha * c.alpha * initial.grad_sq +
                             2.0 * c.alpha * initial.grad_dot_vel + initial.vel_sq);
  c.rhs_numerator = v1_0 + (c.alpha + damping) * initial.psi;
  c.rhs_numerator_alt = v1_0 + (c.alpha * damping + 1.0) * initial.psi;
  return c;
}

struct RateReport {
  bool bound_holds = true;
  bool bound_holds_alt = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  bool lyapunov_monotone = true;
  double max_lyapunov_increase = 0.0;
};

// Verifies at every sampled t > 0 that
//   inf_{tau in (0,t]} p|grad Psi|^2 + r|qdot|^2  <=  rhs_numerator / t
// and that the Lyapunov sum V1+V2+V3 is non-increasing. The inf is taken
// over the sample grid; rel_margin absorbs the O(dt) sampling slack.
inline RateReport verify_rate_bound(const std::vector<RateSample>& traj,
                                    const RateCertificate& cert,
                                    double rel_margin = 1e-3,
                                    double lyapunov_tol = 1e-6) {
  if (traj.size() < 2) throw std::invalid_argument("trajectory too short");
  RateReport out;
  double running_inf = std::numeric_limits<double>::infinity();
  double v3 = 0.0;
  double prev_v = std::numeric_limits<double>::infinity();
  double prev_integrand = 0.0;
  double prev_t = traj.front().t;
  const double t0 = traj.front().t;

  for (std::size_t k = 0; k < traj.size(); ++k) {
    const RateSample& s = traj[k];
    const double integrand = cert.p * s.grad_sq + cert.r * s.vel_sq;
    if (k > 0) {
      v3 += 0.5 * (integrand + prev_integrand) * (s.t - prev_t);
      running_inf = std::min(running_inf, integrand);
      const double elapsed = s.t - t0;
      if (elapsed > 0.0) {
        const double rhs = cert.rhs_numerator / elapsed;
        const double margin = rhs * (1.0 + rel_margin) - running_inf;
        out.worst_margin = std::min(out.worst_margin, margin);
        if (margin < 0.0) out.bound_holds = false;
        if (running_inf > cert.rhs_numerator_alt / elapsed * (1.0 + rel_margin)) {
          out.bound_holds_alt = false;
        }
      }
    }
    const double v1 = 0.5 * (cert.alpha * cert.alpha * s.grad_sq +
                             2.0 * cert.alpha * s.grad_dot_vel + s.vel_sq);
    const double v2 = (cert.alpha * cert.damping + 1.0) * s.psi;
    const double v = v1 + v2 + v3;
    if (k > 0 && v > prev_v + lyapunov_tol * (1.0 + std::abs(prev_v))) {
      out.lyapunov_monotone = false;
      out.max_lyapunov_increase = std::max(out.max_lyapunov_increase, v - prev_v);
    }
    prev_v = v;
    prev_integrand = integrand;
    prev_t = s.t;
  }
  return out;
}

struct LambdaEstimate {
  double lambda = 0.0;
  double t_at = 0.0;
};

// Empirical convergence factor: sup over sampled t of (t-t0) H(t) / H(t0).
// Returns 0 when H is identically zero.
inline LambdaEstimate estimate_lambda(const std::vector<EnergyBreakdown>& traj,
                                      double t0) {
  LambdaEstimate out;
  if (traj.empty()) return out;
  const EnergyBreakdown* start = nullptr;
  for (const auto& e : traj) {
    if (e.t >= t0 - 1e-12) {
      start = &e;
      break;
    }
  }
  if (start == nullptr || start->h <= 0.0) return out;
  for (const auto& e : traj) {
    if (e.t <= start->t) continue;
    const double value = (e.t - start->t) * e.h / start->h;
    if (value > out.lambda) {
      out.lambda = value;
      out.t_at = e.t;
    }
  }
  return out;
}

}  // namespace utmlink

#endif  // UTMLINK_ENERGY_HPP_
