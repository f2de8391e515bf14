#ifndef UTMLINK_POTENTIALS_HPP_
#define UTMLINK_POTENTIALS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace utmlink {

// Overflow-safe log(cosh(x)) = |x| - ln 2 + log1p(exp(-2|x|)).
inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a - 0.6931471805599453 + std::log1p(std::exp(-2.0 * a));
}

struct SigmaParams {
  double epsilon = 0.9;  // > 0
};

// Smooth surrogate for the Euclidean norm: (1/eps)(sqrt(1+eps|z|^2) - 1).
// Differentiable at z = 0 and strictly below |z| for z != 0.
inline double sigma_norm(const Eigen::Vector3d& z, double eps) {
  return (std::sqrt(1.0 + eps * z.squaredNorm()) - 1.0) / eps;
}

// Sigma norm of a vector of the given length.
inline double sigma_norm_scalar(double len, double eps) {
  return (std::sqrt(1.0 + eps * len * len) - 1.0) / eps;
}

inline Eigen::Vector3d sigma_grad(const Eigen::Vector3d& z, double eps) {
  return z / std::sqrt(1.0 + eps * z.squaredNorm());
}

// Repulsive potential family: value is the potential psi with support
// [0, d_ref), slope its derivative phi. Both vanish identically at and
// beyond d_ref.
struct PotentialFamily {
  std::string name;
  double (*value)(double d, double d_ref);
  double (*slope)(double d, double d_ref);
};

inline double psi_log_cosh(double d, double d_ref) {
  return d < d_ref ? log_cosh(d - d_ref) : 0.0;
}

inline double phi_log_cosh(double d, double d_ref) {
  return d < d_ref ? std::tanh(d - d_ref) : 0.0;
}

inline const PotentialFamily& log_cosh_family() {
  static const PotentialFamily f{"log-cosh", &psi_log_cosh, &phi_log_cosh};
  return f;
}

inline const PotentialFamily& potential_family_by_name(const std::string& name) {
  if (name == "log-cosh") return log_cosh_family();
  throw std::invalid_argument("unknown potential family: " + name);
}

// Potential configuration for one link: inter-vehicle potential (psi, phi)
// with reference separation d_hat, boundary potential (psi_b, phi_b) with
// reference clearance d_b_hat, and the sigma-norm parameter.
struct PotentialConfig {
  double d_hat = 10.0;
  double d_b_hat = 20.0;
  PotentialFamily family = log_cosh_family();
  SigmaParams sigma;

  double psi(double d) const { return family.value(d, d_hat); }
  double phi(double d) const { return family.slope(d, d_hat); }
  double psi_b(double d) const { return family.value(d, d_b_hat); }
  double phi_b(double d) const { return family.slope(d, d_b_hat); }
};

}  // namespace utmlink

#endif  // UTMLINK_POTENTIALS_HPP_
