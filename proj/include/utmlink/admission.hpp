#ifndef UTMLINK_ADMISSION_HPP_
#define UTMLINK_ADMISSION_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "utmlink/dynamics.hpp"
#include "utmlink/energy.hpp"
#include "utmlink/geometry.hpp"
#include "utmlink/potentials.hpp"

namespace utmlink {

class ResidentsTooClose : public std::runtime_error {
 public:
  ResidentsTooClose(std::size_t entrant, std::size_t resident)
      : std::runtime_error("entrant " + std::to_string(entrant) +
                           " is within potential support of resident " +
                           std::to_string(resident)) {}
};

class InvalidBudget : public std::invalid_argument {
 public:
  explicit InvalidBudget(const std::string& what) : std::invalid_argument(what) {}
};

class DisconnectedLinks : public std::runtime_error {
 public:
  DisconnectedLinks() : std::runtime_error("transition region of the two links is empty") {}
};

// A group of vehicles injected into the link at t_k; with t_epsilon > 0 the
// group is treated as one multiple-entry window [t_k, t_k + t_epsilon).
struct EntryEvent {
  double t_k = 0.0;
  double t_epsilon = 0.0;
  std::vector<FlatState> entrants;
  std::vector<int> ids;
};

struct KappaGamma {
  double kappa = 0.0;  // worst per-entrant kinetic + boundary energy
  double gamma = 0.0;  // worst pairwise potential energy between entrants
};

// Energy bounds of an entering group. Requires every entrant to be outside
// the potential support of every current resident.
inline KappaGamma entry_kappa_gamma(const std::vector<FlatState>& entrants,
                                    const std::vector<FlatState>& residents,
                                    const LinkSpec& link, const PotentialConfig& pot) {
  if (entrants.empty()) throw std::invalid_argument("entrant list is empty");
  const double eps = pot.sigma.epsilon;
  for (std::size_t i = 0; i < entrants.size(); ++i) {
    for (std::size_t j = 0; j < residents.size(); ++j) {
      const double d = sigma_norm(entrants[i].q - residents[j].q, eps);
      if (pot.psi(d) != 0.0) throw ResidentsTooClose(i, j);
    }
  }
  KappaGamma out;
  for (const auto& e : entrants) {
    double energy = 0.5 * (e.qdot - link.v_hat).squaredNorm();
    for (const auto& wall : link.walls) {
      energy += pot.psi_b(wall_distance(e.q, wall));
    }
    out.kappa = std::max(out.kappa, energy);
  }
  for (std::size_t i = 0; i < entrants.size(); ++i) {
    for (std::size_t j = i + 1; j < entrants.size(); ++j) {
      const double d = sigma_norm(entrants[i].q - entrants[j].q, eps);
      out.gamma = std::max(out.gamma, 0.5 * pot.psi(d));
    }
  }
  return out;
}

struct EntryCount {
  bool unbounded = false;
  long long count = 0;
};

// Largest integer M with M*kappa + M(M-1)*gamma <= c_star (1 - lambda/T);
// 0 when the budget is non-positive, unbounded for zero-energy entrants.
inline EntryCount max_entry_count(double kappa, double gamma, double c_star,
                                  double lambda_hat, double period) {
  EntryCount out;
  if (kappa == 0.0 && gamma == 0.0) {
    out.unbounded = true;
    return out;
  }
  const double rhs = c_star * (1.0 - lambda_hat / period);
  if (rhs <= 0.0) return out;
  const auto feasible = [&](long long m) {
    const double md = static_cast<double>(m);
    return md * kappa + md * (md - 1.0) * gamma <= rhs;
  };
  long long m;
  if (gamma > 0.0) {
    const double b = kappa - gamma;
    m = static_cast<long long>(
        std::floor((-b + std::sqrt(b * b + 4.0 * gamma * rhs)) / (2.0 * gamma)));
  } else {
    m = static_cast<long long>(std::floor(rhs / kappa));
  }
  m = std::max<long long>(m, 0);
  while (m > 0 && !feasible(m)) --m;
  while (feasible(m + 1)) ++m;
  out.count = m;
  return out;
}

// Minimum entry period T >= lambda h0 / (h0 - h_eps) that keeps H below h0
// when each entry raises it by at most h_eps.
inline double min_entry_period(double lambda_hat, double h0, double h_eps) {
  if (!(h0 > 0.0) || h_eps < 0.0 || h_eps >= h0) {
    throw InvalidBudget("entry energy budget requires 0 <= h_eps < h0");
  }
  return lambda_hat * h0 / (h0 - h_eps);
}

struct TransitionBudget {
  double kappa = 0.0;
  double gamma = 0.0;        // downstream psi evaluated directly at d_hat_1
  double gamma_sigma = 0.0;  // variant with d_hat_1 passed through the sigma norm
};

// Entry budget for vehicles crossing from an upstream link at equilibrium
// into a downstream link. Both gamma conventions are reported; the direct
// evaluation is the primary value (it vanishes for identical links).
inline TransitionBudget transition_kappa_gamma(const LinkSpec& upstream,
                                               const PotentialConfig& /*up_pot*/,
                                               const LinkSpec& downstream,
                                               const PotentialConfig& down_pot) {
  std::vector<HalfSpace> shifted;
  for (const auto& w : upstream.walls) {
    shifted.emplace_back(w.normal, w.offset - upstream.d_b_hat);
  }
  for (const auto& w : downstream.walls) {
    shifted.emplace_back(w.normal, w.offset - downstream.d_b_hat);
  }
  if (max_margin_point(shifted).margin < -1e-9) throw DisconnectedLinks();

  TransitionBudget out;
  out.kappa = 0.5 * (upstream.v_hat - downstream.v_hat).squaredNorm();
  out.gamma = 0.5 * down_pot.psi(upstream.d_hat);
  out.gamma_sigma =
      0.5 * down_pot.psi(sigma_norm_scalar(upstream.d_hat, down_pot.sigma.epsilon));
  return out;
}

// Precomputed admission budget for one link under a fixed entry schedule.
struct AdmissionBudget {
  double c_star = 0.0;
  double lambda_hat = 0.0;
  double period = 0.0;   // T
  double kappa = 0.0;    // planned per-entrant bound
  double gamma = 0.0;    // planned pairwise bound
  EntryCount m_max;
};

inline AdmissionBudget make_admission_budget(double c_star, double lambda_hat,
                                             double period, double kappa,
                                             double gamma) {
  AdmissionBudget b;
  b.c_star = c_star;
  b.lambda_hat = lambda_hat;
  b.period = period;
  b.kappa = kappa;
  b.gamma = gamma;
  b.m_max = max_entry_count(kappa, gamma, c_star, lambda_hat, period);
  return b;
}

enum class RejectReason { None, Period, Count, Energy, ResidentsTooClose };

inline const char* reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "ok";
    case RejectReason::Period: return "period";
    case RejectReason::Count: return "count";
    case RejectReason::Energy: return "energy";
    case RejectReason::ResidentsTooClose: return "residents-too-close";
  }
  return "?";
}

struct AdmissionVerdict {
  bool admitted = false;
  RejectReason reason = RejectReason::None;
  std::string detail;
  double kappa = 0.0;
  double gamma = 0.0;
};

// Runtime gate: an entry is admitted iff the minimum period has elapsed, the
// group fits the planned count, the group's actual energies satisfy the
// budget inequality, and no entrant is inside a resident's potential support.
inline AdmissionVerdict admit(double now, std::optional<double> last_entry,
                              const EntryEvent& event, const AdmissionBudget& budget,
                              const std::vector<FlatState>& residents,
                              const LinkSpec& link, const PotentialConfig& pot) {
  AdmissionVerdict v;
  std::ostringstream os;
  if (last_entry && now - *last_entry < budget.period - 1e-9) {
    v.reason = RejectReason::Period;
    os << "elapsed " << (now - *last_entry) << " s < period " << budget.period << " s";
    v.detail = os.str();
    return v;
  }
  const long long m = static_cast<long long>(event.entrants.size());
  if (!budget.m_max.unbounded && m > budget.m_max.count) {
    v.reason = RejectReason::Count;
    os << m << " entrants > m_max " << budget.m_max.count;
    v.detail = os.str();
    return v;
  }
  KappaGamma actual;
  try {
    actual = entry_kappa_gamma(event.entrants, residents, link, pot);
  } catch (const ResidentsTooClose& e) {
    v.reason = RejectReason::ResidentsTooClose;
    v.detail = e.what();
    return v;
  }
  v.kappa = actual.kappa;
  v.gamma = actual.gamma;
  const double md = static_cast<double>(m);
  const double lhs = md * actual.kappa + md * (md - 1.0) * actual.gamma;
  const double rhs = budget.c_star * (1.0 - budget.lambda_hat / budget.period);
  if (lhs > rhs) {
    v.reason = RejectReason::Energy;
    os << "group energy " << lhs << " > budget " << rhs;
    v.detail = os.str();
    return v;
  }
  v.admitted = true;
  return v;
}

}  // namespace utmlink

#endif  // UTMLINK_ADMISSION_HPP_
