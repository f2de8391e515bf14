#ifndef UTMLINK_GEOMETRY_HPP_
#define UTMLINK_GEOMETRY_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace utmlink {

// Half-space constraint <normal, x> <= offset with unit-norm normal.
struct HalfSpace {
  Eigen::Vector3d normal;
  double offset;

  HalfSpace(const Eigen::Vector3d& n, double b) {
    const double len = n.norm();
    if (len < 1e-12) {
      throw std::invalid_argument("HalfSpace: normal must be nonzero");
    }
    normal = n / len;
    offset = b / len;
  }
};

// A traffic link: wall half-spaces, entrance/exit gates, desired velocity,
// separation and boundary parameters, and the speed envelope.
struct LinkSpec {
  std::vector<HalfSpace> walls;
  std::vector<HalfSpace> gates;
  Eigen::Vector3d v_hat{0.0, 0.0, 0.0};
  double d_hat = 0.0;
  double d_min = 0.0;
  double d_b_hat = 0.0;
  double d_b_min = 0.0;
  double v_upper = 0.0;
  double v_lower = 0.0;
};

// Signed wall distance: positive strictly inside the half-space, zero on the
// plane, negative outside.
inline double wall_distance(const Eigen::Vector3d& q, const HalfSpace& wall) {
  return wall.offset - wall.normal.dot(q);
}

struct MarginPoint {
  Eigen::Vector3d point{0.0, 0.0, 0.0};
  double margin = -std::numeric_limits<double>::infinity();
};

// Maximizes the minimum wall clearance min_n (b_n - <n_n, q>) over q.
// The optimum of the epigraph LP sits on at most four active constraints,
// so candidate points are enumerated from minimum-norm solutions of all
// active subsets of size 1..4. Unbounded margins (normals confined to an
// open half-space) are detected from the mean-normal direction.
inline MarginPoint max_margin_point(const std::vector<HalfSpace>& walls) {
  MarginPoint best;
  if (walls.empty()) {
    best.margin = std::numeric_limits<double>::infinity();
    best.point.setZero();
    return best;
  }

  const auto margin_at = [&](const Eigen::Vector3d& q) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& w : walls) m = std::min(m, wall_distance(q, w));
    return m;
  };

  const auto consider = [&](const Eigen::Vector3d& q) {
    if (!q.allFinite()) return;
    const double m = margin_at(q);
    if (m > best.margin) {
      best.margin = m;
      best.point = q;
    }
  };

  // Centroid of the wall foot points as a cheap starting candidate.
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& w : walls) centroid += w.normal * w.offset;
  consider(centroid / static_cast<double>(walls.size()));

  const int m = static_cast<int>(walls.size());
  std::vector<int> subset;
  const auto solve_subset = [&]() {
    const int k = static_cast<int>(subset.size());
    Eigen::MatrixXd a(k, 4);
    Eigen::VectorXd rhs(k);
    for (int r = 0; r < k; ++r) {
      a.row(r).head<3>() = walls[subset[r]].normal.transpose();
      a(r, 3) = 1.0;
      rhs(r) = walls[subset[r]].offset;
    }
    const Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(rhs);
    consider(x.head<3>());
  };

  for (int i = 0; i < m; ++i) {
    subset = {i};
    solve_subset();
    for (int j = i + 1; j < m; ++j) {
      subset = {i, j};
      solve_subset();
      for (int k = j + 1; k < m; ++k) {
        subset = {i, j, k};
        solve_subset();
        for (int l = k + 1; l < m; ++l) {
          subset = {i, j, k, l};
          solve_subset();
        }
      }
    }
  }

  // If every normal has positive projection on some direction -u, marching
  // along u grows all clearances without bound.
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& w : walls) sum += w.normal;
  if (sum.norm() > 1e-12) {
    const Eigen::Vector3d u = -sum.normalized();
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& w : walls) worst = std::max(worst, w.normal.dot(u));
    if (worst < -1e-12) {
      best.margin = std::numeric_limits<double>::infinity();
      // Witness construction is deferred to the caller's target clearance.
      best.point -= (u * 0.0);
      // Walk far enough that margins are clearly growing; callers re-walk
      // to their own clearance via margin_at if needed.
      Eigen::Vector3d q = centroid / static_cast<double>(walls.size());
      const double need = 1.0 - margin_at(q);
      if (need > 0.0) q += u * (need / -worst);
      best.point = q;
    }
  }
  return best;
}

// True with a witness point whose clearance to every wall is at least
// d_b_hat (within 1e-9); empty optional otherwise.
inline std::optional<Eigen::Vector3d> core_region_witness(const LinkSpec& link) {
  std::vector<HalfSpace> shifted;
  shifted.reserve(link.walls.size());
  for (const auto& w : link.walls) {
    shifted.emplace_back(w.normal, w.offset - link.d_b_hat);
  }
  MarginPoint mp = max_margin_point(shifted);
  if (std::isinf(mp.margin) && mp.margin > 0.0 && !link.walls.empty()) {
    // Unbounded margin: walk the witness until the shifted clearance is
    // comfortably positive.
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& w : shifted) sum += w.normal;
    const Eigen::Vector3d u = -sum.normalized();
    Eigen::Vector3d q = mp.point;
    for (int it = 0; it < 64; ++it) {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& w : shifted) worst = std::min(worst, wall_distance(q, w));
      if (worst >= 1.0) break;
      q += u * (2.0 - worst);
    }
    return q;
  }
  if (mp.margin >= -1e-9) return mp.point;
  return std::nullopt;
}

inline bool core_region_nonempty(const LinkSpec& link) {
  return core_region_witness(link).has_value();
}

// Empty iff all LinkSpec invariants hold; each violation names the failed
// invariant and the offending value.
inline std::vector<std::string> validate_link(const LinkSpec& link) {
  std::vector<std::string> violations;
  std::ostringstream os;
  const auto push = [&](std::ostringstream& s) {
    violations.push_back(s.str());
    s.str("");
    s.clear();
  };

  if (!(link.d_min >= 0.0 && link.d_min < link.d_hat)) {
    os << "separation-ordering violated: d_min=" << link.d_min
       << ", d_hat=" << link.d_hat << " (need 0 <= d_min < d_hat)";
    push(os);
  }
  if (!(link.d_b_min >= 0.0 && link.d_b_min < link.d_b_hat)) {
    os << "boundary-ordering violated: d_b_min=" << link.d_b_min
       << ", d_b_hat=" << link.d_b_hat << " (need 0 <= d_b_min < d_b_hat)";
    push(os);
  }
  const double speed = link.v_hat.norm();
  if (!(link.v_lower > 0.0 && link.v_lower < speed && speed < link.v_upper)) {
    os << "speed-envelope violated: v_lower=" << link.v_lower
       << ", |v_hat|=" << speed << ", v_upper=" << link.v_upper
       << " (need 0 < v_lower < |v_hat| < v_upper)";
    push(os);
  }
  const double tol = 1e-9 * std::max(1.0, speed);
  for (std::size_t n = 0; n < link.walls.size(); ++n) {
    const double dot = link.v_hat.dot(link.walls[n].normal);
    if (std::abs(dot) > tol) {
      os << "velocity-not-parallel: wall " << n << " has <v_hat,n>=" << dot;
      push(os);
    }
  }
  if (!core_region_nonempty(link)) {
    os << "core-region-empty: no point has clearance >= d_b_hat="
       << link.d_b_hat << " to every wall";
    push(os);
  }
  return violations;
}

// True iff q has clearance >= d_b_hat to every wall of both links, i.e. q is
// in the transition region where a vehicle may switch protocols.
inline bool in_transition_region(const Eigen::Vector3d& q, const LinkSpec& link1,
                                 const LinkSpec& link2) {
  for (const auto& w : link1.walls) {
    if (wall_distance(q, w) < link1.d_b_hat) return false;
  }
  for (const auto& w : link2.walls) {
    if (wall_distance(q, w) < link2.d_b_hat) return false;
  }
  return true;
}

}  // namespace utmlink

#endif  // UTMLINK_GEOMETRY_HPP_
