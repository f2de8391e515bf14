#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "utmlink/geometry.hpp"

using namespace utmlink;
using Catch::Approx;

namespace {

LinkSpec table1_link() {
  LinkSpec link;
  link.walls = {
      HalfSpace({0, 1, 0}, 40), HalfSpace({0, -1, 0}, 40),
      HalfSpace({0, 0, 1}, 40), HalfSpace({0, 0, -1}, 40)};
  link.gates = {HalfSpace({-1, 0, 0}, 0), HalfSpace({1, 0, 0}, 1000)};
  link.v_hat = {10, 0, 0};
  link.d_hat = 10;
  link.d_min = 1.5;
  link.d_b_hat = 20;
  link.d_b_min = 0;
  link.v_upper = 25;
  link.v_lower = 5;
  return link;
}

}  // namespace

TEST_CASE("half-space normalizes its normal") {
  HalfSpace h({0, 2, 0}, 80);
  CHECK(h.normal.norm() == Approx(1.0).margin(1e-12));
  CHECK(h.offset == Approx(40.0));
  CHECK_THROWS_AS(HalfSpace({0, 0, 0}, 1), std::invalid_argument);
}

TEST_CASE("wall distance is positive inside, zero on the plane, negative outside") {
  HalfSpace wall({0, 1, 0}, 40);
  CHECK(wall_distance({0, 0, 0}, wall) == Approx(40.0));
  CHECK(wall_distance({0, 40, 0}, wall) == Approx(0.0).margin(1e-15));
  CHECK(wall_distance({0, 45, 0}, wall) == Approx(-5.0));
}

TEST_CASE("wall distance is affine in the query point") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector3d n(u(rng), u(rng), u(rng));
    if (n.norm() < 1e-6) continue;
    HalfSpace wall(n, u(rng));
    const Eigen::Vector3d q(u(rng), u(rng), u(rng));
    const Eigen::Vector3d dir(u(rng), u(rng), u(rng));
    const double t = u(rng) / 10.0;
    const double lhs = wall_distance(q + t * dir, wall);
    const double rhs = wall_distance(q, wall) - t * wall.normal.dot(dir);
    CHECK(lhs == Approx(rhs).margin(1e-9));
  }
}

TEST_CASE("core region of the reference box is non-empty") {
  const LinkSpec link = table1_link();
  const auto witness = core_region_witness(link);
  REQUIRE(witness.has_value());
  for (const auto& w : link.walls) {
    CHECK(wall_distance(*witness, w) >= link.d_b_hat - 1e-9);
  }
}

TEST_CASE("core region empties when the clearance exceeds the half-width") {
  LinkSpec link = table1_link();
  link.d_b_hat = 41;
  CHECK_FALSE(core_region_nonempty(link));
}

TEST_CASE("two opposing walls at exactly twice the clearance admit the mid-plane") {
  LinkSpec link = table1_link();
  link.walls = {HalfSpace({0, 1, 0}, 20), HalfSpace({0, -1, 0}, 20)};
  link.d_b_hat = 20;
  const auto witness = core_region_witness(link);
  REQUIRE(witness.has_value());
  for (const auto& w : link.walls) {
    CHECK(wall_distance(*witness, w) >= link.d_b_hat - 1e-9);
  }
}

TEST_CASE("unbounded wall sets still yield a witness") {
  LinkSpec link = table1_link();
  link.walls = {HalfSpace({0, 1, 0}, 40)};
  link.d_b_hat = 100;
  const auto witness = core_region_witness(link);
  REQUIRE(witness.has_value());
  CHECK(wall_distance(*witness, link.walls[0]) >= 100.0 - 1e-9);
}

TEST_CASE("validate_link accepts the reference link") {
  CHECK(validate_link(table1_link()).empty());
}

TEST_CASE("validate_link flags a wall not parallel to the desired velocity") {
  LinkSpec link = table1_link();
  link.walls.push_back(HalfSpace({1, 0, 0}, 500));
  const auto violations = validate_link(link);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("velocity-not-parallel") != std::string::npos);
}

TEST_CASE("validate_link flags a broken separation ordering") {
  LinkSpec link = table1_link();
  link.d_min = 10;
  link.d_hat = 10;
  const auto violations = validate_link(link);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("separation-ordering") != std::string::npos);
}

TEST_CASE("validate_link is idempotent") {
  LinkSpec link = table1_link();
  link.d_min = 10;
  link.d_hat = 10;
  CHECK(validate_link(link) == validate_link(link));
}

TEST_CASE("transition region membership") {
  const LinkSpec link = table1_link();
  CHECK(in_transition_region({0, 0, 0}, link, link));
  CHECK_FALSE(in_transition_region({0, 25, 0}, link, link));

  LinkSpec shifted = link;
  shifted.walls = {HalfSpace({0, 1, 0}, 140), HalfSpace({0, -1, 0}, -60),
                   HalfSpace({0, 0, 1}, 40), HalfSpace({0, 0, -1}, 40)};
  // Cores are disjoint: any point satisfying one box's clearance fails the other.
  for (double y = -120; y <= 160; y += 5) {
    CHECK_FALSE(in_transition_region({0, y, 0}, link, shifted));
  }
}
