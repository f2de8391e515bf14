#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "utmlink/admission.hpp"

using namespace utmlink;
using Catch::Approx;

namespace {

LinkSpec table1_link() {
  LinkSpec link;
  link.walls = {HalfSpace({0, 1, 0}, 40), HalfSpace({0, -1, 0}, 40),
                HalfSpace({0, 0, 1}, 40), HalfSpace({0, 0, -1}, 40)};
  link.v_hat = {10, 0, 0};
  link.d_hat = 10;
  link.d_min = 1.5;
  link.d_b_hat = 20;
  link.d_b_min = 0;
  link.v_upper = 25;
  link.v_lower = 5;
  return link;
}

PotentialConfig table1_potentials() {
  PotentialConfig pot;
  pot.d_hat = 10;
  pot.d_b_hat = 20;
  pot.sigma.epsilon = 0.9;
  return pot;
}

}  // namespace

TEST_CASE("entry energies for reference groups") {
  const LinkSpec link = table1_link();
  const PotentialConfig pot = table1_potentials();
  {
    std::vector<FlatState> entrants(1);
    entrants[0].q = {0, 0, 0};
    entrants[0].qdot = link.v_hat;
    const KappaGamma kg = entry_kappa_gamma(entrants, {}, link, pot);
    CHECK(kg.kappa == 0.0);
    CHECK(kg.gamma == 0.0);
  }
  {
    std::vector<FlatState> entrants(1);
    entrants[0].q = {0, 0, 0};
    entrants[0].qdot = link.v_hat + Eigen::Vector3d(3, 0, 0);
    const KappaGamma kg = entry_kappa_gamma(entrants, {}, link, pot);
    CHECK(kg.kappa == Approx(4.5));
    CHECK(kg.gamma == 0.0);
  }
  {
    std::vector<FlatState> entrants(2);
    entrants[0].q = {0, -4, 0};
    entrants[1].q = {0, 4, 0};
    entrants[0].qdot = entrants[1].qdot = link.v_hat;
    const KappaGamma kg = entry_kappa_gamma(entrants, {}, link, pot);
    CHECK(kg.kappa == 0.0);
    CHECK(kg.gamma == Approx(0.9589).margin(1e-4));
  }
}

TEST_CASE("entry energies reject entrants inside a resident's support") {
  const LinkSpec link = table1_link();
  const PotentialConfig pot = table1_potentials();
  std::vector<FlatState> entrants(1);
  entrants[0].q = {0, 0, 0};
  entrants[0].qdot = link.v_hat;
  std::vector<FlatState> residents(1);
  residents[0].q = {5, 0, 0};
  CHECK_THROWS_AS(entry_kappa_gamma(entrants, residents, link, pot), ResidentsTooClose);
  residents[0].q = {30, 0, 0};
  CHECK_NOTHROW(entry_kappa_gamma(entrants, residents, link, pot));
  CHECK_THROWS_AS(entry_kappa_gamma({}, residents, link, pot), std::invalid_argument);
}

TEST_CASE("max entry count reference cases") {
  {
    const EntryCount c = max_entry_count(1.0, 0.5, 8.0, 4.0, 20.0);
    CHECK_FALSE(c.unbounded);
    CHECK(c.count == 3);
  }
  {
    const EntryCount c = max_entry_count(0.0, 0.0, 8.0, 4.0, 20.0);
    CHECK(c.unbounded);
  }
  {
    const EntryCount c = max_entry_count(1.0, 0.5, 8.0, 25.0, 20.0);
    CHECK_FALSE(c.unbounded);
    CHECK(c.count == 0);
  }
}

TEST_CASE("max entry count matches an exhaustive integer scan") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int it = 0; it < 500; ++it) {
    const double kappa = 0.05 + 3.0 * u01(rng);
    const double gamma = 2.0 * u01(rng);
    const double c_star = 0.5 + 15.0 * u01(rng);
    const double lambda = 10.0 * u01(rng);
    const double period = 1.0 + 30.0 * u01(rng);
    const EntryCount c = max_entry_count(kappa, gamma, c_star, lambda, period);
    REQUIRE_FALSE(c.unbounded);
    const double rhs = c_star * (1.0 - lambda / period);
    long long best = 0;
    for (long long m = 1; m <= 2000; ++m) {
      if (m * kappa + m * (m - 1.0) * gamma <= rhs) best = m;
    }
    CHECK(c.count == best);
  }
}

TEST_CASE("max entry count monotonicity") {
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int it = 0; it < 1000; ++it) {
    const double kappa = 0.05 + 3.0 * u01(rng);
    const double gamma = 0.01 + 2.0 * u01(rng);
    const double c_star = 0.5 + 15.0 * u01(rng);
    const double lambda = 10.0 * u01(rng);
    const double period = 1.0 + 30.0 * u01(rng);
    const long long base = max_entry_count(kappa, gamma, c_star, lambda, period).count;
    CHECK(max_entry_count(kappa * 1.3, gamma, c_star, lambda, period).count <= base);
    CHECK(max_entry_count(kappa, gamma * 1.3, c_star, lambda, period).count <= base);
    CHECK(max_entry_count(kappa, gamma, c_star, lambda * 1.3, period).count <= base);
    CHECK(max_entry_count(kappa, gamma, c_star * 1.3, lambda, period).count >= base);
    CHECK(max_entry_count(kappa, gamma, c_star, lambda, period * 1.3).count >= base);
  }
}

TEST_CASE("minimum entry period reference cases and monotonicity") {
  CHECK(min_entry_period(10.0, 10.0, 5.0) == Approx(20.0));
  CHECK(min_entry_period(7.5, 10.0, 0.0) == Approx(7.5));
  CHECK_THROWS_AS(min_entry_period(10.0, 10.0, 10.0), InvalidBudget);
  CHECK_THROWS_AS(min_entry_period(10.0, 0.0, 0.0), InvalidBudget);

  std::mt19937 rng(47);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int it = 0; it < 1000; ++it) {
    const double lambda = 0.1 + 10.0 * u01(rng);
    const double h0 = 1.0 + 10.0 * u01(rng);
    const double h_eps = 0.9 * h0 * u01(rng);
    const double base = min_entry_period(lambda, h0, h_eps);
    CHECK(min_entry_period(lambda * 1.2, h0, h_eps) >= base);
    CHECK(min_entry_period(lambda, h0, std::min(h_eps * 1.2, 0.99 * h0)) >= base);
  }
}

TEST_CASE("transition budget reference cases") {
  const LinkSpec link = table1_link();
  const PotentialConfig pot = table1_potentials();
  {
    const TransitionBudget b = transition_kappa_gamma(link, pot, link, pot);
    CHECK(b.kappa == 0.0);
    CHECK(b.gamma == 0.0);
  }
  {
    LinkSpec slow = link;
    slow.v_hat = {5, 0, 0};
    const TransitionBudget b = transition_kappa_gamma(link, pot, slow, pot);
    CHECK(b.kappa == Approx(12.5));
  }
  {
    LinkSpec upstream = link;
    upstream.d_hat = 8;
    const TransitionBudget b = transition_kappa_gamma(upstream, pot, link, pot);
    CHECK(b.gamma == Approx(0.6625).margin(1e-4));
    // The sigma-norm variant evaluates strictly inside the support.
    CHECK(b.gamma_sigma > b.gamma);
  }
}

TEST_CASE("transition budget rejects disconnected links") {
  const LinkSpec link = table1_link();
  const PotentialConfig pot = table1_potentials();
  LinkSpec far = link;
  far.walls = {HalfSpace({0, 1, 0}, 140), HalfSpace({0, -1, 0}, -60),
               HalfSpace({0, 0, 1}, 40), HalfSpace({0, 0, -1}, 40)};
  CHECK_THROWS_AS(transition_kappa_gamma(link, pot, far, pot), DisconnectedLinks);
}

TEST_CASE("fast-to-slow transitions choke the entry count") {
  const LinkSpec fast = table1_link();
  LinkSpec slow = fast;
  slow.v_hat = {2, 0, 0};
  slow.v_upper = 4;
  slow.v_lower = 1;
  const PotentialConfig pot = table1_potentials();
  const TransitionBudget tb = transition_kappa_gamma(fast, pot, slow, pot);
  const SafetyThresholds th = thresholds(slow, pot);
  // kappa = 32 >> c_star: at most one vehicle (here zero) can cross per period.
  CHECK(tb.kappa >= th.c_star);
  const EntryCount c = max_entry_count(tb.kappa, tb.gamma, th.c_star, 2.0, 20.0);
  CHECK(c.count <= 1);
}

TEST_CASE("admission gate clause order") {
  const LinkSpec link = table1_link();
  const PotentialConfig pot = table1_potentials();
  const AdmissionBudget budget = make_admission_budget(8.0, 4.0, 20.0, 1.0, 0.5);
  REQUIRE(budget.m_max.count == 3);

  EntryEvent event;
  event.t_k = 40.0;
  event.entrants.resize(2);
  event.entrants[0].q = {0, -6, 0};
  event.entrants[1].q = {0, 6, 0};
  event.entrants[0].qdot = event.entrants[1].qdot = link.v_hat;

  // Too soon after the previous entry.
  AdmissionVerdict v = admit(25.0, 20.0, event, budget, {}, link, pot);
  CHECK_FALSE(v.admitted);
  CHECK(v.reason == RejectReason::Period);

  // Group larger than the planned maximum.
  EntryEvent big = event;
  big.entrants.resize(10);
  for (std::size_t i = 0; i < big.entrants.size(); ++i) {
    big.entrants[i].q = {0, -18.0 + 4.0 * static_cast<double>(i), 0};
    big.entrants[i].qdot = link.v_hat;
  }
  v = admit(40.0, 20.0, big, budget, {}, link, pot);
  CHECK_FALSE(v.admitted);
  CHECK(v.reason == RejectReason::Count);

  // Resident inside the entrants' potential support.
  std::vector<FlatState> residents(1);
  residents[0].q = {0, -8, 0};
  residents[0].qdot = link.v_hat;
  v = admit(40.0, 20.0, event, budget, residents, link, pot);
  CHECK_FALSE(v.admitted);
  CHECK(v.reason == RejectReason::ResidentsTooClose);

  // Hot entrants exceed the energy inequality.
  EntryEvent hot = event;
  hot.entrants[0].qdot = link.v_hat + Eigen::Vector3d(4, 0, 0);
  v = admit(40.0, 20.0, hot, budget, {}, link, pot);
  CHECK_FALSE(v.admitted);
  CHECK(v.reason == RejectReason::Energy);

  // Clean entry after a full period.
  v = admit(40.0, 20.0, event, budget, {}, link, pot);
  CHECK(v.admitted);
  CHECK(v.reason == RejectReason::None);

  // First-ever entry has no period constraint.
  v = admit(0.0, std::nullopt, event, budget, {}, link, pot);
  CHECK(v.admitted);
}
