#ifndef UTMLINK_SIMULATION_HPP_
#define UTMLINK_SIMULATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "utmlink/admission.hpp"
#include "utmlink/control.hpp"
#include "utmlink/dynamics.hpp"
#include "utmlink/energy.hpp"
#include "utmlink/geometry.hpp"
#include "utmlink/potentials.hpp"
#include "utmlink/scenario.hpp"

namespace utmlink {

// Fixed 9-significant-digit formatting for byte-stable CSV goldens.
inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct MonitorSample {
  double t = 0.0;
  double min_sep = std::numeric_limits<double>::infinity();
  double min_speed = std::numeric_limits<double>::infinity();
  double max_speed = -std::numeric_limits<double>::infinity();
  double min_wall_dist = std::numeric_limits<double>::infinity();
  EnergyBreakdown energy;
  double dissipation = 0.0;  // sum_i K |qdot_i - v_hat|^2
};

struct TrajectorySample {
  double t = 0.0;
  int id = 0;
  FlatState state;
  Eigen::Vector3d u{0.0, 0.0, 0.0};
};

struct AdmissionRecord {
  double t = 0.0;
  int step = 0;
  int count = 0;
  AdmissionVerdict verdict;
  bool injected = false;
};

struct ConstraintVerdicts {
  bool c1 = true, c2 = true, c3 = true;
  bool o1 = true, o2 = true, o3 = true;
  double c1_first_violation = std::numeric_limits<double>::quiet_NaN();
  double c2_first_violation = std::numeric_limits<double>::quiet_NaN();
  double c3_first_violation = std::numeric_limits<double>::quiet_NaN();
};

struct SimReport {
  std::vector<MonitorSample> monitors;   // one per step, including t=0 and t=end
  std::vector<RateSample> rate_samples;  // damped-gradient-flow view of the run
  std::vector<int> entry_steps;          // steps at which vehicles were injected
  std::vector<AdmissionRecord> admissions;
  std::vector<TrajectorySample> snapshots;
  std::vector<FlatState> final_states;
  std::vector<int> final_ids;
  std::vector<double> spawn_time;  // indexed by vehicle id
  SafetyThresholds safety;
  AdmissionBudget budget;
  double lambda_hat = 0.0;
  double peak_input = 0.0;
  double h_max = 0.0;
  ConstraintVerdicts verdicts;
};

struct SimOptions {
  bool suppress_entries = false;
};

namespace detail {

inline void plane_basis(const Eigen::Vector3d& n, Eigen::Vector3d& e1,
                        Eigen::Vector3d& e2) {
  const Eigen::Vector3d ref =
      std::abs(n.z()) < 0.9 ? Eigen::Vector3d(0, 0, 1) : Eigen::Vector3d(0, 1, 0);
  e1 = n.cross(ref).normalized();
  e2 = n.cross(e1).normalized();
}

inline double min_wall_clearance(const Eigen::Vector3d& q, const LinkSpec& link) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& w : link.walls) m = std::min(m, wall_distance(q, w));
  return m;
}

// Deterministic lattice offsets on a plane, ordered by ring distance.
inline std::vector<Eigen::Vector2i> lattice_order(int needed) {
  std::vector<Eigen::Vector2i> cells;
  for (int radius = 0; radius <= 12 && static_cast<int>(cells.size()) < 4 * needed + 8;
       ++radius) {
    for (int i = -radius; i <= radius; ++i) {
      for (int j = -radius; j <= radius; ++j) {
        if (std::max(std::abs(i), std::abs(j)) == radius) cells.emplace_back(i, j);
      }
    }
  }
  return cells;
}

}  // namespace detail

// Seeded initial fleet: explicit vehicles plus an optional lattice of
// vehicles around the core witness point. Lattice velocity jitter is scaled
// down until H(0) <= 0.9 c_star so the release is certifiably safe.
inline std::vector<FlatState> build_initial_fleet(const ScenarioConfig& cfg,
                                                  std::mt19937& rng) {
  std::vector<FlatState> fleet = cfg.fleet.vehicles;
  if (cfg.fleet.lattice_count <= 0) return fleet;

  const auto witness = core_region_witness(cfg.link);
  if (!witness) throw ConfigError("link core region is empty; cannot place fleet");
  const Eigen::Vector3d f = cfg.link.v_hat.normalized();
  Eigen::Vector3d e1, e2;
  detail::plane_basis(f, e1, e2);

  std::uniform_real_distribution<double> jx(-cfg.fleet.speed_jitter_x,
                                            cfg.fleet.speed_jitter_x);
  std::uniform_real_distribution<double> jyz(-cfg.fleet.speed_jitter_yz,
                                             cfg.fleet.speed_jitter_yz);
  const double spacing = cfg.fleet.lattice_spacing;
  std::vector<FlatState> lattice;
  for (int k = 0; k < cfg.fleet.lattice_count; ++k) {
    const int row = k / 2;
    const double col = (k % 2 == 0) ? -0.5 : 0.5;
    FlatState s;
    s.q = *witness + f * (spacing * row) + e1 * (col * spacing);
    s.qdot = cfg.link.v_hat + f * jx(rng) + e1 * jyz(rng) + e2 * jyz(rng);
    lattice.push_back(s);
  }

  // Scale the velocity error until the release level fits the safety budget.
  std::vector<FlatState> all = fleet;
  all.insert(all.end(), lattice.begin(), lattice.end());
  ProtocolParams params{cfg.damping, cfg.potentials, cfg.link};
  const double budget = 0.9 * thresholds(cfg.link, cfg.potentials).c_star;
  EnergyBreakdown e = energy(all, params);
  if (e.v_p + e.v_b >= budget) {
    throw ConfigError("generated fleet carries too much potential energy");
  }
  if (e.h > budget && e.v_k > 0.0) {
    const double s = std::sqrt((budget - e.v_p - e.v_b) / e.v_k);
    for (auto& v : lattice) {
      v.qdot = cfg.link.v_hat + s * (v.qdot - cfg.link.v_hat);
    }
  }
  fleet.insert(fleet.end(), lattice.begin(), lattice.end());
  return fleet;
}

// Entrant group for one scheduled entry event: positions on the entrance
// gate plane with the configured lattice spacing and clearance >= d_b_hat,
// velocities jittered around v_hat.
inline std::vector<FlatState> spawn_entrants(const ScenarioConfig& cfg,
                                             const EntryScheduleSpec& sched,
                                             std::mt19937& rng) {
  const auto witness = core_region_witness(cfg.link);
  if (!witness) throw ConfigError("link core region is empty; cannot spawn entrants");

  // Entrance gate: the gate the desired velocity points away from.
  const HalfSpace* entrance = nullptr;
  for (const auto& g : cfg.link.gates) {
    if (g.normal.dot(cfg.link.v_hat) < 0.0) entrance = &g;
  }
  Eigen::Vector3d anchor = *witness;
  Eigen::Vector3d n = cfg.link.v_hat.normalized();
  if (entrance != nullptr) {
    n = entrance->normal;
    anchor = *witness - (n.dot(*witness) - entrance->offset) * n;
  }
  Eigen::Vector3d e1, e2;
  detail::plane_basis(n, e1, e2);

  std::uniform_real_distribution<double> jitter(-sched.speed_jitter,
                                                sched.speed_jitter);
  std::vector<FlatState> entrants;
  for (const auto& cell : detail::lattice_order(sched.group_size)) {
    if (static_cast<int>(entrants.size()) >= sched.group_size) break;
    const Eigen::Vector3d p =
        anchor + e1 * (cell.x() * sched.spacing) + e2 * (cell.y() * sched.spacing);
    if (detail::min_wall_clearance(p, cfg.link) < cfg.link.d_b_hat) continue;
    FlatState s;
    s.q = p;
    s.qdot = cfg.link.v_hat +
             Eigen::Vector3d(jitter(rng), jitter(rng), jitter(rng));
    entrants.push_back(s);
  }
  if (static_cast<int>(entrants.size()) < sched.group_size) {
    throw ConfigError("cannot place entry group inside the link core");
  }
  return entrants;
}

inline ConstraintVerdicts monitor_constraints(const SimReport& report,
                                              const ScenarioConfig& cfg) {
  ConstraintVerdicts v;
  const double tol = 1e-9;
  for (const auto& m : report.monitors) {
    if (std::isfinite(m.min_speed) &&
        (m.min_speed < cfg.link.v_lower - tol || m.max_speed > cfg.link.v_upper + tol)) {
      if (v.c1) v.c1_first_violation = m.t;
      v.c1 = false;
    }
    if (std::isfinite(m.min_sep) && m.min_sep < cfg.link.d_min - tol) {
      if (v.c2) v.c2_first_violation = m.t;
      v.c2 = false;
    }
    if (std::isfinite(m.min_wall_dist) && m.min_wall_dist < cfg.link.d_b_min - tol) {
      if (v.c3) v.c3_first_violation = m.t;
      v.c3 = false;
    }
  }
  if (!report.monitors.empty()) {
    const MonitorSample& last = report.monitors.back();
    v.o2 = last.energy.v_p <= 1e-3;
    v.o3 = !std::isfinite(last.min_wall_dist) ||
           last.min_wall_dist >= cfg.link.d_b_hat - 0.1;
    for (std::size_t i = 0; i < report.final_states.size(); ++i) {
      const int id = report.final_ids[i];
      if (last.t - report.spawn_time[id] < 50.0) continue;
      if ((report.final_states[i].qdot - cfg.link.v_hat).norm() > 0.1) v.o1 = false;
    }
  }
  return v;
}

inline SimReport run_scenario(const ScenarioConfig& cfg, const SimOptions& opt = {});

namespace detail {

inline double calibrate_lambda(const ScenarioConfig& cfg) {
  ScenarioConfig calib = cfg;
  calib.lambda_hat = 0.0;
  calib.schedule.reset();
  const double horizon =
      cfg.schedule ? std::max(3.0 * cfg.schedule->period, 60.0) : 60.0;
  calib.duration = std::min(cfg.duration, horizon);
  SimOptions opt;
  opt.suppress_entries = true;
  const SimReport rep = run_scenario(calib, opt);
  std::vector<EnergyBreakdown> energies;
  energies.reserve(rep.monitors.size());
  for (const auto& m : rep.monitors) energies.push_back(m.energy);
  // Empirical factor, inflated for headroom against other trajectories.
  return 1.2 * estimate_lambda(energies, 0.0).lambda;
}

}  // namespace detail

// Main loop: control -> monitor -> admit -> integrate, deterministic for a
// fixed config and seed.
inline SimReport run_scenario(const ScenarioConfig& cfg, const SimOptions& opt) {
  {
    const auto violations = validate_link(cfg.link);
    if (!violations.empty()) {
      std::string msg = "invalid link:";
      for (const auto& s : violations) msg += "\n  " + s;
      throw ConfigError(msg);
    }
  }
  SimReport report;
  report.safety = thresholds(cfg.link, cfg.potentials);

  std::mt19937 rng(cfg.seed);
  std::vector<FlatState> states = build_initial_fleet(cfg, rng);
  std::vector<int> ids(states.size());
  std::iota(ids.begin(), ids.end(), 0);
  report.spawn_time.assign(states.size(), 0.0);
  int next_id = static_cast<int>(states.size());

  const bool entries_active = cfg.schedule.has_value() && !opt.suppress_entries;
  if (cfg.lambda_hat) {
    report.lambda_hat = *cfg.lambda_hat;
  } else if (entries_active) {
    report.lambda_hat = detail::calibrate_lambda(cfg);
  }
  if (cfg.schedule) {
    const EntryScheduleSpec& s = *cfg.schedule;
    const double kappa_plan = 1.5 * s.speed_jitter * s.speed_jitter;
    const double gamma_plan =
        0.5 * cfg.potentials.psi(
                  sigma_norm_scalar(s.spacing, cfg.potentials.sigma.epsilon));
    report.budget = make_admission_budget(report.safety.c_star, report.lambda_hat,
                                          s.period, kappa_plan, gamma_plan);
  }

  const ProtocolParams params{cfg.damping, cfg.potentials, cfg.link};
  const int n_steps = static_cast<int>(std::llround(cfg.duration / cfg.dt));
  double next_entry =
      cfg.schedule ? cfg.schedule->first_entry : std::numeric_limits<double>::infinity();
  std::optional<double> last_entry;

  for (int k = 0; k <= n_steps; ++k) {
    const double t = k * cfg.dt;

    while (entries_active && next_entry <= t + 1e-9 &&
           next_entry <= cfg.duration + 1e-9) {
      const EntryScheduleSpec& sched = *cfg.schedule;
      EntryEvent event;
      event.t_k = next_entry;
      event.t_epsilon = sched.t_epsilon;
      event.entrants = spawn_entrants(cfg, sched, rng);
      AdmissionRecord rec;
      rec.t = t;
      rec.step = k;
      rec.count = static_cast<int>(event.entrants.size());
      rec.verdict = admit(next_entry, last_entry, event, report.budget, states,
                          cfg.link, cfg.potentials);
      rec.injected = rec.verdict.admitted || cfg.mode == AdmissionMode::Observe;
      if (rec.injected) {
        for (const auto& s : event.entrants) {
          states.push_back(s);
          ids.push_back(next_id++);
          report.spawn_time.push_back(t);
        }
        report.entry_steps.push_back(k);
        last_entry = next_entry;
      }
      report.admissions.push_back(rec);
      next_entry += sched.period;
    }

    const std::vector<FlatInput> inputs = control_all(states, params);

    MonitorSample mon;
    mon.t = t;
    mon.energy = energy(states, params, t);
    report.h_max = std::max(report.h_max, mon.energy.h);
    RateSample rate;
    rate.t = t;
    rate.psi = mon.energy.v_p + mon.energy.v_b;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const Eigen::Vector3d dv = states[i].qdot - cfg.link.v_hat;
      mon.dissipation += cfg.damping * dv.squaredNorm();
      const double speed = states[i].qdot.norm();
      mon.min_speed = std::min(mon.min_speed, speed);
      mon.max_speed = std::max(mon.max_speed, speed);
      mon.min_wall_dist =
          std::min(mon.min_wall_dist, detail::min_wall_clearance(states[i].q, cfg.link));
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        mon.min_sep = std::min(mon.min_sep, (states[i].q - states[j].q).norm());
      }
      report.peak_input = std::max(report.peak_input, inputs[i].u.norm());
      // u = -grad Psi - K dv, so the flow's gradient is recoverable exactly.
      const Eigen::Vector3d grad = -(inputs[i].u + cfg.damping * dv);
      rate.grad_sq += grad.squaredNorm();
      rate.vel_sq += dv.squaredNorm();
      rate.grad_dot_vel += grad.dot(dv);
    }
    report.monitors.push_back(mon);
    report.rate_samples.push_back(rate);

    const double snap_phase = std::fmod(t + 1e-9, cfg.snapshot_interval);
    if (snap_phase < 2e-9 || snap_phase < cfg.dt * 0.5 || k == n_steps) {
      for (std::size_t i = 0; i < states.size(); ++i) {
        report.snapshots.push_back({t, ids[i], states[i], inputs[i].u});
      }
    }

    if (k < n_steps) {
      states = step(states, inputs, cfg.dt);
      if (cfg.exit_x) {
        for (std::size_t i = states.size(); i-- > 0;) {
          if (states[i].q.x() > *cfg.exit_x) {
            states.erase(states.begin() + i);
            ids.erase(ids.begin() + i);
          }
        }
      }
    }
  }

  report.final_states = states;
  report.final_ids = ids;
  report.verdicts = monitor_constraints(report, cfg);
  return report;
}

inline void write_monitors_csv(const std::string& path, const SimReport& report) {
  std::ofstream out(path);
  out << "t,min_sep,min_speed,max_speed,min_wall_dist,V_p,V_b,V_k,H\n";
  for (const auto& m : report.monitors) {
    out << fmt9(m.t) << ',' << fmt9(m.min_sep) << ',' << fmt9(m.min_speed) << ','
        << fmt9(m.max_speed) << ',' << fmt9(m.min_wall_dist) << ','
        << fmt9(m.energy.v_p) << ',' << fmt9(m.energy.v_b) << ','
        << fmt9(m.energy.v_k) << ',' << fmt9(m.energy.h) << '\n';
  }
}

inline void write_trajectory_csv(const std::string& path, const SimReport& report) {
  std::ofstream out(path);
  out << "t,vehicle_id,x,y,z,vx,vy,vz,ux,uy,uz\n";
  for (const auto& s : report.snapshots) {
    out << fmt9(s.t) << ',' << s.id << ',' << fmt9(s.state.q.x()) << ','
        << fmt9(s.state.q.y()) << ',' << fmt9(s.state.q.z()) << ','
        << fmt9(s.state.qdot.x()) << ',' << fmt9(s.state.qdot.y()) << ','
        << fmt9(s.state.qdot.z()) << ',' << fmt9(s.u.x()) << ',' << fmt9(s.u.y())
        << ',' << fmt9(s.u.z()) << '\n';
  }
}

inline void write_report_txt(const std::string& path, const SimReport& report) {
  std::ofstream out(path);
  const auto pf = [](bool ok) { return ok ? "pass" : "FAIL"; };
  out << "thresholds: c1*=" << fmt9(report.safety.c1)
      << " c2*=" << fmt9(report.safety.c2) << " c3*=" << fmt9(report.safety.c3)
      << " c*=" << fmt9(report.safety.c_star) << '\n';
  out << "lambda_hat: " << fmt9(report.lambda_hat) << '\n';
  out << "h_max: " << fmt9(report.h_max) << '\n';
  out << "peak_input: " << fmt9(report.peak_input) << '\n';
  if (report.budget.period > 0.0) {
    out << "admission budget: kappa=" << fmt9(report.budget.kappa)
        << " gamma=" << fmt9(report.budget.gamma) << " m_max=";
    if (report.budget.m_max.unbounded) {
      out << "unbounded";
    } else {
      out << report.budget.m_max.count;
    }
    out << '\n';
  }
  const ConstraintVerdicts& v = report.verdicts;
  out << "C1 (speed envelope): " << pf(v.c1);
  if (!v.c1) out << " first violation t=" << fmt9(v.c1_first_violation);
  out << '\n';
  out << "C2 (min separation): " << pf(v.c2);
  if (!v.c2) out << " first violation t=" << fmt9(v.c2_first_violation);
  out << '\n';
  out << "C3 (boundary clearance): " << pf(v.c3);
  if (!v.c3) out << " first violation t=" << fmt9(v.c3_first_violation);
  out << '\n';
  out << "O1 (velocity convergence): " << pf(v.o1) << '\n';
  out << "O2 (separation convergence): " << pf(v.o2) << '\n';
  out << "O3 (boundary convergence): " << pf(v.o3) << '\n';
  out << "admission log:\n";
  for (const auto& a : report.admissions) {
    out << "  t=" << fmt9(a.t) << " count=" << a.count << ' '
        << (a.verdict.admitted ? "admit" : "reject") << ' '
        << reject_reason_name(a.verdict.reason);
    if (!a.verdict.detail.empty()) out << " (" << a.verdict.detail << ')';
    if (!a.verdict.admitted && a.injected) out << " [injected: observe mode]";
    out << '\n';
  }
}

}  // namespace utmlink

#endif  // UTMLINK_SIMULATION_HPP_
