// Command line front end for the link simulation library: scenario runs,
// validation, safety thresholds, convergence-factor calibration, admission
// planning and convergence-rate verification.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "utmlink/admission.hpp"
#include "utmlink/energy.hpp"
#include "utmlink/scenario.hpp"
#include "utmlink/simulation.hpp"

namespace {

using namespace utmlink;

int cmd_check(const std::string& path) {
  const ScenarioConfig cfg = parse_scenario_file(path);
  const auto violations = validate_link(cfg.link);
  if (violations.empty()) {
    std::cout << "scenario ok\n";
    return 0;
  }
  for (const auto& v : violations) std::cout << "violation: " << v << '\n';
  return 2;
}

int cmd_run(const std::string& path, const std::string& outdir) {
  const ScenarioConfig cfg = parse_scenario_file(path);
  const SimReport report = run_scenario(cfg);
  write_trajectory_csv(outdir + "/trajectory.csv", report);
  write_monitors_csv(outdir + "/monitors.csv", report);
  write_report_txt(outdir + "/report.txt", report);
  const ConstraintVerdicts& v = report.verdicts;
  std::cout << "C1=" << (v.c1 ? "pass" : "fail") << " C2=" << (v.c2 ? "pass" : "fail")
            << " C3=" << (v.c3 ? "pass" : "fail") << "  (outputs in " << outdir
            << ")\n";
  return (v.c1 && v.c2 && v.c3) ? 0 : 1;
}

int cmd_thresholds(const std::string& path) {
  const ScenarioConfig cfg = parse_scenario_file(path);
  const SafetyThresholds th = thresholds(cfg.link, cfg.potentials);
  std::cout << "c1_star = " << fmt9(th.c1) << '\n';
  std::cout << "c2_star = " << fmt9(th.c2) << '\n';
  std::cout << "c3_star = " << fmt9(th.c3) << '\n';
  std::cout << "c_star  = " << fmt9(th.c_star) << '\n';
  if (std::abs(th.c1 - 8.485461) < 1e-4) {
    std::cout << "note: an earlier published computation for these parameters "
                 "reported c1_star = 8.306853 (= log cosh 9). The value above "
                 "follows the sigma-norm definition; see README for the "
                 "documented discrepancy.\n";
  }
  return 0;
}

int cmd_lambda(const std::string& path) {
  ScenarioConfig cfg = parse_scenario_file(path);
  cfg.schedule.reset();
  SimOptions opt;
  opt.suppress_entries = true;
  const SimReport rep = run_scenario(cfg, opt);
  std::vector<EnergyBreakdown> energies;
  for (const auto& m : rep.monitors) energies.push_back(m.energy);
  const LambdaEstimate est = estimate_lambda(energies, 0.0);
  std::cout << "lambda_hat = " << fmt9(est.lambda) << " (achieved at t="
            << fmt9(est.t_at) << ")\n";
  std::cout << "lambda_budget (x1.2) = " << fmt9(1.2 * est.lambda) << '\n';
  return 0;
}

int cmd_admit_plan(const std::string& path) {
  const ScenarioConfig cfg = parse_scenario_file(path);
  if (!cfg.schedule) {
    std::cout << "scenario has no entry schedule\n";
    return 2;
  }
  double lambda_hat = 0.0;
  if (cfg.lambda_hat) {
    lambda_hat = *cfg.lambda_hat;
  } else {
    // Suppressed-entry calibration run over a few entry periods.
    ScenarioConfig calib = cfg;
    calib.schedule.reset();
    calib.duration =
        std::min(cfg.duration, std::max(3.0 * cfg.schedule->period, 60.0));
    SimOptions opt;
    opt.suppress_entries = true;
    const SimReport crep = run_scenario(calib, opt);
    std::vector<EnergyBreakdown> energies;
    for (const auto& m : crep.monitors) energies.push_back(m.energy);
    lambda_hat = 1.2 * estimate_lambda(energies, 0.0).lambda;
  }
  const SafetyThresholds th = thresholds(cfg.link, cfg.potentials);
  const EntryScheduleSpec& sched = *cfg.schedule;
  const double kappa_plan = 1.5 * sched.speed_jitter * sched.speed_jitter;
  const double gamma_plan =
      0.5 * cfg.potentials.psi(
                sigma_norm_scalar(sched.spacing, cfg.potentials.sigma.epsilon));
  const AdmissionBudget b = make_admission_budget(th.c_star, lambda_hat,
                                                  sched.period, kappa_plan,
                                                  gamma_plan);
  std::cout << "c_star = " << fmt9(b.c_star) << ", lambda_hat = " << fmt9(b.lambda_hat)
            << ", T = " << fmt9(b.period) << '\n';
  std::cout << "planned kappa = " << fmt9(b.kappa) << ", gamma = " << fmt9(b.gamma)
            << '\n';
  std::cout << "m_max = ";
  if (b.m_max.unbounded) {
    std::cout << "unbounded\n";
  } else {
    std::cout << b.m_max.count << '\n';
  }
  const int g = cfg.schedule->group_size;
  const double h_eps = g * b.kappa + g * (g - 1.0) * b.gamma;
  if (h_eps < b.c_star) {
    std::cout << "min entry period for groups of " << g << " = "
              << fmt9(min_entry_period(b.lambda_hat, b.c_star, h_eps)) << " s\n";
  } else {
    std::cout << "groups of " << g << " exceed the energy budget c_star\n";
  }
  return 0;
}

int cmd_verify_rate(const std::string& path) {
  ScenarioConfig cfg = parse_scenario_file(path);
  cfg.schedule.reset();
  SimOptions opt;
  opt.suppress_entries = true;
  const SimReport rep = run_scenario(cfg, opt);

  // Gradient of the collective potential as a function of stacked positions.
  std::mt19937 rng(cfg.seed);
  const std::vector<FlatState> fleet = build_initial_fleet(cfg, rng);
  const ProtocolParams params{cfg.damping, cfg.potentials, cfg.link};
  const long n = 3 * static_cast<long>(fleet.size());
  const auto grad = [&](const Eigen::VectorXd& q) {
    std::vector<FlatState> states = fleet;
    for (std::size_t i = 0; i < states.size(); ++i) {
      states[i].q = q.segment<3>(3 * static_cast<long>(i));
      states[i].qdot = cfg.link.v_hat;
    }
    Eigen::VectorXd g(n);
    const auto inputs = control_all(states, params);
    for (std::size_t i = 0; i < states.size(); ++i) {
      g.segment<3>(3 * static_cast<long>(i)) = -inputs[i].u;
    }
    return g;
  };
  Eigen::VectorXd lo(n), hi(n);
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    lo.segment<3>(3 * static_cast<long>(i)) = fleet[i].q.array() - 15.0;
    hi.segment<3>(3 * static_cast<long>(i)) = fleet[i].q.array() + 15.0;
  }
  const double l_hat = estimate_lipschitz(grad, lo, hi, 4000, cfg.seed);
  // Any upper bound on the true Lipschitz constant is admissible; raise the
  // estimate when the damping assumption needs a larger constant.
  const double l_floor = 1.02 / (4.0 * cfg.damping * cfg.damping);
  const double l_cert = std::max(l_hat, l_floor);
  std::cout << "lipschitz estimate = " << fmt9(l_hat);
  if (l_cert > l_hat) std::cout << " (raised to " << fmt9(l_cert) << ")";
  std::cout << '\n';

  const RateCertificate cert =
      make_rate_certificate(cfg.damping, l_cert, rep.rate_samples.front());
  const RateReport rr = verify_rate_bound(rep.rate_samples, cert);
  std::cout << "p = " << fmt9(cert.p) << ", r = " << fmt9(cert.r)
            << ", alpha = " << fmt9(cert.alpha) << '\n';
  std::cout << "rhs numerator = " << fmt9(cert.rhs_numerator)
            << " (alt form " << fmt9(cert.rhs_numerator_alt) << ")\n";
  std::cout << "bound holds: " << (rr.bound_holds ? "yes" : "NO")
            << " (worst margin " << fmt9(rr.worst_margin) << ")\n";
  std::cout << "alt bound holds: " << (rr.bound_holds_alt ? "yes" : "NO") << '\n';
  std::cout << "lyapunov sum non-increasing: "
            << (rr.lyapunov_monotone ? "yes" : "NO") << '\n';
  return (rr.bound_holds && rr.lyapunov_monotone) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sUAS traffic link simulation and verification"};
  app.require_subcommand(1);

  std::string scenario;
  std::string outdir = ".";

  auto* run = app.add_subcommand("run", "simulate a scenario and write outputs");
  run->add_option("scenario", scenario, "scenario file")->required();
  run->add_option("-o,--outdir", outdir, "output directory");

  auto* check = app.add_subcommand("check", "validate a scenario file");
  check->add_option("scenario", scenario, "scenario file")->required();

  auto* th = app.add_subcommand("thresholds", "print safety thresholds");
  th->add_option("scenario", scenario, "scenario file")->required();

  auto* lam = app.add_subcommand("lambda", "calibration run and convergence factor");
  lam->add_option("scenario", scenario, "scenario file")->required();

  auto* plan = app.add_subcommand("admit-plan", "print admission budget");
  plan->add_option("scenario", scenario, "scenario file")->required();

  auto* rate = app.add_subcommand("verify-rate", "check the convergence-rate bound");
  rate->add_option("scenario", scenario, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(scenario, outdir);
    if (check->parsed()) return cmd_check(scenario);
    if (th->parsed()) return cmd_thresholds(scenario);
    if (lam->parsed()) return cmd_lambda(scenario);
    if (plan->parsed()) return cmd_admit_plan(scenario);
    if (rate->parsed()) return cmd_verify_rate(scenario);
  } catch (const utmlink::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
