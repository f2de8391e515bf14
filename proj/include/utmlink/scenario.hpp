#ifndef UTMLINK_SCENARIO_HPP_
#define UTMLINK_SCENARIO_HPP_

#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "utmlink/dynamics.hpp"
#include "utmlink/geometry.hpp"
#include "utmlink/potentials.hpp"

namespace utmlink {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class AdmissionMode { Enforce, Observe };

// Periodic entry schedule: groups of entrants spawned on the entrance gate
// plane, velocities jittered around v_hat.
struct EntryScheduleSpec {
  double period = 20.0;       // T, seconds between entry events
  double first_entry = 20.0;  // time of the first event
  double t_epsilon = 0.5;     // multiple-entry window
  int group_size = 2;
  double speed_jitter = 1.0;  // per-component bound on |qdot - v_hat|, m/s
  double spacing = 12.0;      // lattice spacing on the gate plane
};

// Initial fleet: explicit vehicles and/or a seeded lattice generator whose
// velocity jitter is scaled down until H(0) fits under c_star.
struct FleetSpec {
  std::vector<FlatState> vehicles;
  int lattice_count = 0;
  double lattice_spacing = 12.0;
  double speed_jitter_x = 1.2;
  double speed_jitter_yz = 0.4;
};

struct ScenarioConfig {
  LinkSpec link;
  PotentialConfig potentials;
  double damping = 0.1;
  double dt = 0.01;
  double duration = 200.0;
  unsigned seed = 1;
  double snapshot_interval = 20.0;
  AdmissionMode mode = AdmissionMode::Enforce;
  std::optional<double> lambda_hat;  // skip calibration when pinned
  std::optional<double> exit_x;      // drop vehicles past this x (off by default)
  FleetSpec fleet;
  std::optional<EntryScheduleSpec> schedule;
};

namespace detail {

inline std::vector<double> parse_numbers(const std::string& text,
                                         const std::string& key, int line_no) {
  std::istringstream is(text);
  std::vector<double> out;
  double v;
  while (is >> v) out.push_back(v);
  std::string leftover;
  if (is.clear(), is >> leftover) {
    throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                      "' has non-numeric value '" + leftover + "'");
  }
  return out;
}

inline double parse_scalar(const std::string& text, const std::string& key,
                           int line_no) {
  const auto v = parse_numbers(text, key, line_no);
  if (v.size() != 1) {
    throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                      "' expects one number");
  }
  return v[0];
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig cfg;
  bool have_schedule = false;
  EntryScheduleSpec schedule;
  std::string section;
  std::string line;
  int line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section");
      }
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto nums = [&]() { return detail::parse_numbers(value, key, line_no); };
    const auto scalar = [&]() { return detail::parse_scalar(value, key, line_no); };

    if (section == "link") {
      if (key == "wall" || key == "gate") {
        const auto v = nums();
        if (v.size() != 4) {
          throw ConfigError("line " + std::to_string(line_no) +
                            ": wall/gate expects 'nx ny nz offset'");
        }
        HalfSpace hs(Eigen::Vector3d(v[0], v[1], v[2]), v[3]);
        (key == "wall" ? cfg.link.walls : cfg.link.gates).push_back(hs);
      } else if (key == "v_hat") {
        const auto v = nums();
        if (v.size() != 3) {
          throw ConfigError("line " + std::to_string(line_no) + ": v_hat expects 3 numbers");
        }
        cfg.link.v_hat = {v[0], v[1], v[2]};
      } else if (key == "d_hat") {
        cfg.link.d_hat = scalar();
      } else if (key == "d_min") {
        cfg.link.d_min = scalar();
      } else if (key == "d_b_hat") {
        cfg.link.d_b_hat = scalar();
      } else if (key == "d_b_min") {
        cfg.link.d_b_min = scalar();
      } else if (key == "v_upper") {
        cfg.link.v_upper = scalar();
      } else if (key == "v_lower") {
        cfg.link.v_lower = scalar();
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown link key '" + key + "'");
      }
    } else if (section == "potentials") {
      if (key == "epsilon") {
        cfg.potentials.sigma.epsilon = scalar();
        if (cfg.potentials.sigma.epsilon <= 0.0) {
          throw ConfigError("line " + std::to_string(line_no) + ": epsilon must be positive");
        }
      } else if (key == "family") {
        cfg.potentials.family = potential_family_by_name(value);
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown potentials key '" + key + "'");
      }
    } else if (section == "sim") {
      if (key == "damping") {
        cfg.damping = scalar();
      } else if (key == "dt") {
        cfg.dt = scalar();
      } else if (key == "duration") {
        cfg.duration = scalar();
      } else if (key == "seed") {
        cfg.seed = static_cast<unsigned>(scalar());
      } else if (key == "snapshot_interval") {
        cfg.snapshot_interval = scalar();
      } else if (key == "lambda_hat") {
        cfg.lambda_hat = scalar();
      } else if (key == "exit_x") {
        cfg.exit_x = scalar();
      } else if (key == "admission_mode") {
        if (value == "enforce") {
          cfg.mode = AdmissionMode::Enforce;
        } else if (value == "observe") {
          cfg.mode = AdmissionMode::Observe;
        } else {
          throw ConfigError("line " + std::to_string(line_no) +
                            ": admission_mode must be 'enforce' or 'observe'");
        }
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown sim key '" + key + "'");
      }
    } else if (section == "fleet") {
      if (key == "vehicle") {
        const auto v = nums();
        if (v.size() != 6) {
          throw ConfigError("line " + std::to_string(line_no) +
                            ": vehicle expects 'x y z vx vy vz'");
        }
        FlatState s;
        s.q = {v[0], v[1], v[2]};
        s.qdot = {v[3], v[4], v[5]};
        cfg.fleet.vehicles.push_back(s);
      } else if (key == "vehicle_kinematic") {
        const auto v = nums();
        if (v.size() != 6) {
          throw ConfigError("line " + std::to_string(line_no) +
                            ": vehicle_kinematic expects 'x y z v theta w'");
        }
        cfg.fleet.vehicles.push_back(
            kinematic_to_flat(KinematicState{v[0], v[1], v[2], v[3], v[4], v[5]}));
      } else if (key == "lattice_count") {
        cfg.fleet.lattice_count = static_cast<int>(scalar());
      } else if (key == "lattice_spacing") {
        cfg.fleet.lattice_spacing = scalar();
      } else if (key == "speed_jitter_x") {
        cfg.fleet.speed_jitter_x = scalar();
      } else if (key == "speed_jitter_yz") {
        cfg.fleet.speed_jitter_yz = scalar();
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown fleet key '" + key + "'");
      }
    } else if (section == "schedule") {
      have_schedule = true;
      if (key == "period") {
        schedule.period = scalar();
      } else if (key == "first_entry") {
        schedule.first_entry = scalar();
      } else if (key == "t_epsilon") {
        schedule.t_epsilon = scalar();
      } else if (key == "group_size") {
        schedule.group_size = static_cast<int>(scalar());
      } else if (key == "speed_jitter") {
        schedule.speed_jitter = scalar();
      } else if (key == "spacing") {
        schedule.spacing = scalar();
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown schedule key '" + key + "'");
      }
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' outside of a known section");
    }
  }

  if (have_schedule) {
    if (schedule.period <= 0.0 || schedule.group_size <= 0) {
      throw ConfigError("schedule needs positive period and group_size");
    }
    if (schedule.t_epsilon < 0.0 || schedule.t_epsilon > schedule.period / 10.0) {
      throw ConfigError("t_epsilon must be in [0, period/10]");
    }
    cfg.schedule = schedule;
  }
  if (!(cfg.dt > 0.0) || cfg.duration < cfg.dt) {
    throw ConfigError("sim needs dt > 0 and duration >= dt");
  }
  cfg.potentials.d_hat = cfg.link.d_hat;
  cfg.potentials.d_b_hat = cfg.link.d_b_hat;
  return cfg;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  return parse_scenario(in);
}

}  // namespace utmlink

#endif  // UTMLINK_SCENARIO_HPP_
