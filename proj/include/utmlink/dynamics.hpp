#ifndef UTMLINK_DYNAMICS_HPP_
#define UTMLINK_DYNAMICS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace utmlink {

// The heading/speed transformation is singular at zero horizontal speed; a
// strict floor keeps the turn-rate channel bounded.
inline constexpr double kHorizontalSpeedFloor = 0.1;  // m/s

class DegenerateHorizontalSpeed : public std::runtime_error {
 public:
  explicit DegenerateHorizontalSpeed(double v)
      : std::runtime_error("horizontal speed " + std::to_string(v) +
                           " m/s is below the flyable floor") {}
};

class LengthMismatch : public std::invalid_argument {
 public:
  LengthMismatch() : std::invalid_argument("state and input lists differ in length") {}
};

// Fixed-wing state: horizontal position/heading/speed plus vertical speed.
struct KinematicState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double v = 0.0;      // horizontal speed, m/s
  double theta = 0.0;  // heading, rad
  double w = 0.0;      // vertical speed, m/s
};

// Feedback-linearized (double-integrator) state.
struct FlatState {
  Eigen::Vector3d q{0.0, 0.0, 0.0};
  Eigen::Vector3d qdot{0.0, 0.0, 0.0};
};

// Body-frame inputs: longitudinal acceleration, heading rate, vertical accel.
struct BodyInput {
  double a = 0.0;
  double phi_rate = 0.0;
  double delta = 0.0;
};

struct FlatInput {
  Eigen::Vector3d u{0.0, 0.0, 0.0};
};

inline FlatState kinematic_to_flat(const KinematicState& s) {
  FlatState out;
  out.q = {s.x, s.y, s.z};
  out.qdot = {s.v * std::cos(s.theta), s.v * std::sin(s.theta), s.w};
  return out;
}

inline KinematicState flat_to_kinematic(const FlatState& s) {
  const double v = std::hypot(s.qdot.x(), s.qdot.y());
  if (v <= kHorizontalSpeedFloor) throw DegenerateHorizontalSpeed(v);
  KinematicState out;
  out.x = s.q.x();
  out.y = s.q.y();
  out.z = s.q.z();
  out.v = v;
  out.theta = std::atan2(s.qdot.y(), s.qdot.x());
  out.w = s.qdot.z();
  return out;
}

// Maps a flat acceleration to body inputs; inverse of body_to_flat_input.
inline BodyInput flat_to_body_input(const KinematicState& s, const FlatInput& in) {
  if (s.v <= kHorizontalSpeedFloor) throw DegenerateHorizontalSpeed(s.v);
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  BodyInput out;
  out.a = c * in.u.x() + sn * in.u.y();
  out.phi_rate = (-sn * in.u.x() + c * in.u.y()) / s.v;
  out.delta = in.u.z();
  return out;
}

inline FlatInput body_to_flat_input(const KinematicState& s, const BodyInput& in) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  FlatInput out;
  out.u.x() = c * in.a - s.v * sn * in.phi_rate;
  out.u.y() = sn * in.a + s.v * c * in.phi_rate;
  out.u.z() = in.delta;
  return out;
}

// Fixed-step advance of the double integrator under zero-order-hold input.
// For piecewise-constant u over the step this update is exact.
inline FlatState step_one(const FlatState& s, const FlatInput& in, double dt) {
  FlatState out;
  out.q = s.q + s.qdot * dt + 0.5 * dt * dt * in.u;
  out.qdot = s.qdot + in.u * dt;
  return out;
}

inline std::vector<FlatState> step(const std::vector<FlatState>& states,
                                   const std::vector<FlatInput>& inputs, double dt) {
  if (states.size() != inputs.size()) throw LengthMismatch();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<FlatState> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    out.push_back(step_one(states[i], inputs[i], dt));
  }
  return out;
}

}  // namespace utmlink

#endif  // UTMLINK_DYNAMICS_HPP_
