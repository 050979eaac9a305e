#ifndef UR_STACK_MOTION_PROFILE_HPP
#define UR_STACK_MOTION_PROFILE_HPP

#include <cmath>
#include <stdexcept>
#include <utility>

namespace urstack::motion {

// Scalar trapezoidal velocity profile. The distance sign is carried by the
// profile; sampling returns signed positions.
struct TrapProfile {
  double distance = 0.0;  // signed
  double v_peak = 0.0;
  double t_acc = 0.0;
  double t_cruise = 0.0;
  double t_total = 0.0;
  double accel = 0.0;
};

inline TrapProfile plan_trapezoid(double distance, double v_max, double a_max) {
  if (!(v_max > 0.0) || !(a_max > 0.0))
    throw std::invalid_argument("trapezoid limits must be positive");
  TrapProfile p;
  p.distance = distance;
  p.accel = a_max;
  double d = std::abs(distance);
  if (d == 0.0) return p;

  if (d >= v_max * v_max / a_max) {
    p.v_peak = v_max;
    p.t_acc = v_max / a_max;
    p.t_cruise = (d - v_max * v_max / a_max) / v_max;
  } else {
    p.v_peak = std::sqrt(d * a_max);
    p.t_acc = p.v_peak / a_max;
    p.t_cruise = 0.0;
  }
  p.t_total = 2.0 * p.t_acc + p.t_cruise;
  return p;
}

// Piecewise evaluation; t beyond t_total clamps to (distance, 0).
inline std::pair<double, double> sample_profile(const TrapProfile& p, double t) {
  if (t < 0.0) throw std::invalid_argument("profile time must be non-negative");
  double sign = p.distance < 0.0 ? -1.0 : 1.0;
  double d = std::abs(p.distance);
  if (t >= p.t_total || d == 0.0) return {p.distance, 0.0};

  double s, v;
  if (t < p.t_acc) {
    s = 0.5 * p.accel * t * t;
    v = p.accel * t;
  } else if (t < p.t_acc + p.t_cruise) {
    s = 0.5 * p.v_peak * p.t_acc + p.v_peak * (t - p.t_acc);
    v = p.v_peak;
  } else {
    double tr = p.t_total - t;  // time remaining in deceleration
    s = d - 0.5 * p.accel * tr * tr;
    v = p.accel * tr;
  }
  return {sign * s, sign * v};
}

// Profile stretched in time so the same distance completes in exactly
// t_target (>= natural t_total). Used for multi-joint synchronization.
inline TrapProfile stretch_to_duration(const TrapProfile& p, double t_target) {
  if (p.t_total <= 0.0 || t_target <= p.t_total) return p;
  double k = p.t_total / t_target;  // < 1: slow down
  TrapProfile out = p;
  out.t_acc = p.t_acc / k;
  out.t_cruise = p.t_cruise / k;
  out.t_total = t_target;
  out.v_peak = p.v_peak * k;
  out.accel = p.accel * k * k;
  return out;
}

}  // namespace urstack::motion

#endif  // UR_STACK_MOTION_PROFILE_HPP
