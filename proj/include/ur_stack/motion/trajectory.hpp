#ifndef UR_STACK_MOTION_TRAJECTORY_HPP
#define UR_STACK_MOTION_TRAJECTORY_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ur_stack/motion/profile.hpp"

namespace urstack::motion {

using JointVector = Eigen::VectorXd;

// Joint-space trajectory sampled at a fixed step. Stops (zero velocity) at
// every waypoint; no blending.
struct SampledTrajectory {
  double dt = 0.0;
  std::vector<JointVector> points;
  std::vector<JointVector> velocities;
  double duration() const {
    return points.empty() ? 0.0 : dt * static_cast<double>(points.size() - 1);
  }
};

// Per segment, every joint follows a trapezoid stretched to the slowest
// joint's time, so the segment stays a straight line in joint space.
inline SampledTrajectory parameterize_path(const std::vector<JointVector>& waypoints,
                                           const std::vector<double>& v_max,
                                           const std::vector<double>& a_max, double dt) {
  if (waypoints.size() < 2) throw std::invalid_argument("path needs at least 2 waypoints");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const auto n = waypoints.front().size();
  if (v_max.size() != static_cast<std::size_t>(n) || a_max.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("limit vectors must match joint dimension");
  for (const auto& w : waypoints)
    if (w.size() != n) throw std::invalid_argument("waypoint dimension mismatch");

  SampledTrajectory traj;
  traj.dt = dt;
  traj.points.push_back(waypoints.front());
  traj.velocities.push_back(JointVector::Zero(n));

  for (std::size_t seg = 0; seg + 1 < waypoints.size(); ++seg) {
    const JointVector& from = waypoints[seg];
    const JointVector& to = waypoints[seg + 1];

    std::vector<TrapProfile> profiles(static_cast<std::size_t>(n));
    double t_seg = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      profiles[static_cast<std::size_t>(j)] =
          plan_trapezoid(to[j] - from[j], v_max[static_cast<std::size_t>(j)],
                         a_max[static_cast<std::size_t>(j)]);
      t_seg = std::max(t_seg, profiles[static_cast<std::size_t>(j)].t_total);
    }
    if (t_seg == 0.0) continue;  // coincident waypoints
    for (auto& p : profiles) p = stretch_to_duration(p, t_seg);

    auto steps = static_cast<std::size_t>(std::ceil(t_seg / dt - 1e-12));
    for (std::size_t k = 1; k <= steps; ++k) {
      double t = static_cast<double>(k) * dt;
      JointVector q(n), qd(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        auto [s, v] = sample_profile(profiles[static_cast<std::size_t>(j)], t);
        q[j] = from[j] + s;
        qd[j] = v;
      }
      traj.points.push_back(std::move(q));
      traj.velocities.push_back(std::move(qd));
    }
    // sample_profile clamps past t_total, so the last sample is the waypoint
    traj.points.back() = to;
    traj.velocities.back().setZero();
  }
  return traj;
}

// Rate-clamped step toward a target; the servo tracking law of the
// controller. Acceleration shaping comes from the targets it follows.
inline JointVector servo_step(const JointVector& q, const JointVector& q_target,
                              const std::vector<double>& v_max, double dt) {
  if (q.size() != q_target.size()) throw std::invalid_argument("servo dimension mismatch");
  if (v_max.size() != static_cast<std::size_t>(q.size()))
    throw std::invalid_argument("servo limit dimension mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  JointVector out = q;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    double lim = v_max[static_cast<std::size_t>(j)] * dt;
    out[j] += std::clamp(q_target[j] - q[j], -lim, lim);
  }
  return out;
}

}  // namespace urstack::motion

#endif  // UR_STACK_MOTION_TRAJECTORY_HPP
