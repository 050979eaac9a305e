#ifndef UR_STACK_KIN_SOLVER_HPP
#define UR_STACK_KIN_SOLVER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "ur_stack/kin/chain.hpp"
#include "ur_stack/kin/pose.hpp"

namespace urstack::kin {

using JointVector = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void check_dim(const Chain& chain, const JointVector& q) {
  if (static_cast<std::size_t>(q.size()) != chain.dof())
    throw DimensionError("joint vector dimension does not match chain");
}

namespace detail {

inline Mat4 dh_transform(const DHJoint& j, double q) {
  double th = q + j.theta_offset;
  double ct = std::cos(th), st = std::sin(th);
  double ca = std::cos(j.alpha), sa = std::sin(j.alpha);
  Mat4 T;
  T << ct, -st * ca,  st * sa, j.a * ct,
       st,  ct * ca, -ct * sa, j.a * st,
        0,       sa,       ca,      j.d,
        0,        0,        0,        1;
  return T;
}

// Frames after base and after each joint transform (tool excluded).
inline std::vector<Mat4> link_frames(const Chain& chain, const JointVector& q) {
  std::vector<Mat4> frames;
  frames.reserve(chain.dof() + 1);
  Mat4 T = chain.base.to_matrix();
  frames.push_back(T);
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    T = T * dh_transform(chain.joints[i], q[static_cast<Eigen::Index>(i)]);
    frames.push_back(T);
  }
  return frames;
}

}  // namespace detail

inline Pose6 fk(const Chain& chain, const JointVector& q) {
  check_dim(chain, q);
  Mat4 T = detail::link_frames(chain, q).back() * chain.tool.to_matrix();
  return Pose6::from_matrix(T);
}

// Geometric Jacobian about the TCP point, expressed in the base frame.
// Rows: linear x,y,z then angular x,y,z.
inline Jacobian jacobian(const Chain& chain, const JointVector& q) {
  check_dim(chain, q);
  auto frames = detail::link_frames(chain, q);
  Vec3 p_tcp = (frames.back() * chain.tool.to_matrix()).block<3, 1>(0, 3);

  Jacobian J(6, q.size());
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    // joint i rotates about the z axis of the frame preceding it
    Vec3 z = frames[i].block<3, 1>(0, 2);
    Vec3 p = frames[i].block<3, 1>(0, 3);
    J.block<3, 1>(0, static_cast<Eigen::Index>(i)) = z.cross(p_tcp - p);
    J.block<3, 1>(3, static_cast<Eigen::Index>(i)) = z;
  }
  return J;
}

struct IkResult {
  JointVector q;
  bool converged = false;
  int iterations = 0;
  double error_norm = 0.0;
};

inline JointVector clamp_to_limits(const Chain& chain, JointVector q) {
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    auto k = static_cast<Eigen::Index>(i);
    q[k] = std::clamp(q[k], chain.joints[i].q_min, chain.joints[i].q_max);
  }
  return q;
}

// Damped-least-squares iteration q += (J^T J + l^2 I)^-1 J^T e, joint limits
// clamped each step. Non-convergence is a flagged result, not a failure.
inline IkResult ik_dls(const Chain& chain, const JointVector& q_seed, const Pose6& target,
                       double tol = 1e-6, int max_iter = 200, double damping = 0.05) {
  check_dim(chain, q_seed);
  if (!(tol > 0.0)) throw std::invalid_argument("ik tolerance must be positive");
  if (!(damping > 0.0)) throw std::invalid_argument("ik damping must be positive");

  IkResult r;
  r.q = clamp_to_limits(chain, q_seed);
  const auto n = q_seed.size();
  Eigen::MatrixXd reg = damping * damping * Eigen::MatrixXd::Identity(n, n);

  for (int it = 0; it <= max_iter; ++it) {
    Vec6 e = pose_error(target, fk(chain, r.q));
    r.error_norm = e.norm();
    r.iterations = it;
    if (r.error_norm <= tol) {
      r.converged = true;
      return r;
    }
    if (it == max_iter) break;
    Jacobian J = jacobian(chain, r.q);
    JointVector dq = (J.transpose() * J + reg).ldlt().solve(J.transpose() * e);
    r.q = clamp_to_limits(chain, r.q + dq);
  }
  return r;
}

// One DLS update toward a reference pose with a per-joint step bound;
// the tracking primitive of the simulated controller.
inline JointVector dls_step(const Chain& chain, const JointVector& q, const Pose6& reference,
                            const std::vector<double>& dq_limit, double damping = 0.05) {
  check_dim(chain, q);
  Vec6 e = pose_error(reference, fk(chain, q));
  Jacobian J = jacobian(chain, q);
  const auto n = q.size();
  Eigen::MatrixXd reg = damping * damping * Eigen::MatrixXd::Identity(n, n);
  JointVector dq = (J.transpose() * J + reg).ldlt().solve(J.transpose() * e);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lim = dq_limit[static_cast<std::size_t>(i)];
    dq[i] = std::clamp(dq[i], -lim, lim);
  }
  return clamp_to_limits(chain, q + dq);
}

}  // namespace urstack::kin

#endif  // UR_STACK_KIN_SOLVER_HPP
