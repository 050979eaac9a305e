#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ur_stack/motion/profile.hpp"
#include "ur_stack/motion/trajectory.hpp"

using namespace urstack::motion;

namespace {

JointVector qvec(std::initializer_list<double> v) {
  JointVector q(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

// Independent oracle: integrate the sampled velocity with the trapezoid
// rule, phase by phase so no integration interval straddles a kink of the
// piecewise-linear velocity (where the rule would lose accuracy).
double integrated_distance(const TrapProfile& p, int n_per_phase = 4000) {
  double s = 0.0;
  const double marks[4] = {0.0, p.t_acc, p.t_acc + p.t_cruise, p.t_total};
  for (int ph = 0; ph < 3; ++ph) {
    double t0 = marks[ph], t1 = marks[ph + 1];
    if (t1 <= t0) continue;
    double h = (t1 - t0) / n_per_phase;
    double v_prev = sample_profile(p, t0).second;
    for (int k = 1; k <= n_per_phase; ++k) {
      double t = (k == n_per_phase) ? t1 : t0 + k * h;
      // sample strictly inside the profile to dodge the end clamp
      double v = sample_profile(p, std::min(t, p.t_total * (1 - 1e-15))).second;
      if (t >= p.t_total) v = 0.0;
      s += 0.5 * (v_prev + v) * h;
      v_prev = v;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("pinned durations: (2,1,1) exactly 3 and (0.5,1,1) exactly 2*sqrt(0.5)") {
  TrapProfile a = plan_trapezoid(2.0, 1.0, 1.0);
  CHECK(a.t_total == 3.0);
  CHECK(a.v_peak == 1.0);
  CHECK(a.t_cruise == 1.0);

  TrapProfile b = plan_trapezoid(0.5, 1.0, 1.0);
  CHECK(std::abs(b.t_total - 2.0 * std::sqrt(0.5)) < 1e-12);
  CHECK(b.t_cruise == 0.0);
}

TEST_CASE("1000 random profiles: distance, limit, and integration invariants") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  std::uniform_real_distribution<double> vmax(0.05, 4.0);
  std::uniform_real_distribution<double> amax(0.05, 8.0);

  for (int i = 0; i < 1000; ++i) {
    double d = dist(rng), v = vmax(rng), a = amax(rng);
    TrapProfile p = plan_trapezoid(d, v, a);

    auto [s_end, v_end] = sample_profile(p, p.t_total);
    CHECK(s_end == d);
    CHECK(v_end == 0.0);

    // velocity and acceleration limits along a dense sweep
    double prev_v = 0.0;
    const double h = p.t_total / 400.0;
    bool limits_ok = true;
    if (p.t_total > 0.0) {
      for (int k = 0; k <= 400; ++k) {
        auto [s, vel] = sample_profile(p, k * h);
        if (std::abs(vel) > v + 1e-6) limits_ok = false;
        if (k > 0 && std::abs(vel - prev_v) > a * h + 1e-6) limits_ok = false;
        if (std::abs(s) > std::abs(d) + 1e-9) limits_ok = false;
        prev_v = vel;
      }
      CHECK(limits_ok);

      double integrated = integrated_distance(p);
      CHECK(std::abs(integrated - d) < 1e-9);
    }
  }
}

TEST_CASE("triangular threshold: short moves never reach v_max") {
  TrapProfile p = plan_trapezoid(0.9999, 1.0, 1.0);
  CHECK(p.v_peak < 1.0);
  CHECK(p.t_cruise == 0.0);
  TrapProfile q = plan_trapezoid(1.0001, 1.0, 1.0);
  CHECK(q.v_peak == 1.0);
  CHECK(q.t_cruise > 0.0);
}

TEST_CASE("stretching preserves distance and hits the target duration") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.1, 3.0);
  for (int i = 0; i < 200; ++i) {
    TrapProfile p = plan_trapezoid(dist(rng), 1.0, 2.0);
    double t_target = p.t_total * 1.7;
    TrapProfile s = stretch_to_duration(p, t_target);
    CHECK(std::abs(s.t_total - t_target) < 1e-12);
    CHECK(s.distance == p.distance);
    CHECK(std::abs(integrated_distance(s) - s.distance) < 1e-9);
    CHECK(s.v_peak < p.v_peak);
  }
}

TEST_CASE("invalid profile arguments throw") {
  CHECK_THROWS_AS(plan_trapezoid(1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(plan_trapezoid(1.0, 1.0, -1.0), std::invalid_argument);
  TrapProfile p = plan_trapezoid(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(sample_profile(p, -0.1), std::invalid_argument);
}

TEST_CASE("parameterized path starts and ends at waypoints with zero velocity") {
  auto traj = parameterize_path({qvec({0.0, 0.0}), qvec({1.0, -0.5})}, {1.0, 1.0}, {1.0, 1.0},
                                0.002);
  REQUIRE(traj.points.size() >= 2);
  CHECK((traj.points.front() - qvec({0.0, 0.0})).norm() == 0.0);
  CHECK((traj.points.back() - qvec({1.0, -0.5})).norm() == 0.0);
  CHECK(traj.velocities.front().norm() == 0.0);
  CHECK(traj.velocities.back().norm() == 0.0);
  // the slowest joint (1.0 rad with unit limits) sets the duration: 2.0 s
  CHECK(std::abs(traj.duration() - 2.0) <= 0.002 + 1e-12);
}

TEST_CASE("interior waypoints are hit exactly with zero velocity") {
  auto traj = parameterize_path({qvec({0.0}), qvec({1.0}), qvec({0.25})}, {1.0}, {1.0}, 0.002);
  bool found = false;
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    if (traj.points[i][0] == 1.0 && traj.velocities[i][0] == 0.0) found = true;
  }
  CHECK(found);
  CHECK(traj.points.back()[0] == 0.25);
}

TEST_CASE("consecutive samples respect the velocity limit") {
  auto traj = parameterize_path({qvec({0.0, 1.0}), qvec({2.0, -1.0})}, {0.7, 1.3}, {2.0, 2.0},
                                0.002);
  for (std::size_t i = 1; i < traj.points.size(); ++i) {
    JointVector dq = traj.points[i] - traj.points[i - 1];
    CHECK(std::abs(dq[0]) <= 0.7 * 0.002 + 1e-9);
    CHECK(std::abs(dq[1]) <= 1.3 * 0.002 + 1e-9);
  }
}

TEST_CASE("coincident waypoints are tolerated") {
  auto traj = parameterize_path({qvec({0.5}), qvec({0.5})}, {1.0}, {1.0}, 0.002);
  CHECK(traj.points.size() == 1);
  CHECK(traj.duration() == 0.0);
}

TEST_CASE("path argument validation") {
  CHECK_THROWS_AS(parameterize_path({qvec({0.0})}, {1.0}, {1.0}, 0.002), std::invalid_argument);
  CHECK_THROWS_AS(parameterize_path({qvec({0.0}), qvec({1.0, 2.0})}, {1.0}, {1.0}, 0.002),
                  std::invalid_argument);
  CHECK_THROWS_AS(parameterize_path({qvec({0.0}), qvec({1.0})}, {1.0, 1.0}, {1.0}, 0.002),
                  std::invalid_argument);
  CHECK_THROWS_AS(parameterize_path({qvec({0.0}), qvec({1.0})}, {1.0}, {1.0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("servo_step clamps per-joint motion to v_max*dt") {
  JointVector q = qvec({0.0, 0.0});
  JointVector target = qvec({1.0, -0.0005});
  JointVector next = servo_step(q, target, {1.0, 1.0}, 0.002);
  CHECK(next[0] == 0.002);
  CHECK(next[1] == -0.0005);
  // converges to the target when repeated
  for (int i = 0; i < 1000; ++i) q = servo_step(q, target, {1.0, 1.0}, 0.002);
  CHECK((q - target).norm() < 1e-12);
}
