#ifndef UR_STACK_SIM_CONFIG_HPP
#define UR_STACK_SIM_CONFIG_HPP

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ur_stack/kin/chain.hpp"

namespace urstack::sim {

struct Injection {
  double t_start = 0.0;
  double t_end = 0.0;
  std::array<double, 6> wrench{};
};

struct SimConfig {
  kin::Chain chain;
  double frequency = 500.0;  // control loop [Hz]
  double plane_z = 0.0;      // contact plane height in base frame [m]
  double stiffness = 0.0;    // [N/m]; 0 disables the contact model
  std::vector<Injection> injections;
  int rtde_port = 30004;
  int dashboard_port = 29999;
  bool virtual_time = true;

  void validate() const {
    chain.validate();
    if (!(frequency > 0.0)) throw std::invalid_argument("frequency must be positive");
    if (stiffness < 0.0) throw std::invalid_argument("stiffness must be non-negative");
  }
};

// "t0,t1,fx,fy,fz,tx,ty,tz"
inline Injection parse_injection(const std::string& s) {
  Injection inj;
  std::istringstream is(s);
  std::array<double, 8> v;
  char comma;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && !(is >> comma && comma == ','))
      throw std::invalid_argument("injection needs 8 comma-separated numbers: " + s);
    if (!(is >> v[i]))
      throw std::invalid_argument("injection needs 8 comma-separated numbers: " + s);
  }
  inj.t_start = v[0];
  inj.t_end = v[1];
  for (int i = 0; i < 6; ++i) inj.wrench[static_cast<std::size_t>(i)] = v[2 + static_cast<std::size_t>(i)];
  if (inj.t_end < inj.t_start) throw std::invalid_argument("injection end before start: " + s);
  return inj;
}

}  // namespace urstack::sim

#endif  // UR_STACK_SIM_CONFIG_HPP
