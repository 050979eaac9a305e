#ifndef UR_STACK_KIN_CHAIN_HPP
#define UR_STACK_KIN_CHAIN_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ur_stack/kin/pose.hpp"

namespace urstack::kin {

class ChainConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Standard (distal) DH joint with limits.
struct DHJoint {
  double a = 0.0;             // link length [m]
  double alpha = 0.0;         // link twist [rad]
  double d = 0.0;             // link offset [m]
  double theta_offset = 0.0;  // [rad]
  double q_min = -2.0 * M_PI;
  double q_max = 2.0 * M_PI;
  double v_max = 3.14;   // [rad/s]
  double a_max = 10.0;   // [rad/s^2]

  void validate() const {
    if (!(q_min < q_max)) throw ChainConfigError("joint limits require q_min < q_max");
    if (!(v_max > 0.0)) throw ChainConfigError("joint v_max must be positive");
    if (!(a_max > 0.0)) throw ChainConfigError("joint a_max must be positive");
  }
};

struct Chain {
  std::vector<DHJoint> joints;
  Pose6 base;
  Pose6 tool;
  std::vector<double> home;  // optional start configuration, empty = zeros

  std::size_t dof() const { return joints.size(); }

  std::vector<double> home_q() const {
    if (!home.empty()) return home;
    return std::vector<double>(joints.size(), 0.0);
  }

  void validate() const {
    if (joints.empty()) throw ChainConfigError("chain needs at least one joint");
    for (const auto& j : joints) j.validate();
    if (!home.empty() && home.size() != joints.size())
      throw ChainConfigError("home vector size does not match joint count");
  }
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_num(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ChainConfigError("bad number '" + s + "' in " + ctx);
  }
}

}  // namespace detail

// Chain configuration format, one directive per line:
//   base = px py pz rx ry rz
//   tool = px py pz rx ry rz
//   home = q0 q1 ...
//   joint a=.. alpha=.. d=.. theta=.. qmin=.. qmax=.. vmax=.. amax=..
// '#' starts a comment. Unspecified joint attributes keep defaults.
inline Chain parse_chain_config(std::istream& in, const std::string& origin = "<config>") {
  Chain chain;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);

    if (toks[0] == "joint") {
      DHJoint j;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        auto eq = toks[i].find('=');
        if (eq == std::string::npos)
          throw ChainConfigError("expected key=value in " + where);
        std::string key = toks[i].substr(0, eq);
        double val = detail::parse_num(toks[i].substr(eq + 1), where);
        if (key == "a") j.a = val;
        else if (key == "alpha") j.alpha = val;
        else if (key == "d") j.d = val;
        else if (key == "theta") j.theta_offset = val;
        else if (key == "qmin") j.q_min = val;
        else if (key == "qmax") j.q_max = val;
        else if (key == "vmax") j.v_max = val;
        else if (key == "amax") j.a_max = val;
        else throw ChainConfigError("unknown joint attribute '" + key + "' in " + where);
      }
      chain.joints.push_back(j);
    } else if (toks[0] == "base" || toks[0] == "tool") {
      if (toks.size() != 8 || toks[1] != "=")
        throw ChainConfigError(toks[0] + " needs 6 numbers in " + where);
      std::array<double, 6> v;
      for (int i = 0; i < 6; ++i) v[i] = detail::parse_num(toks[2 + i], where);
      (toks[0] == "base" ? chain.base : chain.tool) = Pose6::from_array(v);
    } else if (toks[0] == "home") {
      if (toks.size() < 3 || toks[1] != "=")
        throw ChainConfigError("home needs joint values in " + where);
      chain.home.clear();
      for (std::size_t i = 2; i < toks.size(); ++i)
        chain.home.push_back(detail::parse_num(toks[i], where));
    } else {
      throw ChainConfigError("unknown directive '" + toks[0] + "' in " + where);
    }
  }
  chain.validate();
  return chain;
}

inline Chain load_chain(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ChainConfigError("cannot open chain config: " + path);
  return parse_chain_config(f, path);
}

}  // namespace urstack::kin

#endif  // UR_STACK_KIN_CHAIN_HPP
