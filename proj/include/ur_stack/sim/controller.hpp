#ifndef UR_STACK_SIM_CONTROLLER_HPP
#define UR_STACK_SIM_CONTROLLER_HPP

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ur_stack/kin/solver.hpp"
#include "ur_stack/motion/trajectory.hpp"
#include "ur_stack/script/interp.hpp"
#include "ur_stack/sim/config.hpp"
#include "ur_stack/sim/snippet_runner.hpp"
#include "ur_stack/wire/codec.hpp"
#include "ur_stack/wire/registers.hpp"

namespace urstack::sim {

// Register conventions of the command dispatch.
//   input_int[0]   command opcode
//   input_int[1]   command sequence number
//   input_int[2]   async flag (client-side semantics)
//   input_float[0..5]  command targets (joint vector / pose / twist)
//   input_float[6] speed (or stopJ decel)
//   input_float[7] accel
//   input_float[18] extension trigger, input_int[19] extension parameter
//   output_int[0]  done-sequence, output_int[1] error code
//   output_int[2]  contact flag of the last moveUntilContact
//   output_int[3]  error-sequence (the sequence the error code refers to)
enum class Opcode : std::int32_t {
  Noop = 0,
  MoveJ = 1,
  MoveL = 2,
  ServoJ = 3,
  StopJ = 4,
  ZeroFt = 5,
  MoveUntilContact = 6,
};

enum ErrorCode : std::int32_t {
  kErrNone = 0,
  kErrUnknownOpcode = 1,
  kErrBusy = 2,
  kErrTrackingDiverged = 3,
  kErrTargetOutOfLimits = 4,
};

constexpr double kContactWrenchThreshold = 10.0;  // [N], fixed by moveUntilContact
constexpr double kContactStopDecel = 2.0;         // [rad/s^2], fixed

// Deterministic virtual robot controller. Externally driven by tick();
// network front ends feed bytes through deliver() and drain take_outgoing().
// All mutating entry points serialize on one mutex.
class Controller {
 public:
  explicit Controller(SimConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    dt_ = 1.0 / cfg_.frequency;
    auto home = cfg_.chain.home_q();
    q_ = Eigen::Map<const Eigen::VectorXd>(home.data(), static_cast<Eigen::Index>(home.size()));
    q_ = kin::clamp_to_limits(cfg_.chain, q_);
    qd_ = Eigen::VectorXd::Zero(q_.size());
    tcp_pose_ = kin::fk(cfg_.chain, q_);
    v_max_.resize(cfg_.chain.dof());
    for (std::size_t i = 0; i < cfg_.chain.dof(); ++i) v_max_[i] = cfg_.chain.joints[i].v_max;
  }

  ~Controller() { active_ext_.reset(); }

  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  // ---- connection API ------------------------------------------------------

  int open_connection() {
    std::lock_guard lk(mu_);
    int id = next_conn_id_++;
    conns_.emplace(id, Conn{});
    return id;
  }

  void close_connection(int id) {
    std::lock_guard lk(mu_);
    auto it = conns_.find(id);
    if (it == conns_.end()) return;
    if (control_conn_ == id) control_conn_ = -1;
    conns_.erase(it);
  }

  void deliver(int id, const wire::Bytes& data) {
    std::lock_guard lk(mu_);
    Conn& c = conn(id);
    c.rx.insert(c.rx.end(), data.begin(), data.end());
    wire::DecodeResult dec;
    try {
      dec = wire::decode_frames(c.rx);
    } catch (const wire::ProtocolError& e) {
      log_line(std::string("protocol error: ") + e.what());
      c.rx.clear();
      return;
    }
    c.rx = std::move(dec.remainder);
    for (auto& f : dec.frames) handle_frame(id, c, f);
  }

  wire::Bytes take_outgoing(int id) {
    std::lock_guard lk(mu_);
    Conn& c = conn(id);
    wire::Bytes out = std::move(c.tx);
    c.tx.clear();
    return out;
  }

  bool has_outgoing(int id) {
    std::lock_guard lk(mu_);
    return !conn(id).tx.empty();
  }

  // ---- control loop --------------------------------------------------------

  void tick() {
    std::vector<std::function<void()>> observers;
    {
      std::lock_guard lk(mu_);
      drain_mailbox();
      process_cmd();
      integrate();
      advance_snippet();
      compute_wrench();
      publish();
      ++tick_index_;
      sim_time_ = static_cast<double>(tick_index_) * dt_;  // no accumulation drift
      observers = observers_;
    }
    for (auto& o : observers) o();
  }

  void run_ticks(int n) {
    for (int i = 0; i < n; ++i) tick();
  }

  // Observers fire after every tick, outside the controller lock.
  void add_tick_observer(std::function<void()> fn) {
    std::lock_guard lk(mu_);
    observers_.push_back(std::move(fn));
  }

  // ---- direct accessors (tests, in-process composition) --------------------

  double dt() const { return dt_; }
  double frequency() const { return cfg_.frequency; }
  const kin::Chain& chain() const { return cfg_.chain; }
  const SimConfig& config() const { return cfg_; }
  wire::RegisterFile& registers() { return regs_; }

  double sim_time() const {
    std::lock_guard lk(mu_);
    return sim_time_;
  }
  Eigen::VectorXd q() const {
    std::lock_guard lk(mu_);
    return q_;
  }
  Eigen::VectorXd qd() const {
    std::lock_guard lk(mu_);
    return qd_;
  }
  kin::Pose6 tcp_pose() const {
    std::lock_guard lk(mu_);
    return tcp_pose_;
  }
  std::array<double, 6> reported_wrench() const {
    std::lock_guard lk(mu_);
    return reported_wrench_;
  }
  bool program_running() const {
    std::lock_guard lk(mu_);
    return program_running_;
  }
  std::vector<std::string> log() const {
    std::lock_guard lk(mu_);
    return log_;
  }
  bool command_active() const {
    std::lock_guard lk(mu_);
    return active_.has_value();
  }
  std::vector<int> installed_extensions() const {
    std::lock_guard lk(mu_);
    std::vector<int> ids;
    for (const auto& [id, name] : extensions_) ids.push_back(id);
    return ids;
  }

  // ---- control script ------------------------------------------------------

  // Top-level FuncDefs named ext_<ID> become extension snippets; everything
  // else is preamble (helpers run at snippet start). Replaces any previous
  // script.
  std::vector<int> install_control_script(const std::string& text) {
    std::lock_guard lk(mu_);
    return install_script_locked(text);
  }

  // ---- dashboard -----------------------------------------------------------

  std::string dashboard_handle_line(const std::string& line) {
    std::lock_guard lk(mu_);
    if (line == "play") {
      program_running_ = true;
      return "Starting program";
    }
    if (line == "stop") {
      program_running_ = false;
      return "Stopped";
    }
    if (line == "pause") {
      program_running_ = false;
      return "Pausing program";
    }
    if (line == "running?")
      return std::string("Program running: ") + (program_running_ ? "true" : "false");
    if (line == "robotmode") return "Robotmode: RUNNING";
    if (line == "power on") return "Powering on";
    if (line == "power off") return "Powering off";
    if (line == "brake release") return "Brake releasing";
    if (line.rfind("load ", 0) == 0) return "Loading program: " + line.substr(5);
    return "could not understand: " + line;
  }

 private:
  // ---- connection handling -------------------------------------------------

  struct OutRecipe {
    wire::Recipe recipe;
    int divisor = 1;
    long counter = 0;
  };

  struct Conn {
    bool started = false;
    wire::RecipeBuilder recipes;
    std::map<std::uint8_t, wire::Recipe> input_recipes;
    std::vector<OutRecipe> output_recipes;
    wire::Bytes rx;
    wire::Bytes tx;
  };

  Conn& conn(int id) {
    auto it = conns_.find(id);
    if (it == conns_.end()) throw std::invalid_argument("unknown connection id");
    return it->second;
  }

  static std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }

  void reply(Conn& c, wire::PacketType type, const wire::Bytes& payload) {
    auto f = wire::encode_frame(type, payload);
    c.tx.insert(c.tx.end(), f.begin(), f.end());
  }

  void reply_text(Conn& c, wire::PacketType type, std::uint8_t status, const std::string& text) {
    wire::Bytes p;
    p.push_back(status);
    p.insert(p.end(), text.begin(), text.end());
    reply(c, type, p);
  }

  bool acquire_control(int id, Conn& c, wire::PacketType reply_type) {
    if (control_conn_ != -1 && control_conn_ != id) {
      reply_text(c, reply_type, 0, "control interface already in use");
      return false;
    }
    control_conn_ = id;
    return true;
  }

  void handle_frame(int id, Conn& c, const wire::Frame& f) {
    switch (f.type) {
      case wire::PacketType::ProtocolVersion: {
        std::uint16_t v = 0;
        if (f.payload.size() == 2) v = (std::uint16_t(f.payload[0]) << 8) | f.payload[1];
        wire::Bytes p{static_cast<std::uint8_t>(v == 2 ? 1 : 0)};
        reply(c, wire::PacketType::ProtocolVersion, p);
        break;
      }
      case wire::PacketType::SetupOutputs: {
        if (f.payload.size() < 9) {
          reply_text(c, wire::PacketType::SetupOutputs, 0, "short setup payload");
          break;
        }
        wire::detail::Reader rd{f.payload.data(), f.payload.size()};
        double freq = rd.f64();
        std::string names(f.payload.begin() + 8, f.payload.end());
        try {
          wire::Recipe r = c.recipes.output(split_csv(names), freq);
          OutRecipe orc;
          orc.recipe = r;
          orc.divisor = std::max(1, static_cast<int>(std::lround(cfg_.frequency / freq)));
          c.output_recipes.push_back(orc);
          std::string kinds;
          for (std::size_t i = 0; i < r.fields.size(); ++i) {
            if (i) kinds += ',';
            kinds += wire::field_kind_name(r.fields[i].kind);
          }
          reply_text(c, wire::PacketType::SetupOutputs, r.id, kinds);
        } catch (const wire::ProtocolError& e) {
          reply_text(c, wire::PacketType::SetupOutputs, 0, e.what());
        }
        break;
      }
      case wire::PacketType::SetupInputs: {
        if (!acquire_control(id, c, wire::PacketType::SetupInputs)) break;
        std::string names(f.payload.begin(), f.payload.end());
        try {
          wire::Recipe r = c.recipes.input(split_csv(names));
          c.input_recipes[r.id] = r;
          std::string kinds;
          for (std::size_t i = 0; i < r.fields.size(); ++i) {
            if (i) kinds += ',';
            kinds += wire::field_kind_name(r.fields[i].kind);
          }
          reply_text(c, wire::PacketType::SetupInputs, r.id, kinds);
        } catch (const wire::ProtocolError& e) {
          reply_text(c, wire::PacketType::SetupInputs, 0, e.what());
        }
        break;
      }
      case wire::PacketType::Start:
        c.started = true;
        reply(c, wire::PacketType::Start, {1});
        break;
      case wire::PacketType::Pause:
        c.started = false;
        reply(c, wire::PacketType::Pause, {1});
        break;
      case wire::PacketType::ControlScript: {
        if (!acquire_control(id, c, wire::PacketType::ControlScript)) break;
        std::string text(f.payload.begin(), f.payload.end());
        try {
          auto ids = install_script_locked(text);
          std::string id_list;
          for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i) id_list += ',';
            id_list += std::to_string(ids[i]);
          }
          reply_text(c, wire::PacketType::ControlScript, 1, id_list);
        } catch (const std::exception& e) {
          reply_text(c, wire::PacketType::ControlScript, 0, e.what());
        }
        break;
      }
      case wire::PacketType::DataPackage: {
        if (f.payload.empty()) break;
        auto it = c.input_recipes.find(f.payload[0]);
        if (it == c.input_recipes.end()) {
          log_line("data package with unknown recipe id " + std::to_string(f.payload[0]));
          break;
        }
        try {
          auto values = wire::unpack_values(it->second, f.payload);
          queue_register_writes(it->second, values);
        } catch (const wire::ProtocolError& e) {
          log_line(std::string("bad data package: ") + e.what());
        }
        break;
      }
    }
  }

  void queue_register_writes(const wire::Recipe& recipe, const std::vector<wire::Value>& values) {
    // One mailbox entry per package; field order within the package is kept.
    mailbox_.push_back([this, recipe, values] {
      std::uint64_t dig_mask = ~0ULL;
      for (std::size_t i = 0; i < recipe.fields.size(); ++i) {
        const std::string& name = recipe.fields[i].name;
        if (name == "standard_digital_output_mask") {
          dig_mask = std::get<std::uint64_t>(values[i]);
        } else if (name == "standard_digital_output") {
          regs_.apply_digital_out(dig_mask, std::get<std::uint64_t>(values[i]));
        } else if (name.rfind("input_int_register_", 0) == 0) {
          int k = std::stoi(name.substr(19));
          regs_.set_int(wire::RegisterBank::InputInt, k, std::get<std::int32_t>(values[i]));
        } else if (name.rfind("input_double_register_", 0) == 0) {
          int k = std::stoi(name.substr(22));
          regs_.set_float(wire::RegisterBank::InputFloat, k, std::get<double>(values[i]));
        }
      }
    });
  }

  void drain_mailbox() {
    for (auto& fn : mailbox_) fn();
    mailbox_.clear();
  }

  // ---- command dispatch ----------------------------------------------------

  struct MoveJCmd {
    std::vector<motion::TrapProfile> profiles;
    Eigen::VectorXd from;
    double t0;
    double t_total;
  };
  struct MoveLCmd {
    kin::Pose6 from, to;
    motion::TrapProfile profile;  // over path length (m or rad)
    double length;
    double t0;
    int settle_ticks = 0;
    int diverged_ticks = 0;
  };
  struct ServoCmd {
    Eigen::VectorXd target;
  };
  struct StopJCmd {
    double decel;
    Eigen::VectorXd v;  // ramp state; qd_ lags by half a tick
    bool inited = false;
  };
  struct ContactCmd {
    kin::Pose6 ref;
    kin::Vec6 twist;
    bool stopping = false;
    bool contact = false;
    int diverged_ticks = 0;
    Eigen::VectorXd v;  // braking ramp state
    bool v_inited = false;
  };

  struct ActiveCommand {
    std::int32_t seq = 0;
    std::variant<MoveJCmd, MoveLCmd, ServoCmd, StopJCmd, ContactCmd> cmd;
  };

  void process_cmd() {
    // extension trigger: start a snippet when register 18 carries an
    // installed ID and none is in flight
    double trig = regs_.get_float(wire::RegisterBank::InputFloat, 18);
    if (ext_phase_ == ExtPhase::Idle && trig != 0.0) {
      int id = static_cast<int>(std::llround(trig));
      auto it = extensions_.find(id);
      if (it != extensions_.end()) start_snippet(id, it->second);
    }
    if (ext_phase_ == ExtPhase::DoneWait &&
        regs_.get_float(wire::RegisterBank::InputFloat, 18) == 0.0) {
      regs_.set_float(wire::RegisterBank::OutputFloat, 18, 0.0);
      ext_phase_ = ExtPhase::Idle;
    }

    std::int32_t seq = regs_.get_int(wire::RegisterBank::InputInt, 1);
    if (seq == last_seq_) return;
    last_seq_ = seq;

    std::int32_t op = regs_.get_int(wire::RegisterBank::InputInt, 0);
    if (op == static_cast<std::int32_t>(Opcode::Noop)) return;

    auto params = read_param_vector();
    double speed = regs_.get_float(wire::RegisterBank::InputFloat, 6);
    double accel = regs_.get_float(wire::RegisterBank::InputFloat, 7);

    switch (static_cast<Opcode>(op)) {
      case Opcode::Noop:
        break;
      case Opcode::MoveJ: {
        if (reject_if_busy(seq)) return;
        Eigen::VectorXd target = joint_target(params);
        for (Eigen::Index i = 0; i < target.size(); ++i) {
          const auto& j = cfg_.chain.joints[static_cast<std::size_t>(i)];
          if (target[i] < j.q_min - 1e-12 || target[i] > j.q_max + 1e-12) {
            fail_command("moveJ target outside joint limits", kErrTargetOutOfLimits, seq);
            return;
          }
        }
        MoveJCmd c;
        c.from = q_;
        c.t0 = sim_time_;
        c.t_total = 0.0;
        for (Eigen::Index i = 0; i < target.size(); ++i) {
          const auto& j = cfg_.chain.joints[static_cast<std::size_t>(i)];
          double v = speed > 0.0 ? std::min(speed, j.v_max) : j.v_max;
          double a = accel > 0.0 ? std::min(accel, j.a_max) : j.a_max;
          c.profiles.push_back(motion::plan_trapezoid(target[i] - q_[i], v, a));
          c.t_total = std::max(c.t_total, c.profiles.back().t_total);
        }
        for (auto& p : c.profiles) p = motion::stretch_to_duration(p, c.t_total);
        accept_command(seq, std::move(c));
        break;
      }
      case Opcode::MoveL: {
        if (reject_if_busy(seq)) return;
        MoveLCmd c;
        c.from = tcp_pose_;
        c.to = kin::Pose6::from_array(
            {params[0], params[1], params[2], params[3], params[4], params[5]});
        double lin = (c.to.position - c.from.position).norm();
        double ang = kin::pose_error(c.to, c.from).tail<3>().norm();
        c.length = lin > 1e-12 ? lin : ang;
        double v = speed > 0.0 ? speed : 0.25;
        double a = accel > 0.0 ? accel : 1.2;
        c.profile = motion::plan_trapezoid(c.length, v, a);
        c.t0 = sim_time_;
        accept_command(seq, std::move(c));
        break;
      }
      case Opcode::ServoJ: {
        if (active_ && !std::holds_alternative<ServoCmd>(active_->cmd)) {
          fail_command("servoJ while another command is active", kErrBusy, seq);
          return;
        }
        ServoCmd c;
        c.target = joint_target(params);
        regs_.set_int(wire::RegisterBank::OutputInt, 1, kErrNone);
        active_ = ActiveCommand{seq, std::move(c)};
        break;
      }
      case Opcode::StopJ: {
        StopJCmd c;
        c.decel = speed > 0.0 ? speed : 2.0;
        accept_command(seq, std::move(c), /*override_active=*/true);
        break;
      }
      case Opcode::ZeroFt: {
        capture_bias_ = true;
        regs_.set_int(wire::RegisterBank::OutputInt, 1, kErrNone);
        regs_.set_int(wire::RegisterBank::OutputInt, 0, seq);  // immediate completion
        break;
      }
      case Opcode::MoveUntilContact: {
        if (reject_if_busy(seq)) return;
        ContactCmd c;
        c.ref = tcp_pose_;
        for (int i = 0; i < 6; ++i) c.twist[i] = params[static_cast<std::size_t>(i)];
        accept_command(seq, std::move(c));
        break;
      }
      default:
        fail_command("unknown opcode " + std::to_string(op), kErrUnknownOpcode, seq);
        break;
    }
  }

  std::array<double, 6> read_param_vector() {
    std::array<double, 6> p;
    for (int i = 0; i < 6; ++i) p[static_cast<std::size_t>(i)] = regs_.get_float(wire::RegisterBank::InputFloat, i);
    return p;
  }

  Eigen::VectorXd joint_target(const std::array<double, 6>& params) {
    Eigen::VectorXd t(q_.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = params[static_cast<std::size_t>(i)];
    return t;
  }

  bool reject_if_busy(std::int32_t seq) {
    if (active_) {
      fail_command("command rejected: another command is active", kErrBusy, seq);
      return true;
    }
    return false;
  }

  template <typename Cmd>
  void accept_command(std::int32_t seq, Cmd&& cmd, bool override_active = false) {
    if (override_active) active_.reset();
    regs_.set_int(wire::RegisterBank::OutputInt, 1, kErrNone);
    active_ = ActiveCommand{seq, std::forward<Cmd>(cmd)};
  }

  void fail_command(const std::string& msg, ErrorCode code, std::int32_t seq) {
    log_line(msg);
    regs_.set_int(wire::RegisterBank::OutputInt, 1, code);
    regs_.set_int(wire::RegisterBank::OutputInt, 3, seq);
  }

  void complete_active() {
    regs_.set_int(wire::RegisterBank::OutputInt, 0, active_->seq);
    active_.reset();
  }

  // ---- integration ---------------------------------------------------------

  void integrate() {
    Eigen::VectorXd q_prev = q_;
    if (active_) {
      std::visit([this](auto& c) { step_command(c); }, active_->cmd);
    }
    // hard per-tick velocity bound, regardless of command type
    for (Eigen::Index i = 0; i < q_.size(); ++i) {
      double lim = v_max_[static_cast<std::size_t>(i)] * dt_;
      double dq = q_[i] - q_prev[i];
      if (dq > lim) q_[i] = q_prev[i] + lim;
      if (dq < -lim) q_[i] = q_prev[i] - lim;
    }
    q_ = kin::clamp_to_limits(cfg_.chain, q_);
    qd_ = (q_ - q_prev) / dt_;
    tcp_pose_ = kin::fk(cfg_.chain, q_);
  }

  void step_command(MoveJCmd& c) {
    double t = sim_time_ - c.t0 + dt_;
    for (Eigen::Index i = 0; i < q_.size(); ++i)
      q_[i] = c.from[i] + motion::sample_profile(c.profiles[static_cast<std::size_t>(i)], t).first;
    if (t >= c.t_total) complete_active();
  }

  void step_command(MoveLCmd& c) {
    double t = sim_time_ - c.t0 + dt_;
    kin::Pose6 ref;
    bool profile_done = (t >= c.profile.t_total) || c.length < 1e-12;
    if (profile_done) {
      ref = c.to;
    } else {
      double s = motion::sample_profile(c.profile, t).first;
      ref = kin::pose_interpolate(c.from, c.to, s / c.length);
    }
    std::vector<double> dq_lim(v_max_.size());
    for (std::size_t i = 0; i < v_max_.size(); ++i) dq_lim[i] = v_max_[i] * dt_;
    q_ = kin::dls_step(cfg_.chain, q_, ref, dq_lim);

    double err = kin::pose_error(c.to, kin::fk(cfg_.chain, q_)).norm();
    double track_err = kin::pose_error(ref, kin::fk(cfg_.chain, q_)).norm();
    if (track_err > 0.05) {
      if (++c.diverged_ticks >= 100) {
        fail_command("moveL tracking diverged", kErrTrackingDiverged, active_->seq);
        active_.reset();
        return;
      }
    } else {
      c.diverged_ticks = 0;
    }
    if (profile_done) {
      ++c.settle_ticks;
      if (err <= 1e-6 || (c.settle_ticks > 2000 && err <= 1e-4)) {
        complete_active();
      } else if (c.settle_ticks > 4000) {
        fail_command("moveL failed to settle", kErrTrackingDiverged, active_->seq);
        active_.reset();
      }
    }
  }

  void step_command(ServoCmd& c) {
    q_ = motion::servo_step(q_, c.target, v_max_, dt_);
    // tracking caught up and no fresher target arrived: report done so
    // non-streaming commands can follow a servo burst
    if ((q_ - c.target).lpNorm<Eigen::Infinity>() < 1e-12) complete_active();
  }

  void step_command(StopJCmd& c) {
    if (!c.inited) {
      c.v = qd_;
      c.inited = true;
    }
    bool all_zero = true;
    for (Eigen::Index i = 0; i < q_.size(); ++i) {
      double v = c.v[i];
      double v_new = v > 0.0 ? std::max(0.0, v - c.decel * dt_) : std::min(0.0, v + c.decel * dt_);
      q_[i] += 0.5 * (v + v_new) * dt_;  // trapezoidal integration of the ramp
      c.v[i] = v_new;
      if (v_new != 0.0) all_zero = false;
    }
    if (all_zero) complete_active();
  }

  void step_command(ContactCmd& c) {
    if (c.stopping) {
      if (!c.v_inited) {
        c.v = qd_;
        c.v_inited = true;
      }
      bool all_zero = true;
      for (Eigen::Index i = 0; i < q_.size(); ++i) {
        double v = c.v[i];
        double v_new = v > 0.0 ? std::max(0.0, v - kContactStopDecel * dt_)
                               : std::min(0.0, v + kContactStopDecel * dt_);
        q_[i] += 0.5 * (v + v_new) * dt_;
        c.v[i] = v_new;
        if (v_new != 0.0) all_zero = false;
      }
      if (all_zero) {
        regs_.set_int(wire::RegisterBank::OutputInt, 2, c.contact ? 1 : 0);
        complete_active();
      }
      return;
    }

    double wn = 0.0;
    for (double w : reported_wrench_) wn += w * w;
    if (std::sqrt(wn) > kContactWrenchThreshold) {
      c.stopping = true;
      c.contact = true;
      step_command(c);
      return;
    }

    c.ref.position += c.twist.head<3>() * dt_;
    kin::Vec3 w = c.twist.tail<3>() * dt_;
    if (w.norm() > 0.0)
      c.ref.rotation = kin::rotation_matrix_to_vector(kin::rotation_vector_to_matrix(w) *
                                                      kin::rotation_vector_to_matrix(c.ref.rotation));
    std::vector<double> dq_lim(v_max_.size());
    for (std::size_t i = 0; i < v_max_.size(); ++i) dq_lim[i] = v_max_[i] * dt_;
    q_ = kin::dls_step(cfg_.chain, q_, c.ref, dq_lim);

    double track_err = kin::pose_error(c.ref, kin::fk(cfg_.chain, q_)).norm();
    if (track_err > 0.05) {
      if (++c.diverged_ticks >= 100) {
        // workspace or joint limits exhausted without contact
        c.stopping = true;
        c.contact = false;
      }
    } else {
      c.diverged_ticks = 0;
    }
  }

  // ---- extension snippets --------------------------------------------------

  enum class ExtPhase { Idle, Running, DoneWait };

  void start_snippet(int id, const std::string& func_name) {
    auto state = std::make_shared<SnippetState>();
    state->env.logger = [this](const std::string& m) { log_.push_back(m); };
    script::register_builtins(state->env, regs_, extras_);
    Controller* self = this;
    std::string script_text = script_text_;
    double freq = cfg_.frequency;
    active_ext_state_ = state;
    active_ext_id_ = id;
    active_ext_ = std::make_unique<SnippetRunner>(
        [state, script_text, func_name, freq](const std::function<void(int)>& yield) {
          state->env.sleep_handler = [&yield, freq](double s) {
            int ticks = static_cast<int>(std::ceil(s * freq - 1e-9));
            if (ticks > 0) yield(ticks);
          };
          // the snippet thread owns its own parse of the installed script
          script::Program prog = script::parse_source(script_text);
          script::Interpreter interp(state->env);
          interp.run(prog);
          interp.call_function(func_name, {});
        });
    ext_phase_ = ExtPhase::Running;
    (void)self;
  }

  void advance_snippet() {
    if (ext_phase_ != ExtPhase::Running || !active_ext_) return;
    auto st = active_ext_->resume();
    if (st == SnippetRunner::State::Done || st == SnippetRunner::State::Failed) {
      if (st == SnippetRunner::State::Failed)
        log_line("snippet " + std::to_string(active_ext_id_) + " failed: " + active_ext_->error());
      active_ext_.reset();
      active_ext_state_.reset();
      regs_.set_float(wire::RegisterBank::OutputFloat, 18, double(active_ext_id_));
      ext_phase_ = ExtPhase::DoneWait;
    }
  }

  std::vector<int> install_script_locked(const std::string& text) {
    script::Program prog = script::parse_source(text);  // throws ScriptError with line
    std::map<int, std::string> table;
    for (const auto& s : prog.statements) {
      if (s->kind != script::Stmt::Kind::FuncDef) continue;
      if (s->name.rfind("ext_", 0) != 0) continue;
      int id = 0;
      try {
        id = std::stoi(s->name.substr(4));
      } catch (const std::exception&) {
        continue;
      }
      if (id < 256) throw std::invalid_argument("extension id must be >= 256: " + s->name);
      if (!table.emplace(id, s->name).second)
        throw std::invalid_argument("duplicate extension id " + std::to_string(id));
    }
    extensions_ = std::move(table);
    script_text_ = text;
    std::vector<int> ids;
    for (const auto& [id, name] : extensions_) ids.push_back(id);
    return ids;
  }

  // ---- wrench model --------------------------------------------------------

  void compute_wrench() {
    std::array<double, 6> raw{};
    double tcp_z = tcp_pose_.position.z();
    if (cfg_.stiffness > 0.0) raw[2] = cfg_.stiffness * std::max(0.0, cfg_.plane_z - tcp_z);
    for (const auto& inj : cfg_.injections) {
      if (sim_time_ >= inj.t_start && sim_time_ < inj.t_end)
        for (int i = 0; i < 6; ++i) raw[static_cast<std::size_t>(i)] += inj.wrench[static_cast<std::size_t>(i)];
    }
    if (capture_bias_) {
      wrench_bias_ = raw;
      capture_bias_ = false;
    }
    for (int i = 0; i < 6; ++i)
      reported_wrench_[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(i)] - wrench_bias_[static_cast<std::size_t>(i)];
  }

  // ---- publishing ----------------------------------------------------------

  void publish() {
    for (auto& [id, c] : conns_) {
      if (!c.started) continue;
      for (auto& orc : c.output_recipes) {
        bool due = (orc.counter % orc.divisor) == (orc.divisor - 1);
        ++orc.counter;
        if (!due) continue;
        auto payload = wire::pack_values(orc.recipe, collect_values(orc.recipe));
        auto frame = wire::encode_frame(wire::PacketType::DataPackage, payload);
        c.tx.insert(c.tx.end(), frame.begin(), frame.end());
      }
    }
  }

  std::array<double, 6> vec6_from(const Eigen::VectorXd& v) const {
    std::array<double, 6> a{};
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(6, v.size()); ++i)
      a[static_cast<std::size_t>(i)] = v[i];
    return a;
  }

  std::vector<wire::Value> collect_values(const wire::Recipe& recipe) {
    std::vector<wire::Value> out;
    out.reserve(recipe.fields.size());
    for (const auto& f : recipe.fields) {
      const std::string& n = f.name;
      if (n == "timestamp") out.emplace_back(sim_time_);
      else if (n == "actual_q") out.emplace_back(vec6_from(q_));
      else if (n == "actual_qd") out.emplace_back(vec6_from(qd_));
      else if (n == "actual_TCP_pose") out.emplace_back(tcp_pose_.to_array());
      else if (n == "actual_TCP_force") out.emplace_back(reported_wrench_);
      else if (n == "actual_digital_input_bits") out.emplace_back(regs_.digital_in_bits());
      else if (n == "actual_digital_output_bits") out.emplace_back(regs_.digital_out_bits());
      else if (n.rfind("output_int_register_", 0) == 0)
        out.emplace_back(regs_.get_int(wire::RegisterBank::OutputInt, std::stoi(n.substr(20))));
      else if (n.rfind("output_double_register_", 0) == 0)
        out.emplace_back(regs_.get_float(wire::RegisterBank::OutputFloat, std::stoi(n.substr(23))));
      else
        out.emplace_back(0.0);
    }
    return out;
  }

  void log_line(const std::string& s) { log_.push_back(s); }

  // ---- state ---------------------------------------------------------------

  SimConfig cfg_;
  double dt_;
  mutable std::mutex mu_;

  Eigen::VectorXd q_, qd_;
  kin::Pose6 tcp_pose_;
  std::vector<double> v_max_;
  double sim_time_ = 0.0;
  long tick_index_ = 0;
  std::array<double, 6> reported_wrench_{};
  std::array<double, 6> wrench_bias_{};
  bool capture_bias_ = false;
  bool program_running_ = false;
  std::vector<std::string> log_;

  wire::RegisterFile regs_;
  std::deque<std::function<void()>> mailbox_;

  std::optional<ActiveCommand> active_;
  std::int32_t last_seq_ = 0;

  struct SnippetState {
    script::Env env;
  };
  std::map<int, std::string> extensions_;  // id -> funcdef name
  std::string script_text_;
  std::map<std::string, script::HostFunction> extras_;
  std::unique_ptr<SnippetRunner> active_ext_;
  std::shared_ptr<SnippetState> active_ext_state_;
  int active_ext_id_ = 0;
  ExtPhase ext_phase_ = ExtPhase::Idle;

  std::map<int, Conn> conns_;
  int next_conn_id_ = 1;
  int control_conn_ = -1;

  std::vector<std::function<void()>> observers_;
};

}  // namespace urstack::sim

#endif  // UR_STACK_SIM_CONTROLLER_HPP
