#ifndef UR_STACK_CLIENT_SESSION_HPP
#define UR_STACK_CLIENT_SESSION_HPP

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ur_stack/client/transport.hpp"
#include "ur_stack/kin/pose.hpp"
#include "ur_stack/wire/codec.hpp"

namespace urstack::client {

class ClientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class VersionRefused : public ClientError {
 public:
  VersionRefused() : ClientError("protocol version refused") {}
};
class ExclusivityRefused : public ClientError {
 public:
  ExclusivityRefused() : ClientError("control interface already in use") {}
};
class RecipeRefused : public ClientError {
 public:
  using ClientError::ClientError;
};
class NoDataYet : public ClientError {
 public:
  NoDataYet() : ClientError("no data yet") {}
};
class TimeoutError : public ClientError {
 public:
  using ClientError::ClientError;
};

// One consistent data package, decoded by field name.
struct RobotSnapshot {
  double timestamp = 0.0;
  std::array<double, 6> q{};
  std::array<double, 6> qd{};
  kin::Pose6 tcp_pose;
  std::array<double, 6> tcp_force{};
  std::uint64_t digital_in = 0;
  std::uint64_t digital_out = 0;
  std::map<std::string, std::int32_t> int_registers;     // output_int_register_K
  std::map<std::string, double> double_registers;        // output_double_register_K
};

namespace detail {

inline void apply_field(RobotSnapshot& s, const std::string& name, const wire::Value& v) {
  if (name == "timestamp") s.timestamp = std::get<double>(v);
  else if (name == "actual_q") s.q = std::get<std::array<double, 6>>(v);
  else if (name == "actual_qd") s.qd = std::get<std::array<double, 6>>(v);
  else if (name == "actual_TCP_pose")
    s.tcp_pose = kin::Pose6::from_array(std::get<std::array<double, 6>>(v));
  else if (name == "actual_TCP_force") s.tcp_force = std::get<std::array<double, 6>>(v);
  else if (name == "actual_digital_input_bits") s.digital_in = std::get<std::uint64_t>(v);
  else if (name == "actual_digital_output_bits") s.digital_out = std::get<std::uint64_t>(v);
  else if (name.rfind("output_int_register_", 0) == 0)
    s.int_registers[name] = std::get<std::int32_t>(v);
  else if (name.rfind("output_double_register_", 0) == 0)
    s.double_registers[name] = std::get<double>(v);
}

}  // namespace detail

// Shared framing/handshake machinery of the client sessions.
class SessionBase {
 public:
  virtual ~SessionBase() = default;

  // Called whenever the session needs to wait for controller progress.
  // Loopback virtual-time setups install a hook that ticks the controller;
  // the default briefly sleeps (wall-clock servers tick themselves).
  void set_wait_hook(std::function<void()> hook) { wait_hook_ = std::move(hook); }

  // Drains the transport, decoding frames. Data packages go to on_data.
  void pump() {
    wire::Bytes in = transport_->receive();
    if (in.empty() && rx_.empty()) return;
    rx_.insert(rx_.end(), in.begin(), in.end());
    auto dec = wire::decode_frames(rx_);
    rx_ = std::move(dec.remainder);
    for (auto& f : dec.frames) {
      if (f.type == wire::PacketType::DataPackage)
        on_data(f);
      else
        replies_.push_back(std::move(f));
    }
  }

 protected:
  explicit SessionBase(std::shared_ptr<Transport> transport) : transport_(std::move(transport)) {}

  virtual void on_data(const wire::Frame&) {}

  void send_frame(wire::PacketType type, const wire::Bytes& payload) {
    transport_->send(wire::encode_frame(type, payload));
  }

  wire::Frame wait_reply(wire::PacketType type, long budget = 100000) {
    while (budget-- > 0) {
      pump();
      for (auto it = replies_.begin(); it != replies_.end(); ++it) {
        if (it->type == type) {
          wire::Frame f = std::move(*it);
          replies_.erase(it);
          return f;
        }
      }
      wait();
    }
    throw TimeoutError("timed out waiting for reply");
  }

  void wait() {
    if (wait_hook_)
      wait_hook_();
    else
      std::this_thread::sleep_for(std::chrono::microseconds(200));
  }

  void negotiate_version() {
    send_frame(wire::PacketType::ProtocolVersion, {0x00, 0x02});
    auto f = wait_reply(wire::PacketType::ProtocolVersion);
    if (f.payload.empty() || f.payload[0] != 1) throw VersionRefused();
  }

  // Returns the negotiated recipe; throws on server-side rejection.
  wire::Recipe setup_outputs(const std::vector<std::string>& names, double frequency) {
    wire::Bytes p;
    wire::detail::put_f64(p, frequency);
    std::string csv = join(names);
    p.insert(p.end(), csv.begin(), csv.end());
    send_frame(wire::PacketType::SetupOutputs, p);
    auto f = wait_reply(wire::PacketType::SetupOutputs);
    return parse_recipe_reply(f, names, frequency);
  }

  wire::Recipe setup_inputs(const std::vector<std::string>& names) {
    std::string csv = join(names);
    wire::Bytes p(csv.begin(), csv.end());
    send_frame(wire::PacketType::SetupInputs, p);
    auto f = wait_reply(wire::PacketType::SetupInputs);
    return parse_recipe_reply(f, names, 0.0);
  }

  void start() {
    send_frame(wire::PacketType::Start, {});
    auto f = wait_reply(wire::PacketType::Start);
    if (f.payload.empty() || f.payload[0] != 1) throw ClientError("start refused");
  }

  std::shared_ptr<Transport> transport_;

 private:
  static std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) out += ',';
      out += names[i];
    }
    return out;
  }

  wire::Recipe parse_recipe_reply(const wire::Frame& f, const std::vector<std::string>& names,
                                  double frequency) {
    if (f.payload.empty()) throw RecipeRefused("empty recipe reply");
    std::uint8_t id = f.payload[0];
    std::string text(f.payload.begin() + 1, f.payload.end());
    if (id == 0) {
      if (text.find("already in use") != std::string::npos) throw ExclusivityRefused();
      throw RecipeRefused(text);
    }
    wire::Recipe r;
    r.id = id;
    r.frequency = frequency;
    std::vector<std::string> kinds;
    std::string cur;
    for (char c : text) {
      if (c == ',') {
        kinds.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) kinds.push_back(cur);
    if (kinds.size() != names.size()) throw RecipeRefused("recipe kind list mismatch");
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto k = wire::field_kind_from_name(kinds[i]);
      if (!k) throw RecipeRefused("unknown field kind in reply: " + kinds[i]);
      r.fields.push_back({names[i], *k});
    }
    return r;
  }

  wire::Bytes rx_;
  std::deque<wire::Frame> replies_;
  std::function<void()> wait_hook_;
};

// ---------------------------------------------------------------------------

// Read-only state polling session; never writes input registers.
class ReceiveSession : public SessionBase {
 public:
  ReceiveSession(std::shared_ptr<Transport> transport, const std::vector<std::string>& names,
                 double frequency)
      : SessionBase(std::move(transport)) {
    negotiate_version();
    recipe_ = setup_outputs(names, frequency);
    start();
  }

  static std::vector<std::string> default_fields() {
    return {"timestamp", "actual_q", "actual_qd", "actual_TCP_pose", "actual_TCP_force",
            "actual_digital_input_bits", "actual_digital_output_bits"};
  }

  RobotSnapshot get_snapshot() {
    pump();
    if (!last_) throw NoDataYet();
    return *last_;
  }

  std::array<double, 6> get_actual_q() { return get_snapshot().q; }
  kin::Pose6 get_actual_tcp_pose() { return get_snapshot().tcp_pose; }
  std::array<double, 6> get_actual_tcp_force() { return get_snapshot().tcp_force; }

  long package_count() const { return packages_; }

 protected:
  void on_data(const wire::Frame& f) override {
    auto values = wire::unpack_values(recipe_, f.payload);
    RobotSnapshot s;
    for (std::size_t i = 0; i < recipe_.fields.size(); ++i)
      detail::apply_field(s, recipe_.fields[i].name, values[i]);
    last_ = s;
    ++packages_;
  }

 private:
  wire::Recipe recipe_;
  std::optional<RobotSnapshot> last_;
  long packages_ = 0;
};

// ---------------------------------------------------------------------------

struct CommandOutcome {
  bool ok = false;
  std::int32_t error_code = 0;
  std::int32_t sequence = 0;
  bool contact = false;
  RobotSnapshot state;
};

// Exclusive command session. Owns the input recipes, uploads the control
// script, and polls controller state through its own output recipe.
class ControlSession : public SessionBase {
 public:
  struct Options {
    std::string control_script;           // uploaded at connect when non-empty
    double poll_frequency = 500.0;        // of the internal output recipe
    long default_timeout_ticks = 600000;  // sync-command wait budget
  };

  explicit ControlSession(std::shared_ptr<Transport> transport)
      : ControlSession(std::move(transport), Options()) {}

  ControlSession(std::shared_ptr<Transport> transport, Options opts)
      : SessionBase(std::move(transport)), opts_(std::move(opts)) {
    negotiate_version();

    cmd_recipe_ = setup_inputs({"input_int_register_0", "input_int_register_1",
                                "input_int_register_2", "input_double_register_0",
                                "input_double_register_1", "input_double_register_2",
                                "input_double_register_3", "input_double_register_4",
                                "input_double_register_5", "input_double_register_6",
                                "input_double_register_7"});
    param_recipe_ = setup_inputs({"input_int_register_19", "input_int_register_20",
                                  "input_double_register_19", "input_double_register_20"});
    trigger_recipe_ = setup_inputs({"input_double_register_18"});
    io_recipe_ = setup_inputs({"standard_digital_output_mask", "standard_digital_output"});

    if (!opts_.control_script.empty()) upload_script(opts_.control_script);

    poll_recipe_names_ = {"timestamp", "actual_q", "actual_qd", "actual_TCP_pose",
                          "actual_TCP_force", "actual_digital_input_bits",
                          "actual_digital_output_bits", "output_int_register_0",
                          "output_int_register_1", "output_int_register_2",
                          "output_int_register_3", "output_int_register_19",
                          "output_int_register_20", "output_double_register_18",
                          "output_double_register_19", "output_double_register_20"};
    poll_recipe_ = setup_outputs(poll_recipe_names_, opts_.poll_frequency);
    start();
  }

  const std::vector<int>& installed_extensions() const { return extension_ids_; }

  // Latest polled state; throws NoDataYet before the first package.
  RobotSnapshot latest() {
    pump();
    if (!last_) throw NoDataYet();
    return *last_;
  }

  // ---- high-level commands ----

  CommandOutcome move_j(const std::array<double, 6>& q_target, double speed, double accel,
                        bool async = false) {
    std::int32_t seq = send_command(1, q_target, speed, accel, async);
    return async ? CommandOutcome{true, 0, seq, false, {}} : await_sequence(seq);
  }

  CommandOutcome move_l(const kin::Pose6& target, double speed, double accel,
                        bool async = false) {
    std::int32_t seq = send_command(2, target.to_array(), speed, accel, async);
    return async ? CommandOutcome{true, 0, seq, false, {}} : await_sequence(seq);
  }

  void servo_j(const std::array<double, 6>& q_target) {
    send_command(3, q_target, 0.0, 0.0, true);
  }

  CommandOutcome stop_j(double decel) {
    std::int32_t seq = send_command(4, {}, decel, 0.0, false);
    return await_sequence(seq);
  }

  CommandOutcome zero_ft_sensor() {
    std::int32_t seq = send_command(5, {}, 0.0, 0.0, false);
    return await_sequence(seq);
  }

  CommandOutcome move_until_contact(const std::array<double, 6>& twist, bool async = false) {
    std::int32_t seq = send_command(6, twist, 0.0, 0.0, async);
    if (async) return CommandOutcome{true, 0, seq, false, {}};
    CommandOutcome out = await_sequence(seq);
    out.contact = out.state.int_registers.count("output_int_register_2")
                      ? out.state.int_registers.at("output_int_register_2") != 0
                      : false;
    return out;
  }

  // Non-blocking status of an async sequence: 0 pending, 1 done, -1 failed.
  int poll_sequence(std::int32_t seq, std::int32_t* error_code = nullptr) {
    pump();
    if (!last_) return 0;
    auto done = last_->int_registers.find("output_int_register_0");
    if (done != last_->int_registers.end() && done->second == seq) return 1;
    auto errseq = last_->int_registers.find("output_int_register_3");
    if (errseq != last_->int_registers.end() && errseq->second == seq) {
      if (error_code) *error_code = last_->int_registers.at("output_int_register_1");
      return -1;
    }
    return 0;
  }

  // Awaits completion of an async command sequence.
  CommandOutcome await_sequence(std::int32_t seq, long timeout_ticks = -1) {
    if (timeout_ticks < 0) timeout_ticks = opts_.default_timeout_ticks;
    while (timeout_ticks-- > 0) {
      pump();
      if (last_) {
        auto done = last_->int_registers.find("output_int_register_0");
        if (done != last_->int_registers.end() && done->second == seq) {
          CommandOutcome out;
          out.ok = true;
          out.sequence = seq;
          out.state = *last_;
          return out;
        }
        auto errseq = last_->int_registers.find("output_int_register_3");
        if (errseq != last_->int_registers.end() && errseq->second == seq) {
          CommandOutcome out;
          out.ok = false;
          out.sequence = seq;
          out.error_code = last_->int_registers.at("output_int_register_1");
          out.state = *last_;
          return out;
        }
      }
      wait();
    }
    throw TimeoutError("timed out waiting for command completion");
  }

  void set_standard_digital_out(int pin, bool value) {
    if (pin < 0 || pin > 7) throw std::out_of_range("digital out pin must be 0..7");
    std::uint64_t mask = 1ULL << pin;
    std::uint64_t bits = value ? mask : 0ULL;
    send_frame(wire::PacketType::DataPackage,
               wire::pack_values(io_recipe_, {mask, bits}));
  }

  // ---- extensions ----

  struct ExtensionResult {
    std::map<std::string, double> values;  // by output register field name
  };

  // Runs the trigger handshake: parameter writes go out strictly before the
  // trigger message; results are read from the completion snapshot.
  ExtensionResult trigger_extension(int id, const std::map<std::string, double>& pre_writes,
                                    const std::vector<std::string>& result_reads,
                                    long timeout_ticks = 200000) {
    if (in_flight_trigger_) throw ClientError("extension trigger already in flight");
    in_flight_trigger_ = true;
    struct Reset {
      bool* flag;
      ~Reset() { *flag = false; }
    } reset{&in_flight_trigger_};

    if (!pre_writes.empty()) {
      std::vector<wire::Value> vals;
      for (const auto& f : param_recipe_.fields) {
        auto it = pre_writes.find(f.name);
        double v = it == pre_writes.end() ? param_cache_[f.name] : it->second;
        param_cache_[f.name] = v;
        if (f.kind == wire::FieldKind::Int32)
          vals.emplace_back(static_cast<std::int32_t>(std::llround(v)));
        else
          vals.emplace_back(v);
      }
      for (const auto& [name, value] : pre_writes)
        if (!std::count_if(param_recipe_.fields.begin(), param_recipe_.fields.end(),
                           [&](const wire::FieldSpec& f) { return f.name == name; }))
          throw ClientError("register not in extension parameter recipe: " + name);
      send_frame(wire::PacketType::DataPackage, wire::pack_values(param_recipe_, vals));
    }

    send_trigger(double(id));

    long budget = timeout_ticks;
    while (budget-- > 0) {
      pump();
      if (last_) {
        auto it = last_->double_registers.find("output_double_register_18");
        if (it != last_->double_registers.end() && it->second == double(id)) break;
      }
      wait();
      if (budget == 0) throw TimeoutError("timed out waiting for extension completion");
    }

    ExtensionResult out;
    for (const auto& name : result_reads) {
      if (auto it = last_->int_registers.find(name); it != last_->int_registers.end())
        out.values[name] = double(it->second);
      else if (auto dit = last_->double_registers.find(name); dit != last_->double_registers.end())
        out.values[name] = dit->second;
      else
        throw ClientError("result register not in poll recipe: " + name);
    }

    // acknowledge: clear the trigger and wait for the controller to clear
    // its completion register
    send_trigger(0.0);
    budget = timeout_ticks;
    while (budget-- > 0) {
      pump();
      auto it = last_->double_registers.find("output_double_register_18");
      if (it != last_->double_registers.end() && it->second == 0.0) return out;
      wait();
    }
    throw TimeoutError("timed out waiting for extension acknowledge");
  }

  // Uploads (replaces) the control script. Returns installed extension IDs.
  std::vector<int> upload_script(const std::string& text) {
    wire::Bytes p(text.begin(), text.end());
    send_frame(wire::PacketType::ControlScript, p);
    auto f = wait_reply(wire::PacketType::ControlScript);
    if (f.payload.empty()) throw ClientError("empty script reply");
    std::string body(f.payload.begin() + 1, f.payload.end());
    if (f.payload[0] != 1) {
      if (body.find("already in use") != std::string::npos) throw ExclusivityRefused();
      throw ClientError("script rejected: " + body);
    }
    extension_ids_.clear();
    std::string cur;
    for (char c : body + ",") {
      if (c == ',') {
        if (!cur.empty()) extension_ids_.push_back(std::stoi(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    return extension_ids_;
  }

 protected:
  void on_data(const wire::Frame& f) override {
    auto values = wire::unpack_values(poll_recipe_, f.payload);
    RobotSnapshot s;
    for (std::size_t i = 0; i < poll_recipe_.fields.size(); ++i)
      detail::apply_field(s, poll_recipe_.fields[i].name, values[i]);
    last_ = s;
  }

 private:
  std::int32_t send_command(std::int32_t opcode, const std::array<double, 6>& params,
                            double speed, double accel, bool async) {
    std::int32_t seq = next_seq_++;
    std::vector<wire::Value> vals;
    vals.emplace_back(opcode);
    vals.emplace_back(seq);
    vals.emplace_back(std::int32_t(async ? 1 : 0));
    for (double p : params) vals.emplace_back(p);
    vals.emplace_back(speed);
    vals.emplace_back(accel);
    send_frame(wire::PacketType::DataPackage, wire::pack_values(cmd_recipe_, vals));
    return seq;
  }

  void send_trigger(double value) {
    send_frame(wire::PacketType::DataPackage,
               wire::pack_values(trigger_recipe_, {value}));
  }

  Options opts_;
  wire::Recipe cmd_recipe_, param_recipe_, trigger_recipe_, io_recipe_, poll_recipe_;
  std::vector<std::string> poll_recipe_names_;
  std::optional<RobotSnapshot> last_;
  std::map<std::string, double> param_cache_;
  std::vector<int> extension_ids_;
  std::int32_t next_seq_ = 1;
  bool in_flight_trigger_ = false;
};

// ---------------------------------------------------------------------------

// Line-oriented dashboard link; works over TCP or directly against an
// in-process controller.
class DashboardSession {
 public:
  using LineFn = std::function<std::string(const std::string&)>;

  explicit DashboardSession(LineFn fn) : fn_(std::move(fn)) {}

  static DashboardSession in_process(std::shared_ptr<sim::Controller> ctrl) {
    return DashboardSession(
        [ctrl](const std::string& line) { return ctrl->dashboard_handle_line(line); });
  }

  static DashboardSession over_tcp(const std::string& host, int port) {
    auto sock = std::make_shared<net::TcpSocket>(net::TcpSocket::connect_to(host, port));
    return DashboardSession([sock](const std::string& line) {
      std::string msg = line + "\n";
      sock->send_all(msg.data(), msg.size());
      std::string reply;
      char c;
      while (sock->recv_some(&c, 1) == 1) {
        if (c == '\n') break;
        reply += c;
      }
      return reply;
    });
  }

  std::string send(const std::string& line) { return fn_(line); }

 private:
  LineFn fn_;
};

}  // namespace urstack::client

#endif  // UR_STACK_CLIENT_SESSION_HPP
