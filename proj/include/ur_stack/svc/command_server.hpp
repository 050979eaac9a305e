#ifndef UR_STACK_SVC_COMMAND_SERVER_HPP
#define UR_STACK_SVC_COMMAND_SERVER_HPP

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ur_stack/client/session.hpp"
#include "ur_stack/motion/trajectory.hpp"
#include "ur_stack/script/parser.hpp"
#include "ur_stack/svc/jsonl.hpp"
#include "ur_stack/svc/manifest.hpp"

namespace urstack::svc {

// Hosts the command, extension, and dashboard plugins behind action
// endpoints. All plugins share ONE ControlSession; goals run strictly FIFO
// on a single worker. Cancel preempts the active goal with a stop_j.
class CommandServer {
 public:
  struct Options {
    std::vector<double> v_max;  // joint limits used by execute_trajectory
    std::vector<double> a_max;
    double dt = 0.002;           // controller period
    double cancel_decel = 2.0;   // stop_j rate used for goal cancellation
    long wait_budget = 600000;   // poll iterations before a goal times out
  };

  CommandServer(PluginManifest manifest, std::shared_ptr<client::Transport> transport,
                client::DashboardSession dashboard, Options opts)
      : manifest_(std::move(manifest)), dashboard_(std::move(dashboard)), opts_(std::move(opts)) {
    client::ControlSession::Options sess_opts;
    sess_opts.control_script = build_control_script();
    session_ = std::make_unique<client::ControlSession>(std::move(transport),
                                                        std::move(sess_opts));
    verify_extension_ids();
    worker_ = std::thread([this] { worker_loop(); });
  }

  ~CommandServer() {
    {
      std::lock_guard lk(mu_);
      stopping_ = true;
      if (active_cancel_) *active_cancel_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  // Tick source for waits. In virtual-time setups install a hook that ticks
  // the controller; the default sleeps one control period.
  void set_wait_hook(std::function<void()> hook) {
    session_->set_wait_hook(hook);
    wait_hook_ = std::move(hook);
  }

  std::vector<std::string> actions() const {
    std::vector<std::string> out;
    for (const auto& e : manifest_.entries) out.push_back(e.name);
    return out;
  }

  client::ControlSession& session() { return *session_; }

  // Routes one ActionEnvelope. Returns the direct reply (cancel acks and
  // protocol errors); goal results arrive through the sink.
  Json handle(const Json& env, const std::shared_ptr<Sink>& sink) {
    if (!env.contains("id") || !env["id"].is_number_integer())
      return Json{{"error", "envelope needs an integer id"}};
    int id = env["id"];
    std::string phase = env.value("phase", "");
    std::string action = env.value("action", "");

    if (phase == "goal") {
      if (manifest_.find(action) == nullptr) {
        return Json{{"id", id},
                    {"phase", "result"},
                    {"action", action},
                    {"body", {{"ok", false}, {"error", "unknown action: " + action}}}};
      }
      std::lock_guard lk(mu_);
      if (ids_seen_.count(id)) return Json{{"error", "goal id already used"}};
      ids_seen_.insert(id);
      Goal g;
      g.id = id;
      g.action = action;
      g.body = env.value("body", Json::object());
      g.sink = sink;
      g.cancel = std::make_shared<std::atomic<bool>>(false);
      cancel_flags_[id] = g.cancel;
      queue_.push_back(std::move(g));
      cv_.notify_all();
      return Json();
    }

    if (phase == "cancel") {
      std::lock_guard lk(mu_);
      bool pending = cancel_flags_.count(id) != 0;
      if (pending) *cancel_flags_[id] = true;
      return Json{{"id", id},
                  {"phase", "cancel"},
                  {"action", action},
                  {"body", {{"noop", !pending}}}};
    }

    return Json{{"error", "client may only send goal or cancel phases"}};
  }

  int active_goal_id() const {
    std::lock_guard lk(mu_);
    return active_id_;
  }

  // Blocks until the queue is drained and no goal is running.
  void wait_idle() {
    std::unique_lock lk(mu_);
    idle_cv_.wait(lk, [&] { return queue_.empty() && active_id_ == -1; });
  }

 private:
  struct Goal {
    int id = 0;
    std::string action;
    Json body;
    std::shared_ptr<Sink> sink;
    std::shared_ptr<std::atomic<bool>> cancel;
  };

  // ---- script assembly -----------------------------------------------------

  static std::string gripper_preamble() {
    return "def sg_grip(width):\n"
           "  if width > 100:\n"
           "    width = 100\n"
           "  elif width < 0:\n"
           "    width = 0\n"
           "  end\n"
           "  sleep(0.01)\n"
           "  return width\n"
           "end\n";
  }

  static std::string gripper_snippet(int id) {
    return "def ext_" + std::to_string(id) +
           "():\n"
           "  w = read_input_integer_register(19)\n"
           "  write_output_integer_register(19, sg_grip(w))\n"
           "end\n";
  }

  std::string build_control_script() const {
    std::string script;
    for (const auto& e : manifest_.entries) {
      std::string part;
      switch (e.kind) {
        case PluginKind::Extension:
          if (e.name == "gripper_grip") {
            part = gripper_preamble() + gripper_snippet(e.extension_id);
          } else if (e.parameters.contains("snippet") && e.parameters.contains("function")) {
            part = std::string(e.parameters["snippet"]) + "def ext_" +
                   std::to_string(e.extension_id) + "():\n  " +
                   std::string(e.parameters["function"]) + "()\nend\n";
          } else {
            throw ManifestError("plugin " + e.name +
                                ": extension needs snippet and function parameters");
          }
          break;
        case PluginKind::Command:
          if (!known_command(e.name)) throw ManifestError("unknown command plugin: " + e.name);
          break;
        case PluginKind::Dashboard:
          if (!known_dashboard(e.name) && !e.parameters.contains("line"))
            throw ManifestError("unknown dashboard plugin: " + e.name);
          break;
      }
      if (part.empty()) continue;
      try {
        script::parse_source(part);
      } catch (const script::ScriptError& err) {
        throw ManifestError("plugin " + e.name + ": snippet rejected: " + err.what());
      }
      script += part;
    }
    return script;
  }

  static bool known_command(const std::string& name) {
    static const std::set<std::string> k = {"move_j",       "move_l",
                                            "move_until_contact", "set_digital_out",
                                            "execute_trajectory", "move_down_until_force"};
    return k.count(name) != 0;
  }

  static bool known_dashboard(const std::string& name) {
    static const std::set<std::string> k = {"dashboard_play", "dashboard_stop",
                                            "dashboard_query"};
    return k.count(name) != 0;
  }

  void verify_extension_ids() const {
    for (const auto& e : manifest_.entries) {
      if (e.kind != PluginKind::Extension) continue;
      const auto& installed = session_->installed_extensions();
      if (std::find(installed.begin(), installed.end(), e.extension_id) == installed.end())
        throw ManifestError("plugin " + e.name + ": controller did not install extension " +
                            std::to_string(e.extension_id));
    }
  }

  // ---- worker --------------------------------------------------------------

  void worker_loop() {
    while (true) {
      Goal g;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        g = std::move(queue_.front());
        queue_.pop_front();
        active_id_ = g.id;
        active_cancel_ = g.cancel;
      }
      Json result;
      if (*g.cancel) {
        result = Json{{"ok", false}, {"cancelled", true}};
      } else {
        try {
          result = run_goal(g);
        } catch (const std::exception& e) {
          result = Json{{"ok", false}, {"error", e.what()}};
        }
      }
      g.sink->push(Json{
          {"id", g.id}, {"phase", "result"}, {"action", g.action}, {"body", result}});
      {
        std::lock_guard lk(mu_);
        active_id_ = -1;
        active_cancel_.reset();
        cancel_flags_.erase(g.id);
      }
      idle_cv_.notify_all();
    }
  }

  void wait() {
    if (wait_hook_)
      wait_hook_();
    else
      std::this_thread::sleep_for(std::chrono::duration<double>(opts_.dt));
  }

  void feedback(const Goal& g, Json body) {
    g.sink->push(Json{
        {"id", g.id}, {"phase", "feedback"}, {"action", g.action}, {"body", std::move(body)}});
  }

  Json run_goal(const Goal& g) {
    if (g.action == "move_j") return run_move_j(g);
    if (g.action == "move_l") return run_move_l(g);
    if (g.action == "move_until_contact") return run_move_until_contact(g);
    if (g.action == "set_digital_out") return run_set_digital_out(g);
    if (g.action == "execute_trajectory") return run_execute_trajectory(g);
    if (g.action == "move_down_until_force") return run_move_down_until_force(g);
    if (g.action == "gripper_grip") return run_gripper_grip(g);
    const PluginEntry* e = manifest_.find(g.action);
    if (e && e->kind == PluginKind::Dashboard) return run_dashboard(g, *e);
    return Json{{"ok", false}, {"error", "unhandled action: " + g.action}};
  }

  // Polls an async command to completion, honoring cancellation.
  Json await_cancellable(std::int32_t seq, const Goal& g) {
    long budget = opts_.wait_budget;
    while (budget-- > 0) {
      if (*g.cancel) {
        session_->stop_j(opts_.cancel_decel);
        return Json{{"ok", false}, {"cancelled", true}};
      }
      std::int32_t ec = 0;
      int st = session_->poll_sequence(seq, &ec);
      if (st == 1) return Json{{"ok", true}};
      if (st == -1) return Json{{"ok", false}, {"error_code", ec}};
      wait();
    }
    return Json{{"ok", false}, {"error", "goal timed out"}};
  }

  static std::array<double, 6> to_array6(const Json& arr, const char* what) {
    if (!arr.is_array() || arr.size() > 6)
      throw std::invalid_argument(std::string(what) + " must be an array of up to 6 numbers");
    std::array<double, 6> out{};
    for (std::size_t i = 0; i < arr.size(); ++i) out[i] = arr[i];
    return out;
  }

  Json with_final_state(Json result) {
    auto snap = session_->latest();
    result["q"] = snap.q;
    result["tcp_pose"] = snap.tcp_pose.to_array();
    return result;
  }

  Json run_move_j(const Goal& g) {
    auto q = to_array6(g.body.at("q"), "q");
    auto started = session_->move_j(q, g.body.value("speed", 1.0), g.body.value("accel", 1.0),
                                    /*async=*/true);
    Json r = await_cancellable(started.sequence, g);
    return r.value("ok", false) ? with_final_state(r) : r;
  }

  Json run_move_l(const Goal& g) {
    auto pose = kin::Pose6::from_array(to_array6(g.body.at("pose"), "pose"));
    auto started = session_->move_l(pose, g.body.value("speed", 0.25),
                                    g.body.value("accel", 1.2), /*async=*/true);
    Json r = await_cancellable(started.sequence, g);
    return r.value("ok", false) ? with_final_state(r) : r;
  }

  Json run_move_until_contact(const Goal& g) {
    auto twist = to_array6(g.body.at("twist"), "twist");
    auto started = session_->move_until_contact(twist, /*async=*/true);
    Json r = await_cancellable(started.sequence, g);
    if (!r.value("ok", false)) return r;
    auto snap = session_->latest();
    bool contact = snap.int_registers.count("output_int_register_2") &&
                   snap.int_registers.at("output_int_register_2") != 0;
    r["contact"] = contact;
    return with_final_state(r);
  }

  Json run_set_digital_out(const Goal& g) {
    session_->set_standard_digital_out(g.body.at("pin").get<int>(),
                                       g.body.at("value").get<bool>());
    wait();
    return Json{{"ok", true}};
  }

  Json run_execute_trajectory(const Goal& g) {
    double v_scale = g.body.value("v_scale", 1.0);
    double a_scale = g.body.value("a_scale", 1.0);
    if (!(v_scale > 0.0 && v_scale <= 1.0 && a_scale > 0.0 && a_scale <= 1.0))
      throw std::invalid_argument("scales must be in (0, 1]");
    const auto& wp_json = g.body.at("waypoints");
    if (!wp_json.is_array() || wp_json.size() < 2)
      throw std::invalid_argument("waypoints needs at least 2 entries");
    std::size_t n = opts_.v_max.size();
    std::vector<motion::JointVector> wps;
    for (const auto& w : wp_json) {
      if (!w.is_array() || w.size() != n)
        throw std::invalid_argument("waypoint dimension mismatch");
      motion::JointVector q(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) q[static_cast<Eigen::Index>(i)] = w[i];
      wps.push_back(std::move(q));
    }
    std::vector<double> v(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = opts_.v_max[i] * v_scale;
      a[i] = opts_.a_max[i] * a_scale;
    }
    auto traj = motion::parameterize_path(wps, v, a, opts_.dt);

    double max_track = 0.0;
    std::size_t total = traj.points.size();
    for (std::size_t k = 1; k < total; ++k) {
      if (*g.cancel) {
        session_->stop_j(opts_.cancel_decel);
        return Json{{"ok", false}, {"cancelled", true}};
      }
      std::array<double, 6> t6{};
      for (std::size_t i = 0; i < n; ++i) t6[i] = traj.points[k][static_cast<Eigen::Index>(i)];
      session_->servo_j(t6);
      wait();
      auto snap = session_->latest();
      for (std::size_t i = 0; i < n; ++i)
        max_track = std::max(max_track,
                             std::abs(snap.q[i] - traj.points[k][static_cast<Eigen::Index>(i)]));
      if (k % 50 == 0)
        feedback(g, Json{{"progress", double(k) / double(total - 1)}});
    }
    wait();
    auto snap = session_->latest();
    double terminal = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      terminal = std::max(terminal,
                          std::abs(snap.q[i] - wps.back()[static_cast<Eigen::Index>(i)]));
    return Json{{"ok", true},
                {"duration", traj.duration()},
                {"max_tracking_error", max_track},
                {"terminal_error", terminal}};
  }

  // The guarded descent: bias the sensor, target one descent below the
  // current pose, then poll the flange-Z force while the linear move runs.
  // Off-axis forces never stop the motion.
  Json run_move_down_until_force(const Goal& g) {
    double threshold = g.body.value("threshold_n", 20.0);
    double speed = g.body.value("speed", 0.1);
    double accel = g.body.value("accel", 0.1);
    double decel = g.body.value("decel", 5.0);
    double descent = g.body.value("descent_m", 1.0);
    double poll_s = g.body.value("poll_s", 0.002);

    session_->zero_ft_sensor();
    auto pose = session_->latest().tcp_pose;
    pose.position.z() -= descent;
    auto started = session_->move_l(pose, speed, accel, /*async=*/true);

    int poll_ticks = std::max(1, static_cast<int>(std::lround(poll_s / opts_.dt)));
    long budget = opts_.wait_budget;
    while (budget-- > 0) {
      if (*g.cancel) {
        session_->stop_j(opts_.cancel_decel);
        return Json{{"ok", false}, {"cancelled", true}};
      }
      for (int i = 0; i < poll_ticks; ++i) wait();
      auto snap = session_->latest();
      if (std::abs(snap.tcp_force[2]) > threshold) {
        session_->stop_j(decel);
        auto after = session_->latest();
        return Json{{"ok", true},
                    {"contact", true},
                    {"wrench", snap.tcp_force},
                    {"pose", after.tcp_pose.to_array()}};
      }
      std::int32_t ec = 0;
      int st = session_->poll_sequence(started.sequence, &ec);
      if (st == 1)
        return Json{{"ok", true}, {"contact", false}, {"wrench", snap.tcp_force}};
      if (st == -1) return Json{{"ok", false}, {"error_code", ec}};
    }
    return Json{{"ok", false}, {"error", "goal timed out"}};
  }

  Json run_gripper_grip(const Goal& g) {
    const PluginEntry* e = manifest_.find(g.action);
    double width = g.body.value("width", 0.0);
    auto res = session_->trigger_extension(
        e->extension_id, {{"input_int_register_19", width}}, {"output_int_register_19"});
    return Json{{"ok", true}, {"achieved", res.values.at("output_int_register_19")}};
  }

  Json run_dashboard(const Goal& g, const PluginEntry& e) {
    std::string line;
    if (e.name == "dashboard_play") line = "play";
    else if (e.name == "dashboard_stop") line = "stop";
    else if (e.name == "dashboard_query") line = g.body.value("line", "running?");
    else line = e.parameters.value("line", "running?");
    return Json{{"ok", true}, {"reply", dashboard_.send(line)}};
  }

  PluginManifest manifest_;
  client::DashboardSession dashboard_;
  Options opts_;
  std::unique_ptr<client::ControlSession> session_;
  std::function<void()> wait_hook_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Goal> queue_;
  std::map<int, std::shared_ptr<std::atomic<bool>>> cancel_flags_;
  std::set<int> ids_seen_;
  int active_id_ = -1;
  std::shared_ptr<std::atomic<bool>> active_cancel_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace urstack::svc

#endif  // UR_STACK_SVC_COMMAND_SERVER_HPP
