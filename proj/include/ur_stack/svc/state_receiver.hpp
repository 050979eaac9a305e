#ifndef UR_STACK_SVC_STATE_RECEIVER_HPP
#define UR_STACK_SVC_STATE_RECEIVER_HPP

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ur_stack/client/session.hpp"
#include "ur_stack/svc/jsonl.hpp"

namespace urstack::svc {

// Periodically samples the controller over a receive-only session and
// fans the state out as topics; the latest sample stays available through
// query services. Any number of these can run against one controller.
class StateReceiver {
 public:
  StateReceiver(std::shared_ptr<client::Transport> transport, double frequency)
      : session_(std::make_unique<client::ReceiveSession>(
            std::move(transport), client::ReceiveSession::default_fields(), frequency)),
        frequency_(frequency) {}

  void set_wait_hook(std::function<void()> hook) { session_->set_wait_hook(std::move(hook)); }

  double frequency() const { return frequency_; }

  static std::vector<std::string> topics() {
    return {"joint_states", "tcp_pose", "wrench", "io_state", "fake_joint_states"};
  }

  static std::vector<std::string> services() {
    return {"get_joint_state", "get_tcp_pose", "get_wrench", "get_io_state",
            "pause_joint_updates"};
  }

  // One read-and-publish pass. Returns false when the controller has not
  // produced a sample yet.
  bool cycle() {
    client::RobotSnapshot snap;
    try {
      snap = session_->get_snapshot();
    } catch (const client::NoDataYet&) {
      return false;
    }

    std::vector<std::pair<std::string, Json>> out;
    {
      std::lock_guard lk(mu_);
      stamp_ = snap.timestamp;

      Json joints;
      if (paused_) {
        joints = fake_joints_ ? *fake_joints_ : frozen_joints_;
      } else {
        joints = joint_body(snap);
        frozen_joints_ = joints;
      }
      bodies_["joint_states"] = joints;
      bodies_["tcp_pose"] = Json{
          {"position", {snap.tcp_pose.position.x(), snap.tcp_pose.position.y(),
                        snap.tcp_pose.position.z()}},
          {"rotation", {snap.tcp_pose.rotation.x(), snap.tcp_pose.rotation.y(),
                        snap.tcp_pose.rotation.z()}}};
      bodies_["wrench"] = Json{
          {"force", {snap.tcp_force[0], snap.tcp_force[1], snap.tcp_force[2]}},
          {"torque", {snap.tcp_force[3], snap.tcp_force[4], snap.tcp_force[5]}}};
      bodies_["io_state"] =
          Json{{"digital_in", snap.digital_in}, {"digital_out", snap.digital_out}};

      for (const auto& [topic, body] : bodies_)
        out.emplace_back(topic, Json{{"topic", topic}, {"stamp", stamp_}, {"body", body}});
      have_data_ = true;
    }

    for (const auto& [topic, msg] : out) {
      std::lock_guard lk(mu_);
      auto it = subscribers_.find(topic);
      if (it == subscribers_.end()) continue;
      for (const auto& s : it->second) s->push(msg);
    }
    return true;
  }

  // Request router shared by the TCP front end and in-process callers.
  Json handle(const Json& req, const std::shared_ptr<Sink>& sink) {
    if (req.contains("subscribe")) {
      std::string topic = req["subscribe"];
      auto known = topics();
      if (std::find(known.begin(), known.end(), topic) == known.end())
        return Json{{"error", "unknown topic: " + topic}};
      std::lock_guard lk(mu_);
      subscribers_[topic].push_back(sink);
      return Json{{"subscribed", topic}};
    }
    if (req.contains("publish")) {
      std::string topic = req["publish"];
      if (topic != "fake_joint_states")
        return Json{{"error", "topic is not publishable: " + topic}};
      std::lock_guard lk(mu_);
      Json body = req.value("body", Json::object());
      if (!body.contains("position") || !body["position"].is_array())
        return Json{{"error", "fake_joint_states body needs a position array"}};
      Json joints = frozen_joints_.is_null() ? Json::object() : frozen_joints_;
      joints["position"] = body["position"];
      joints["velocity"] = std::vector<double>(body["position"].size(), 0.0);
      if (!joints.contains("name")) joints["name"] = default_names(body["position"].size());
      fake_joints_ = joints;
      return Json{{"result", "ok"}};
    }
    if (req.contains("service")) return handle_service(req);
    return Json{{"error", "request needs subscribe, publish, or service"}};
  }

  // Drops every subscription held by a disconnected sink.
  void drop_sink(const std::shared_ptr<Sink>& sink) {
    std::lock_guard lk(mu_);
    for (auto& [topic, sinks] : subscribers_)
      std::erase_if(sinks, [&](const std::shared_ptr<Sink>& s) { return s == sink; });
  }

  bool paused() const {
    std::lock_guard lk(mu_);
    return paused_;
  }

 private:
  static Json joint_body(const client::RobotSnapshot& snap) {
    Json j;
    j["name"] = default_names(6);
    j["position"] = snap.q;
    j["velocity"] = snap.qd;
    return j;
  }

  static std::vector<std::string> default_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("joint_" + std::to_string(i));
    return names;
  }

  Json handle_service(const Json& req) {
    std::string name = req["service"];
    static const std::map<std::string, std::string> queries = {
        {"get_joint_state", "joint_states"},
        {"get_tcp_pose", "tcp_pose"},
        {"get_wrench", "wrench"},
        {"get_io_state", "io_state"}};

    std::lock_guard lk(mu_);
    if (auto it = queries.find(name); it != queries.end()) {
      if (!have_data_) return Json{{"error", "no data yet"}};
      return Json{{"result", {{"stamp", stamp_}, {"body", bodies_.at(it->second)}}}};
    }
    if (name == "pause_joint_updates") {
      Json args = req.value("args", Json::object());
      bool pause = args.value("pause", true);
      if (pause && !paused_) fake_joints_.reset();
      paused_ = pause;
      if (!pause) fake_joints_.reset();
      return Json{{"result", {{"paused", paused_}}}};
    }
    return Json{{"error", "unknown service: " + name}};
  }

  std::unique_ptr<client::ReceiveSession> session_;
  double frequency_;

  mutable std::mutex mu_;
  bool have_data_ = false;
  double stamp_ = 0.0;
  std::map<std::string, Json> bodies_;
  Json frozen_joints_;
  std::optional<Json> fake_joints_;
  bool paused_ = false;
  std::map<std::string, std::vector<std::shared_ptr<Sink>>> subscribers_;
};

}  // namespace urstack::svc

#endif  // UR_STACK_SVC_STATE_RECEIVER_HPP
