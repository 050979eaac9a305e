#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ur_stack/client/session.hpp"
#include "ur_stack/client/transport.hpp"
#include "ur_stack/kin/chain.hpp"
#include "ur_stack/sim/config.hpp"
#include "ur_stack/sim/controller.hpp"
#include "ur_stack/sim/rtde_server.hpp"
#include "ur_stack/svc/command_server.hpp"
#include "ur_stack/svc/jsonl.hpp"
#include "ur_stack/svc/manifest.hpp"
#include "ur_stack/svc/state_receiver.hpp"

using namespace urstack;
using svc::Json;

namespace {

// 0 ok, 1 error result, 2 config error, 3 transport failure
constexpr int kOk = 0;
constexpr int kErrResult = 1;
constexpr int kErrConfig = 2;
constexpr int kErrTransport = 3;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

struct Address {
  std::string host = "127.0.0.1";
  int port = 0;
};

Address parse_address(const std::string& s, int default_port) {
  Address a;
  a.port = default_port;
  auto colon = s.rfind(':');
  if (colon == std::string::npos) {
    if (!s.empty()) a.host = s;
  } else {
    if (colon > 0) a.host = s.substr(0, colon);
    a.port = std::stoi(s.substr(colon + 1));
  }
  return a;
}

std::string default_robot() {
  const char* env = std::getenv("UR_STACK_ROBOT");
  return env ? env : "127.0.0.1:30004";
}

const char* kBuiltinManifest = R"({"plugins": [
  {"name": "move_j", "kind": "command"},
  {"name": "move_l", "kind": "command"},
  {"name": "move_until_contact", "kind": "command"},
  {"name": "set_digital_out", "kind": "command"},
  {"name": "execute_trajectory", "kind": "command"},
  {"name": "move_down_until_force", "kind": "command"},
  {"name": "gripper_grip", "kind": "extension"},
  {"name": "dashboard_play", "kind": "dashboard"},
  {"name": "dashboard_stop", "kind": "dashboard"},
  {"name": "dashboard_query", "kind": "dashboard"}
]})";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

svc::CommandServer::Options options_for_chain(const kin::Chain& chain, double dt) {
  svc::CommandServer::Options opts;
  for (const auto& j : chain.joints) {
    opts.v_max.push_back(j.v_max);
    opts.a_max.push_back(j.a_max);
  }
  opts.dt = dt;
  return opts;
}

// ---------------------------------------------------------------------------
// sim

struct SimArgs {
  int port = 30004;
  int dashboard_port = 29999;
  double freq = 500.0;
  std::string chain = "chains/six_dof_example.cfg";
  double plane_z = 0.0;
  double stiffness = 0.0;
  std::vector<std::string> injections;
  bool virtual_time = false;
};

int run_sim(const SimArgs& args) {
  sim::SimConfig cfg;
  cfg.chain = kin::load_chain(args.chain);
  cfg.frequency = args.freq;
  cfg.plane_z = args.plane_z;
  cfg.stiffness = args.stiffness;
  for (const auto& s : args.injections) cfg.injections.push_back(sim::parse_injection(s));
  cfg.validate();

  auto ctrl = std::make_shared<sim::Controller>(cfg);
  sim::RtdeServer server(ctrl, args.port, args.dashboard_port);
  server.start(/*run_clock=*/!args.virtual_time);
  std::cout << "sim listening on " << server.rtde_port() << " (dashboard "
            << server.dashboard_port() << ") at " << args.freq << " Hz" << std::endl;

  if (args.virtual_time) {
    // free-running clock: ticks as fast as the host allows
    while (!g_stop) ctrl->tick();
  } else {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  return kOk;
}

// ---------------------------------------------------------------------------
// state-receiver

int run_state_receiver(const std::string& robot, int port, double freq) {
  Address addr = parse_address(robot, 30004);
  svc::StateReceiver recv(std::make_shared<client::TcpTransport>(addr.host, addr.port), freq);
  svc::JsonlTcpServer server(
      port,
      [&](const Json& req, std::shared_ptr<svc::Sink> sink) { return recv.handle(req, sink); },
      [&](std::shared_ptr<svc::Sink> sink) { recv.drop_sink(sink); });
  std::cout << "state-receiver serving on " << server.port() << " at " << freq << " Hz" << std::endl;

  auto period = std::chrono::duration<double>(1.0 / freq);
  while (!g_stop) {
    recv.cycle();
    std::this_thread::sleep_for(period);
  }
  server.stop();
  return kOk;
}

// ---------------------------------------------------------------------------
// command-server

int run_command_server(const std::string& robot, int port, const std::string& plugins,
                       const std::string& chain_file, int dashboard_port, double freq) {
  Address addr = parse_address(robot, 30004);
  auto manifest = plugins.empty() ? svc::PluginManifest::parse_text(kBuiltinManifest)
                                  : svc::PluginManifest::load(plugins);
  kin::Chain chain = kin::load_chain(chain_file);
  svc::CommandServer server(
      manifest, std::make_shared<client::TcpTransport>(addr.host, addr.port),
      client::DashboardSession::over_tcp(addr.host, dashboard_port),
      options_for_chain(chain, 1.0 / freq));

  svc::JsonlTcpServer front(
      port, [&](const Json& req, std::shared_ptr<svc::Sink> sink) -> Json {
        if (req.contains("phase")) return server.handle(req, sink);
        if (req.contains("actions")) return Json{{"actions", server.actions()}};
        return Json{{"error", "expected an action envelope"}};
      });
  std::cout << "command-server serving on " << front.port() << " with "
            << server.actions().size() << " actions" << std::endl;

  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  front.stop();
  return kOk;
}

// ---------------------------------------------------------------------------
// send

int run_send(const std::string& server, const std::string& action, const std::string& goal) {
  Json body;
  try {
    body = goal.empty() ? Json::object() : Json::parse(goal);
  } catch (const Json::exception& e) {
    std::cerr << "bad goal JSON: " << e.what() << "\n";
    return kErrConfig;
  }
  Address addr = parse_address(server, 24002);
  svc::JsonlClient cli(addr.host, addr.port);
  // goal ids are server-wide; derive a fresh one per invocation
  int id = static_cast<int>(
      std::chrono::steady_clock::now().time_since_epoch().count() & 0x3fffffff);
  cli.send(Json{{"id", id}, {"phase", "goal"}, {"action", action}, {"body", body}});
  while (true) {
    auto m = cli.next(std::chrono::minutes(10));
    if (!m) {
      std::cerr << "connection lost before result\n";
      return kErrTransport;
    }
    if (m->contains("error")) {
      std::cerr << "error: " << (*m)["error"] << "\n";
      return kErrResult;
    }
    std::cout << m->dump() << "\n";
    if ((*m)["phase"] == "result")
      return (*m)["body"].value("ok", false) ? kOk : kErrResult;
  }
}

// ---------------------------------------------------------------------------
// record

struct TopicLayout {
  std::vector<std::string> columns;
  std::function<std::vector<double>(const Json&)> extract;
};

std::map<std::string, TopicLayout> topic_layouts() {
  std::map<std::string, TopicLayout> m;
  m["wrench"] = {{"fx", "fy", "fz", "tx", "ty", "tz"}, [](const Json& b) {
                   std::vector<double> v;
                   for (int i = 0; i < 3; ++i) v.push_back(b["force"][std::size_t(i)]);
                   for (int i = 0; i < 3; ++i) v.push_back(b["torque"][std::size_t(i)]);
                   return v;
                 }};
  m["joint_states"] = {{"q0", "q1", "q2", "q3", "q4", "q5", "qd0", "qd1", "qd2", "qd3", "qd4",
                        "qd5"},
                       [](const Json& b) {
                         std::vector<double> v;
                         for (const auto& x : b["position"]) v.push_back(x);
                         for (const auto& x : b["velocity"]) v.push_back(x);
                         v.resize(12, 0.0);
                         return v;
                       }};
  m["tcp_pose"] = {{"px", "py", "pz", "rx", "ry", "rz"}, [](const Json& b) {
                     std::vector<double> v;
                     for (const auto& x : b["position"]) v.push_back(x);
                     for (const auto& x : b["rotation"]) v.push_back(x);
                     return v;
                   }};
  m["io_state"] = {{"digital_in", "digital_out"}, [](const Json& b) {
                     return std::vector<double>{double(b["digital_in"]),
                                                double(b["digital_out"])};
                   }};
  return m;
}

using Trace = std::vector<std::pair<double, std::vector<double>>>;

// Index of the sample whose stamp is nearest to t.
std::size_t nearest(const Trace& trace, double t) {
  std::size_t best = 0;
  double best_d = std::abs(trace[0].first - t);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    double d = std::abs(trace[i].first - t);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

int write_merged_csv(const std::string& path, const std::vector<std::string>& topics,
                     const std::map<std::string, TopicLayout>& layouts,
                     const std::map<std::string, Trace>& traces) {
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    return kErrConfig;
  }
  out << "# rows merged on nearest stamp across topics\n";
  out << "stamp";
  for (const auto& t : topics)
    for (const auto& c : layouts.at(t).columns) out << "," << c;
  out << "\n";

  const Trace& base = traces.at(topics.front());
  for (const auto& [stamp, base_vals] : base) {
    out << fmt(stamp);
    for (const auto& t : topics) {
      const std::vector<double>* vals = &base_vals;
      if (t != topics.front()) {
        const Trace& tr = traces.at(t);
        if (tr.empty()) {
          for (std::size_t i = 0; i < layouts.at(t).columns.size(); ++i) out << ",";
          continue;
        }
        vals = &tr[nearest(tr, stamp)].second;
      }
      for (double v : *vals) out << "," << fmt(v);
    }
    out << "\n";
  }
  return kOk;
}

int run_record(const std::string& server, const std::vector<std::string>& topics,
               const std::string& csv, double duration) {
  auto layouts = topic_layouts();
  for (const auto& t : topics) {
    if (!layouts.count(t)) {
      std::cerr << "unknown topic: " << t << "\n";
      return kErrConfig;
    }
  }
  if (topics.empty()) {
    std::cerr << "need at least one topic\n";
    return kErrConfig;
  }

  Address addr = parse_address(server, 24001);
  svc::JsonlClient cli(addr.host, addr.port);
  for (const auto& t : topics) cli.send(Json{{"subscribe", t}});

  std::map<std::string, Trace> traces;
  for (const auto& t : topics) traces[t] = {};
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(duration));
  while (std::chrono::steady_clock::now() < deadline) {
    auto m = cli.next(std::chrono::milliseconds(200));
    if (!m) continue;
    if (!m->contains("topic")) continue;
    std::string t = (*m)["topic"];
    if (!traces.count(t)) continue;
    traces[t].emplace_back(double((*m)["stamp"]), layouts[t].extract((*m)["body"]));
  }
  if (traces[topics.front()].empty()) {
    std::cerr << "no samples received\n";
    return kErrResult;
  }
  return write_merged_csv(csv, topics, layouts, traces);
}

// ---------------------------------------------------------------------------
// demo-contact

int run_demo_contact(const std::string& out_path, const std::string& chain_file,
                     double stiffness) {
  sim::SimConfig cfg;
  cfg.chain = kin::load_chain(chain_file);
  cfg.plane_z = 0.2;
  cfg.stiffness = stiffness;
  cfg.injections.push_back({1.0, 1.2, {15.0, 0, 0, 0, 0, 0}});
  cfg.injections.push_back({2.0, 2.2, {15.0, 0, 0, 0, 0, 0}});

  auto ctrl = std::make_shared<sim::Controller>(cfg);
  svc::CommandServer server(svc::PluginManifest::parse_text(kBuiltinManifest),
                            std::make_shared<client::LoopbackTransport>(ctrl),
                            client::DashboardSession::in_process(ctrl),
                            options_for_chain(cfg.chain, ctrl->dt()));

  std::vector<std::string> rows;
  auto record = [&] {
    auto w = ctrl->reported_wrench();
    auto qd = ctrl->qd();
    std::string row = fmt(ctrl->sim_time());
    for (double v : w) row += "," + fmt(v);
    for (Eigen::Index i = 0; i < qd.size(); ++i) row += "," + fmt(qd[i]);
    rows.push_back(std::move(row));
  };
  server.set_wait_hook([&] {
    ctrl->tick();
    record();
  });

  auto sink = std::make_shared<svc::QueueSink>();
  server.handle(Json{{"id", 1},
                     {"phase", "goal"},
                     {"action", "move_down_until_force"},
                     {"body", Json::object()}},
                sink);
  Json result;
  while (true) {
    auto m = sink->pop(std::chrono::minutes(5));
    if (!m) {
      std::cerr << "demo goal did not finish\n";
      return kErrResult;
    }
    if ((*m)["phase"] == "result") {
      result = (*m)["body"];
      break;
    }
  }
  // settle tail so the trace shows the stopped state
  for (int i = 0; i < 50; ++i) {
    ctrl->tick();
    record();
  }

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return kErrConfig;
  }
  out << "# guarded-descent demo trace (virtual time, deterministic)\n";
  out << "stamp,fx,fy,fz,tx,ty,tz";
  for (Eigen::Index i = 0; i < ctrl->qd().size(); ++i) out << ",qd" << i;
  out << "\n";
  for (const auto& r : rows) out << r << "\n";

  std::cout << "result: " << result.dump() << "\n";
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  if (!result.value("ok", false)) return kErrResult;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();

  CLI::App app{"hardware-free UR-style robot control stack"};
  app.require_subcommand(1);

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand("sim", "run the simulated controller");
  sim_cmd->add_option("--port", sim_args.port, "register-protocol port");
  sim_cmd->add_option("--dashboard-port", sim_args.dashboard_port, "dashboard port");
  sim_cmd->add_option("--freq", sim_args.freq, "control frequency [Hz]");
  sim_cmd->add_option("--chain", sim_args.chain, "chain config file");
  sim_cmd->add_option("--plane-z", sim_args.plane_z, "contact plane height [m]");
  sim_cmd->add_option("--stiffness", sim_args.stiffness, "contact stiffness [N/m]");
  sim_cmd->add_option("--inject", sim_args.injections,
                      "wrench injection 't0,t1,fx,fy,fz,tx,ty,tz' (repeatable)");
  sim_cmd->add_flag("--virtual-time", sim_args.virtual_time,
                    "free-run the clock instead of wall pacing");

  std::string robot = default_robot();
  int sr_port = 24001;
  double sr_freq = 125.0;
  auto* sr_cmd = app.add_subcommand("state-receiver", "stream controller state as topics");
  sr_cmd->add_option("--robot", robot, "controller address host:port");
  sr_cmd->add_option("--port", sr_port, "listen port");
  sr_cmd->add_option("--freq", sr_freq, "sampling frequency [Hz]");

  std::string cs_robot = default_robot();
  int cs_port = 24002;
  int cs_dash_port = 29999;
  double cs_freq = 500.0;
  std::string plugins_file;
  std::string cs_chain = "chains/six_dof_example.cfg";
  auto* cs_cmd = app.add_subcommand("command-server", "host the command plugins");
  cs_cmd->add_option("--robot", cs_robot, "controller address host:port");
  cs_cmd->add_option("--port", cs_port, "listen port");
  cs_cmd->add_option("--dashboard-port", cs_dash_port, "controller dashboard port");
  cs_cmd->add_option("--plugins", plugins_file, "plugin manifest file");
  cs_cmd->add_option("--chain", cs_chain, "chain config for trajectory limits");
  cs_cmd->add_option("--freq", cs_freq, "controller frequency [Hz]");

  std::string send_server = "127.0.0.1:24002";
  std::string send_action;
  std::string send_goal = "{}";
  bool send_wait = true;
  auto* send_cmd = app.add_subcommand("send", "send an action goal and await the result");
  send_cmd->add_option("--server", send_server, "command-server address");
  send_cmd->add_option("action", send_action, "action name")->required();
  send_cmd->add_option("goal", send_goal, "goal body as JSON");
  send_cmd->add_flag("--wait", send_wait, "wait for the result (default)");

  std::string rec_server = "127.0.0.1:24001";
  std::vector<std::string> rec_topics;
  std::string rec_csv = "trace.csv";
  double rec_duration = 1.0;
  auto* rec_cmd = app.add_subcommand("record", "record topic streams to CSV");
  rec_cmd->add_option("--server", rec_server, "state-receiver address");
  rec_cmd->add_option("--topics", rec_topics, "topics to record")->delimiter(',')->required();
  rec_cmd->add_option("--csv", rec_csv, "output file");
  rec_cmd->add_option("--duration", rec_duration, "recording length [s]");

  std::string demo_out = "demo_contact.csv";
  std::string demo_chain = "chains/six_dof_example.cfg";
  double demo_stiffness = 1000.0;
  auto* demo_cmd = app.add_subcommand("demo-contact", "guarded-descent demonstration");
  demo_cmd->add_option("--out", demo_out, "output CSV file");
  demo_cmd->add_option("--chain", demo_chain, "chain config file");
  demo_cmd->add_option("--stiffness", demo_stiffness, "contact stiffness [N/m]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kErrConfig;
  }

  try {
    if (app.got_subcommand(sim_cmd)) return run_sim(sim_args);
    if (app.got_subcommand(sr_cmd)) return run_state_receiver(robot, sr_port, sr_freq);
    if (app.got_subcommand(cs_cmd))
      return run_command_server(cs_robot, cs_port, plugins_file, cs_chain, cs_dash_port,
                                cs_freq);
    if (app.got_subcommand(send_cmd)) return run_send(send_server, send_action, send_goal);
    if (app.got_subcommand(rec_cmd))
      return run_record(rec_server, rec_topics, rec_csv, rec_duration);
    if (app.got_subcommand(demo_cmd))
      return run_demo_contact(demo_out, demo_chain, demo_stiffness);
  } catch (const kin::ChainConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kErrConfig;
  } catch (const svc::ManifestError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kErrConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kErrConfig;
  } catch (const net::SocketError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kErrTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kErrResult;
  }
  return kOk;
}
