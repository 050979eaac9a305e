#ifndef UR_STACK_SIM_SNIPPET_RUNNER_HPP
#define UR_STACK_SIM_SNIPPET_RUNNER_HPP

#include <condition_variable>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

namespace urstack::sim {

// Runs a snippet body on its own thread in lockstep with the control loop.
// resume() is called once per tick; the body runs until it yields (sleep)
// or finishes, with the controller blocked meanwhile, so execution stays
// deterministic.
class SnippetRunner {
 public:
  enum class State { Running, Sleeping, Done, Failed };

  struct Aborted {};

  // yield_ticks(n): suspend the body for n controller ticks (n >= 1).
  using Body = std::function<void(const std::function<void(int)>&)>;

  explicit SnippetRunner(Body body) {
    thread_ = std::thread([this, body = std::move(body)] {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [this] { return snippet_turn_; });
      lk.unlock();
      try {
        body([this](int ticks) { yield_ticks(ticks); });
        finish(State::Done, {});
      } catch (const Aborted&) {
        finish(State::Failed, "aborted");
      } catch (const std::exception& e) {
        finish(State::Failed, e.what());
      }
    });
  }

  ~SnippetRunner() {
    {
      std::lock_guard lk(mu_);
      abort_ = true;
      sleep_ticks_ = 0;
    }
    while (resume() == State::Running || state_ == State::Sleeping) {
    }
    if (thread_.joinable()) thread_.join();
  }

  SnippetRunner(const SnippetRunner&) = delete;
  SnippetRunner& operator=(const SnippetRunner&) = delete;

  // Advance one tick. Consumes a pending sleep tick or lets the body run
  // to its next yield point.
  State resume() {
    std::unique_lock lk(mu_);
    if (state_ == State::Done || state_ == State::Failed) return state_;
    if (sleep_ticks_ > 0) {
      if (--sleep_ticks_ > 0) return State::Sleeping;
    }
    snippet_turn_ = true;
    cv_.notify_all();
    cv_.wait(lk, [this] { return !snippet_turn_; });
    return state_;
  }

  State state() const {
    std::lock_guard lk(mu_);
    return state_;
  }

  std::string error() const {
    std::lock_guard lk(mu_);
    return error_;
  }

 private:
  void yield_ticks(int ticks) {
    std::unique_lock lk(mu_);
    if (abort_) throw Aborted{};
    if (ticks <= 0) return;
    sleep_ticks_ = ticks;
    state_ = State::Sleeping;
    snippet_turn_ = false;
    cv_.notify_all();
    cv_.wait(lk, [this] { return snippet_turn_; });
    state_ = State::Running;
    if (abort_) throw Aborted{};
  }

  void finish(State s, const std::string& err) {
    std::lock_guard lk(mu_);
    state_ = s;
    error_ = err;
    snippet_turn_ = false;
    cv_.notify_all();
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::thread thread_;
  bool snippet_turn_ = false;
  bool abort_ = false;
  int sleep_ticks_ = 0;
  State state_ = State::Running;
  std::string error_;
};

}  // namespace urstack::sim

#endif  // UR_STACK_SIM_SNIPPET_RUNNER_HPP
