#include "tdm/lockstep.hpp"

#include <limits>
#include <thread>

#include "tdm/transport.hpp"

namespace tdm {

namespace {

constexpr std::size_t kNoTask = std::numeric_limits<std::size_t>::max();

thread_local const LockstepScheduler* tl_scheduler = nullptr;
thread_local std::size_t tl_task = kNoTask;

}  // namespace

bool LockstepScheduler::Outcome::clean() const {
  if (deadlocked) return false;
  for (const auto& f : failures) {
    if (f) return false;
  }
  return true;
}

LockstepScheduler::LockstepScheduler(std::uint64_t seed, double switch_probability)
    : rng_(seed), switch_(switch_probability) {}

bool LockstepScheduler::owns_current_thread() const { return tl_scheduler == this; }

std::size_t LockstepScheduler::current_task() const {
  if (tl_scheduler != this) throw std::logic_error("lockstep scheduler called from a foreign thread");
  return tl_task;
}

LockstepScheduler::Outcome LockstepScheduler::run(std::vector<std::function<void()>> tasks) {
  Outcome outcome;
  outcome.failures.resize(tasks.size());
  if (tasks.empty()) return outcome;
  {
    std::lock_guard lock(mu_);
    states_.assign(tasks.size(), State::runnable);
    waits_.assign(tasks.size(), nullptr);
    deadlocked_ = false;
    switches_ = 0;
    running_ = std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(rng_);
  }

  std::vector<std::thread> threads;
  threads.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    threads.emplace_back([this, i, &tasks, &outcome] {
      tl_scheduler = this;
      tl_task = i;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return running_ == i || deadlocked_; });
      }
      try {
        tasks[i]();
      } catch (...) {
        outcome.failures[i] = std::current_exception();
      }
      std::unique_lock lock(mu_);
      states_[i] = State::done;
      hand_off(lock, i);
    });
  }
  for (auto& t : threads) t.join();

  outcome.deadlocked = deadlocked_;
  outcome.switches = switches_;
  return outcome;
}

void LockstepScheduler::hand_off(std::unique_lock<std::mutex>& lock, std::size_t me) {
  if (deadlocked_) return;

  std::vector<std::size_t> candidates;
  bool any_live = false;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i] == State::done) continue;
    any_live = true;
    if (states_[i] == State::runnable || (*waits_[i])()) candidates.push_back(i);
  }

  if (candidates.empty()) {
    running_ = kNoTask;
    if (any_live) deadlocked_ = true;
    cv_.notify_all();
    return;
  }

  const auto next = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng_)];
  if (next != me) ++switches_;
  running_ = next;
  cv_.notify_all();
  if (states_[me] != State::done) cv_.wait(lock, [&] { return running_ == me || deadlocked_; });
}

void LockstepScheduler::yield() {
  const auto me = current_task();
  std::unique_lock lock(mu_);
  if (deadlocked_ || !switch_(rng_)) return;
  hand_off(lock, me);
}

void LockstepScheduler::block_until(const std::function<bool()>& ready) {
  const auto me = current_task();
  std::unique_lock lock(mu_);
  while (!ready()) {
    if (deadlocked_) throw DeadlockDetected("all tasks blocked");
    states_[me] = State::blocked;
    waits_[me] = &ready;
    hand_off(lock, me);
    states_[me] = State::runnable;
    waits_[me] = nullptr;
  }
}

}  // namespace tdm
