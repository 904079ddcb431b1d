#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <vector>

namespace tdm {

/// Runs a set of tasks on their own threads but lets exactly one of them
/// execute at a time. Control changes hands only at yield points and when the
/// running task blocks, and the next task is drawn from a seeded generator,
/// so a given seed always reproduces the same interleaving.
///
/// A state in which every unfinished task is blocked is reported as a
/// deadlock: blocked tasks are woken and block_until throws DeadlockDetected.
class LockstepScheduler {
 public:
  struct Outcome {
    bool deadlocked = false;
    std::size_t switches = 0;
    /// One entry per task; null when the task returned normally.
    std::vector<std::exception_ptr> failures;

    bool clean() const;
  };

  explicit LockstepScheduler(std::uint64_t seed, double switch_probability = 0.5);

  LockstepScheduler(const LockstepScheduler&) = delete;
  LockstepScheduler& operator=(const LockstepScheduler&) = delete;

  Outcome run(std::vector<std::function<void()>> tasks);

  /// Preemption point. May hand control to another runnable task.
  void yield();

  /// Gives up control until `ready()` holds. `ready` is evaluated by other
  /// threads while the scheduler lock is held, so it must not call back into
  /// the scheduler.
  void block_until(const std::function<bool()>& ready);

  /// True when the calling thread is one of this scheduler's tasks.
  bool owns_current_thread() const;

 private:
  enum class State { runnable, blocked, done };

  void hand_off(std::unique_lock<std::mutex>& lock, std::size_t me);
  std::size_t current_task() const;

  std::mutex mu_;
  std::condition_variable cv_;
  std::mt19937_64 rng_;
  std::bernoulli_distribution switch_;
  std::vector<State> states_;
  std::vector<const std::function<bool()>*> waits_;
  std::size_t running_ = 0;
  bool deadlocked_ = false;
  std::size_t switches_ = 0;
};

}  // namespace tdm
