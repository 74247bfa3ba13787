#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <thread>
#include <vector>

#include "hideseek/layout.hpp"

namespace hideseek {

enum class WaitPolicy {
  Spin,   // busy-wait between batches
  Yield,  // yield for a while, then block on a futex
};

std::optional<WaitPolicy> parse_wait_policy(std::string_view text);
std::string_view to_string(WaitPolicy policy);

// Fixed set of threads that run one batch of tasks at a time. Tasks are
// handed out from a shared counter, so whichever worker is free takes the
// next one. The calling thread participates as worker 0.
class WorkerPool {
 public:
  // n_workers == 0 selects std::thread::hardware_concurrency().
  explicit WorkerPool(std::size_t n_workers, WaitPolicy policy = WaitPolicy::Yield);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return n_workers_; }
  WaitPolicy policy() const { return policy_; }

  // Calls fn(task, worker) for every task in [0, n_tasks); returns when all
  // are done. Not reentrant.
  template <typename Fn>
  void run(std::size_t n_tasks, Fn&& fn) {
    run_erased(n_tasks, &fn, [](void* ctx, std::size_t task, std::size_t worker) {
      (*static_cast<std::remove_reference_t<Fn>*>(ctx))(task, worker);
    });
  }

  // Joins the threads. Idempotent.
  void shutdown();

 private:
  using Thunk = void (*)(void*, std::size_t, std::size_t);

  void run_erased(std::size_t n_tasks, void* ctx, Thunk thunk);
  void worker_main(std::size_t worker);
  void drain(std::size_t worker);

  std::size_t n_workers_;
  WaitPolicy policy_;
  std::vector<std::thread> threads_;

  alignas(kCacheLine) std::atomic<std::uint64_t> generation_{0};
  alignas(kCacheLine) std::atomic<std::size_t> next_task_{0};
  alignas(kCacheLine) std::atomic<std::size_t> busy_{0};
  alignas(kCacheLine) std::size_t n_tasks_ = 0;
  void* ctx_ = nullptr;
  Thunk thunk_ = nullptr;
  bool stop_ = false;
};

}  // namespace hideseek
