#include "hideseek/worker_pool.hpp"

#include <exception>

namespace hideseek {

namespace {

constexpr int kYieldsBeforeBlocking = 256;

inline void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_ia32_pause();
#endif
}

template <typename Pred>
void wait_until(const std::atomic<std::uint64_t>& word, std::uint64_t seen, WaitPolicy policy,
                Pred&& ready) {
  if (policy == WaitPolicy::Spin) {
    while (!ready()) cpu_relax();
    return;
  }
  for (int i = 0; i < kYieldsBeforeBlocking; ++i) {
    if (ready()) return;
    std::this_thread::yield();
  }
  while (!ready()) word.wait(seen, std::memory_order_acquire);
}

}  // namespace

std::optional<WaitPolicy> parse_wait_policy(std::string_view text) {
  if (text == "spin") return WaitPolicy::Spin;
  if (text == "yield") return WaitPolicy::Yield;
  return std::nullopt;
}

std::string_view to_string(WaitPolicy policy) {
  return policy == WaitPolicy::Spin ? "spin" : "yield";
}

WorkerPool::WorkerPool(std::size_t n_workers, WaitPolicy policy)
    : n_workers_(n_workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n_workers),
      policy_(policy) {
  threads_.reserve(n_workers_ - 1);
  for (std::size_t w = 1; w < n_workers_; ++w) {
    threads_.emplace_back([this, w] { worker_main(w); });
  }
}

WorkerPool::~WorkerPool() { shutdown(); }

void WorkerPool::shutdown() {
  if (threads_.empty()) return;
  stop_ = true;
  generation_.fetch_add(1, std::memory_order_release);
  generation_.notify_all();
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void WorkerPool::drain(std::size_t worker) {
  for (;;) {
    const std::size_t task = next_task_.fetch_add(1, std::memory_order_relaxed);
    if (task >= n_tasks_) break;
    thunk_(ctx_, task, worker);
  }
}

void WorkerPool::run_erased(std::size_t n_tasks, void* ctx, Thunk thunk) {
  if (threads_.empty()) {
    for (std::size_t t = 0; t < n_tasks; ++t) thunk(ctx, t, 0);
    return;
  }
  n_tasks_ = n_tasks;
  ctx_ = ctx;
  thunk_ = thunk;
  next_task_.store(0, std::memory_order_relaxed);
  busy_.store(threads_.size(), std::memory_order_relaxed);
  const std::uint64_t gen = generation_.fetch_add(1, std::memory_order_release) + 1;
  if (policy_ != WaitPolicy::Spin) generation_.notify_all();

  drain(0);

  // Workers decrement busy_ and bump nothing else; poll it with the same policy.
  if (policy_ == WaitPolicy::Spin) {
    while (busy_.load(std::memory_order_acquire) != 0) cpu_relax();
  } else {
    int spins = 0;
    while (busy_.load(std::memory_order_acquire) != 0) {
      if (++spins < kYieldsBeforeBlocking) {
        std::this_thread::yield();
      } else {
        std::size_t b = busy_.load(std::memory_order_acquire);
        if (b != 0) busy_.wait(b, std::memory_order_acquire);
      }
    }
  }
  (void)gen;
}

void WorkerPool::worker_main(std::size_t worker) {
  std::uint64_t seen = 0;
  for (;;) {
    wait_until(generation_, seen, policy_, [&] {
      return generation_.load(std::memory_order_acquire) != seen;
    });
    seen = generation_.load(std::memory_order_acquire);
    if (stop_) return;
    drain(worker);
    if (busy_.fetch_sub(1, std::memory_order_acq_rel) == 1) busy_.notify_one();
  }
}

}  // namespace hideseek
