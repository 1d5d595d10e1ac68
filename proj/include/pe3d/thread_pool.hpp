#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pe3d {

/// Fork-join pool. The calling thread takes part in every fork, so a pool of
/// size N owns N - 1 worker threads. Work is split into contiguous static
/// blocks, so which element lands on which thread is a pure function of
/// (count, size()).
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads = 1) {
    const std::size_t n = std::max<std::size_t>(1, threads);
    workers_.reserve(n - 1);
    for (std::size_t w = 0; w + 1 < n; ++w) workers_.emplace_back([this, w] { worker_loop(w + 1); });
  }

  ~ThreadPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    start_cv_.notify_all();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t size() const { return workers_.size() + 1; }

  /// Calls fn(first, last) over a contiguous partition of [0, count) and
  /// joins. If blocks throw, the exception of the lowest block is rethrown
  /// after every block has finished.
  template <class F>
  void for_blocks(std::size_t count, F&& fn) {
    if (count == 0) return;
    const std::size_t blocks = std::min(size(), count);
    if (blocks == 1) {
      fn(std::size_t{0}, count);
      return;
    }
    std::vector<std::exception_ptr> errors(blocks);
    run(blocks, [&](std::size_t b) {
      try {
        fn(b * count / blocks, (b + 1) * count / blocks);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    });
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

 private:
  void run(std::size_t tasks, const std::function<void(std::size_t)>& job) {
    {
      std::lock_guard lock(mu_);
      job_ = &job;
      tasks_ = tasks;
      pending_ = tasks - 1;
      ++generation_;
    }
    start_cv_.notify_all();
    job(0);
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

  void worker_loop(std::size_t id) {
    std::size_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* job = nullptr;
      {
        std::unique_lock lock(mu_);
        start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        if (id >= tasks_) continue;
        job = job_;
      }
      (*job)(id);
      {
        std::lock_guard lock(mu_);
        --pending_;
      }
      done_cv_.notify_one();
    }
  }

  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t tasks_ = 0;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::vector<std::jthread> workers_;  // last member: joined before the rest is destroyed
};

}  // namespace pe3d
