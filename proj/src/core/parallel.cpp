#include "trisoup/core/parallel.hpp"

#include <cstdlib>
#include <string>

namespace trisoup {

ThreadPool::ThreadPool(int num_workers) {
  if (num_workers < 1) num_workers = 1;
  workers_.reserve(num_workers - 1);
  for (int i = 0; i < num_workers - 1; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
    ++generation_;
  }
  cv_start_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop() {
  std::uint64_t seen = 0;
  for (;;) {
    const std::function<void(int)>* fn = nullptr;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      fn = job_fn_;
    }
    for (;;) {
      const int job = next_job_.fetch_add(1, std::memory_order_relaxed);
      if (job >= num_jobs_) break;
      (*fn)(job);
    }
    if (in_flight_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      cv_done_.notify_one();
    }
  }
}

void ThreadPool::run(int num_jobs, const std::function<void(int)>& fn) {
  if (num_jobs <= 0) return;
  if (workers_.empty() || num_jobs == 1) {
    for (int i = 0; i < num_jobs; ++i) fn(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    job_fn_ = &fn;
    num_jobs_ = num_jobs;
    next_job_.store(0, std::memory_order_relaxed);
    in_flight_.store(static_cast<int>(workers_.size()) + 1, std::memory_order_relaxed);
    ++generation_;
  }
  cv_start_.notify_all();
  for (;;) {
    const int job = next_job_.fetch_add(1, std::memory_order_relaxed);
    if (job >= num_jobs_) break;
    fn(job);
  }
  if (in_flight_.fetch_sub(1, std::memory_order_acq_rel) != 1) {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_done_.wait(lock, [&] { return in_flight_.load(std::memory_order_acquire) == 0; });
  }
}

ThreadPool& ThreadPool::global() {
  static ThreadPool pool([] {
    if (const char* env = std::getenv("TRISOUP_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 4;
  }());
  return pool;
}

void parallel_for(int num_jobs, const std::function<void(int)>& fn) {
  ThreadPool::global().run(num_jobs, fn);
}

}  // namespace trisoup
