#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace trisoup {

/// Persistent worker pool. Jobs are indexed and pulled off a shared counter,
/// so callers that need a deterministic result must not depend on which
/// worker ran which job.
class ThreadPool {
 public:
  explicit ThreadPool(int num_workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  /// Runs fn(job) for job in [0, num_jobs); blocks until all complete.
  /// The calling thread participates.
  void run(int num_jobs, const std::function<void(int)>& fn);

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  /// Shared pool sized from TRISOUP_THREADS (falls back to hardware concurrency).
  static ThreadPool& global();

 private:
  void worker_loop();

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  const std::function<void(int)>* job_fn_ = nullptr;
  int num_jobs_ = 0;
  std::atomic<int> next_job_{0};
  std::atomic<int> in_flight_{0};
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

void parallel_for(int num_jobs, const std::function<void(int)>& fn);

}  // namespace trisoup
