#include "blockbp/pool.hpp"

#include <atomic>

namespace blockbp {

ThreadPool::ThreadPool(int workers) {
  for (int i = 1; i < workers; ++i)
    threads_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::unique_lock<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
  uint64_t seen = 0;
  while (true) {
    const std::function<void(int)>* job;
    int n;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_work_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      n = job_n_;
      if (!job) continue;  // that generation already drained
      ++active_;
    }
    try {
      int i;
      while ((i = next_.fetch_add(1)) < n) (*job)(i);
    } catch (...) {
      std::unique_lock<std::mutex> lk(mu_);
      if (!error_) error_ = std::current_exception();
    }
    {
      std::unique_lock<std::mutex> lk(mu_);
      if (--active_ == 0) cv_done_.notify_all();
    }
  }
}

void ThreadPool::parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads_.empty()) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  {
    std::unique_lock<std::mutex> lk(mu_);
    job_ = &fn;
    job_n_ = n;
    next_.store(0);
    error_ = nullptr;
    ++generation_;
  }
  cv_work_.notify_all();
  // the calling thread joins the work
  try {
    int i;
    while ((i = next_.fetch_add(1)) < n) fn(i);
  } catch (...) {
    std::unique_lock<std::mutex> lk(mu_);
    if (!error_) error_ = std::current_exception();
    next_.store(n);  // stop handing out more indices
  }
  {
    std::unique_lock<std::mutex> lk(mu_);
    cv_done_.wait(lk, [&] { return active_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }
}

}  // namespace blockbp
