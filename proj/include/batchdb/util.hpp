#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

namespace batchdb {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Order-sensitive combine: mix64(a, b) != mix64(b, a) in general.
inline uint64_t mix64(uint64_t acc, uint64_t v) {
  return splitmix64(acc ^ (v + 0x9E3779B97F4A7C15ULL + (acc << 6) + (acc >> 2)));
}

// Small deterministic PRNG (splitmix sequence). Cheap to construct per
// transaction, which keeps workload generation parallel and repeatable.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() { return splitmix64(state_++); }

  // Unbiased-enough bounded draw (Lemire multiply-shift).
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  bool next_bool(double p) { return next_double() < p; }

 private:
  uint64_t state_;
};

inline void cpu_pause() {
#if defined(__x86_64__) || defined(_M_X64)
  _mm_pause();
#else
  std::this_thread::yield();
#endif
}

// Bounded exponential pause, escalating to yield. Used by spin-waiting
// protocol paths; yields matter when threads outnumber cores.
class Backoff {
 public:
  void pause() {
    if (round_ < 6) {
      for (int i = 0; i < (1 << round_); ++i) cpu_pause();
      ++round_;
    } else {
      std::this_thread::yield();
    }
  }
  void reset() { round_ = 0; }

 private:
  int round_ = 0;
};

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  uint64_t elapsed_us() const {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::steady_clock::now() - start_)
            .count());
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Fixed pool of worker threads. run() executes fn(tid) on every worker and
// blocks until all finish. All engine phases (analysis and execution) share
// one pool so the configured thread count means the same thing everywhere.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned threads) : n_(threads == 0 ? 1 : threads) {
    workers_.reserve(n_);
    for (unsigned t = 0; t < n_; ++t) {
      workers_.emplace_back([this, t] { worker_loop(t); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned size() const { return n_; }

  void run(const std::function<void(unsigned)>& fn) {
    std::unique_lock<std::mutex> lk(mu_);
    job_ = &fn;
    pending_ = n_;
    ++generation_;
    cv_.notify_all();
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (error_) {
      std::exception_ptr e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

 private:
  void worker_loop(unsigned tid) {
    uint64_t seen = 0;
    for (;;) {
      const std::function<void(unsigned)>* job = nullptr;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      std::exception_ptr err;
      try {
        (*job)(tid);
      } catch (...) {
        err = std::current_exception();
      }
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (err && !error_) error_ = err;
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  unsigned n_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(unsigned)>* job_ = nullptr;
  std::exception_ptr error_;
  uint64_t generation_ = 0;
  unsigned pending_ = 0;
  bool stop_ = false;
};

// Splits [0, n) into pool.size() contiguous chunks; fn(tid, begin, end).
// Chunk boundaries depend only on (n, pool size), keeping thread-local
// accumulation deterministic for a fixed thread count.
inline void parallel_chunks(
    WorkerPool& pool, size_t n,
    const std::function<void(unsigned, size_t, size_t)>& fn) {
  const unsigned t = pool.size();
  if (n == 0) return;
  pool.run([&](unsigned tid) {
    size_t begin = n * tid / t;
    size_t end = n * (tid + 1) / t;
    if (begin < end) fn(tid, begin, end);
  });
}

}  // namespace batchdb
