#pragma once

#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace adex {

// Minimal persistent thread pool with static partitioning. Work items are
// index ranges; every output element is written by exactly one worker and
// in-thread reductions run in fixed index order, so results do not depend
// on the number of threads.
class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    int size() const { return n_threads_; }

    // Runs f(chunk_index) for chunk_index in [0, n_chunks); blocks until done.
    void run_chunks(int n_chunks, const std::function<void(int)>& f) {
        if (n_chunks <= 1 || n_threads_ == 1) {
            for (int i = 0; i < n_chunks; ++i) f(i);
            return;
        }
        {
            std::unique_lock<std::mutex> lock(mu_);
            job_ = &f;
            job_chunks_ = n_chunks;
            next_chunk_ = 0;
            pending_ = n_chunks;
            ++generation_;
        }
        cv_work_.notify_all();
        work_loop();  // main thread participates
        std::unique_lock<std::mutex> lock(mu_);
        cv_done_.wait(lock, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

    ~ThreadPool() {
        {
            std::unique_lock<std::mutex> lock(mu_);
            stop_ = true;
        }
        cv_work_.notify_all();
        for (auto& t : workers_) t.join();
    }

private:
    ThreadPool() {
        n_threads_ = default_threads();
        for (int i = 1; i < n_threads_; ++i)
            workers_.emplace_back([this] { worker_main(); });
    }

    static int default_threads() {
        if (const char* env = std::getenv("ADEX_THREADS")) {
            int n = std::atoi(env);
            if (n >= 1) return n;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }

    void worker_main() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            work_loop();
        }
    }

    void work_loop() {
        for (;;) {
            int idx;
            const std::function<void(int)>* f;
            {
                std::unique_lock<std::mutex> lock(mu_);
                if (!job_ || next_chunk_ >= job_chunks_) return;
                idx = next_chunk_++;
                f = job_;
            }
            (*f)(idx);
            {
                std::unique_lock<std::mutex> lock(mu_);
                if (--pending_ == 0) cv_done_.notify_all();
            }
        }
    }

    int n_threads_;
    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_work_, cv_done_;
    const std::function<void(int)>* job_ = nullptr;
    int job_chunks_ = 0;
    int next_chunk_ = 0;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

// f(begin, end) over a partition of [0, n). Chunk count adapts to the pool.
template <class F>
void parallel_for_chunks(long n, F&& f) {
    if (n <= 0) return;
    ThreadPool& pool = ThreadPool::instance();
    int chunks = pool.size() * 4;
    if (static_cast<long>(chunks) > n) chunks = static_cast<int>(n);
    long per = (n + chunks - 1) / chunks;
    pool.run_chunks(chunks, [&](int c) {
        long b = c * per;
        long e = b + per < n ? b + per : n;
        if (b < e) f(b, e);
    });
}

// f(i) for each i in [0, n).
template <class F>
void parallel_for(long n, F&& f) {
    parallel_for_chunks(n, [&](long b, long e) {
        for (long i = b; i < e; ++i) f(i);
    });
}

}  // namespace adex
