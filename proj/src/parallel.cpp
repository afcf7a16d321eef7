#include "vdt/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>

namespace vdt {

namespace {

std::atomic<int> g_workers{0};  // 0 = not yet resolved
thread_local bool tl_in_worker = false;

using BlockFn = std::function<void(std::ptrdiff_t, std::ptrdiff_t, std::ptrdiff_t)>;

// Persistent pool: workers stay alive across calls so per-thread evaluation
// workspaces keep their allocations.
class Pool {
  public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void run(const BlockFn& fn, std::ptrdiff_t n, std::ptrdiff_t block, int participants) {
        const std::ptrdiff_t nblocks = block_count(n, block);
        ensure_threads(participants - 1);
        const int helpers = std::min<int>(static_cast<int>(threads_.size()), participants - 1);

        {
            std::lock_guard<std::mutex> lock(m_);
            fn_ = &fn;
            n_ = n;
            block_ = block;
            nblocks_ = nblocks;
            next_.store(0, std::memory_order_relaxed);
            busy_.store(helpers, std::memory_order_relaxed);
            allowed_ = helpers;
            err_ = nullptr;
            ++generation_;
        }
        cv_work_.notify_all();

        work();  // caller participates

        std::unique_lock<std::mutex> lock(m_);
        cv_done_.wait(lock, [&] { return busy_.load(std::memory_order_acquire) == 0; });
        if (err_) std::rethrow_exception(err_);
    }

  private:
    Pool() = default;
    ~Pool() {
        {
            std::lock_guard<std::mutex> lock(m_);
            shutdown_ = true;
        }
        cv_work_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void ensure_threads(int wanted) {
        if (wanted <= static_cast<int>(threads_.size())) return;
        std::lock_guard<std::mutex> lock(spawn_m_);
        while (static_cast<int>(threads_.size()) < wanted) {
            const int index = static_cast<int>(threads_.size());
            threads_.emplace_back([this, index] { worker_loop(index); });
        }
    }

    void work() {
        const BlockFn& fn = *fn_;
        for (;;) {
            const std::ptrdiff_t b = next_.fetch_add(1, std::memory_order_relaxed);
            if (b >= nblocks_) return;
            try {
                fn(b, b * block_, std::min(n_, (b + 1) * block_));
            } catch (...) {
                std::lock_guard<std::mutex> lock(m_);
                if (!err_) err_ = std::current_exception();
                next_.store(nblocks_, std::memory_order_relaxed);
                return;
            }
        }
    }

    void worker_loop(int index) {
        tl_in_worker = true;
        uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lock(m_);
                cv_work_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
                if (shutdown_) return;
                seen = generation_;
                if (index >= allowed_) continue;  // not pre-counted for this job
            }
            work();
            if (busy_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> lock(m_);
                cv_done_.notify_all();
            }
        }
    }

    std::mutex m_;
    std::mutex spawn_m_;
    std::condition_variable cv_work_;
    std::condition_variable cv_done_;
    std::vector<std::thread> threads_;
    bool shutdown_ = false;
    uint64_t generation_ = 0;
    int allowed_ = 0;

    const BlockFn* fn_ = nullptr;
    std::ptrdiff_t n_ = 0;
    std::ptrdiff_t block_ = 0;
    std::ptrdiff_t nblocks_ = 0;
    std::atomic<std::ptrdiff_t> next_{0};
    std::atomic<int> busy_{0};
    std::exception_ptr err_;
};

}  // namespace

int worker_count() {
    int n = g_workers.load(std::memory_order_relaxed);
    if (n <= 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        g_workers.store(n, std::memory_order_relaxed);
    }
    return n;
}

void set_worker_count(int n) { g_workers.store(n > 0 ? n : 1, std::memory_order_relaxed); }

void parallel_for_blocks(std::ptrdiff_t n,
                         const std::function<void(std::ptrdiff_t, std::ptrdiff_t, std::ptrdiff_t)>& fn,
                         std::ptrdiff_t block) {
    if (n <= 0) return;
    const std::ptrdiff_t nblocks = block_count(n, block);
    const int participants = static_cast<int>(std::min<std::ptrdiff_t>(worker_count(), nblocks));

    // Serial path; also used when called from inside a pool worker.
    if (participants <= 1 || tl_in_worker) {
        for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
            fn(b, b * block, std::min(n, (b + 1) * block));
        }
        return;
    }
    Pool::instance().run(fn, n, block, participants);
}

}  // namespace vdt
