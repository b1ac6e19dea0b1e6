#include "rlk/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace rlk {

namespace {
std::atomic<bool> g_deterministic{false};
}

void set_deterministic(bool on) {
    g_deterministic.store(on);
    apply_thread_settings();
}

bool deterministic() { return g_deterministic.load(); }

int worker_count() {
    if (g_deterministic.load()) return 1;
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("RELIGHTKIT_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return n;
}

void apply_thread_settings() { openblas_set_num_threads(worker_count()); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    if (n <= 0) return;
    int workers = worker_count();
    if (workers <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = static_cast<int>(std::min<std::int64_t>(workers, n));
    std::atomic<std::int64_t> next{0};
    const std::int64_t chunk = std::max<std::int64_t>(1, n / (workers * 8));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::int64_t begin = next.fetch_add(chunk);
                if (begin >= n) break;
                std::int64_t end = std::min(begin + chunk, n);
                for (std::int64_t i = begin; i < end; ++i) fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace rlk
