#pragma once

#include <cstdint>
#include <functional>

namespace rlk {

// Worker count resolution order: deterministic mode forces 1, then the
// RELIGHTKIT_THREADS env var caps, then hardware concurrency.
int worker_count();

void set_deterministic(bool on);
bool deterministic();

// Also pins the BLAS thread pool so GEMM results are reproducible.
void apply_thread_settings();

// Chunked parallel loop over [0, n). Falls back to a serial loop when a
// single worker is active. fn must not throw.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace rlk
