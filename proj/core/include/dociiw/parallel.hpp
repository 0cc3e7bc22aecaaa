#pragma once

#include <cstddef>
#include <functional>

namespace dociiw {

/// Worker cap for internal loops. Defaults to DOCIIW_THREADS, else the
/// number of logical cores.
int thread_count() noexcept;
void set_thread_count(int n) noexcept;

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Work is split
/// into contiguous static chunks; callers write results into per-index slots
/// and reduce afterwards in index order, so results do not depend on the
/// thread count. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dociiw
