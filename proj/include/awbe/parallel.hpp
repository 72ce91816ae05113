// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace awbe {

/// Worker count: AWBE_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Calls fn(i) for i in [0, n) on up to worker_count() threads. Each index
/// runs exactly once; the first exception thrown is rethrown after all
/// workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace awbe
