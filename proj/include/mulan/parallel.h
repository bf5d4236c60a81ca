// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_PARALLEL_H_
#define MULAN_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace mulan {

// Worker count from MULAN_NUM_WORKERS, else `fallback`. Always >= 1.
int num_workers_from_env(int fallback = 1);

// Runs fn(i) for every i in [0, n) on up to `workers` threads. Each index is
// visited exactly once; callers write results by index so the outcome never
// depends on scheduling. The first exception thrown by any worker is
// rethrown on the calling thread after all workers join.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mulan

#endif  // MULAN_PARALLEL_H_
