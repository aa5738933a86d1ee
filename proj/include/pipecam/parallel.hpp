#pragma once

#include <functional>

namespace pipecam {

/// Process-wide worker cap (default 1). Work is always partitioned by index
/// range with per-index outputs, so results are identical for any cap.
void set_worker_count(int n);
int worker_count();

/// Runs fn(i) for i in [0, n). With more than one worker, indices are split
/// into contiguous ranges across threads.
void parallel_for(long n, const std::function<void(long)>& fn);

}  // namespace pipecam
