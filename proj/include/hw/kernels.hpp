#pragma once

// Parallel loop used by the top-level tower multiplication. The serial path is
// the reference; both must produce identical coefficient arrays.

#include <functional>

namespace hw::kernels {

/// True when built with OpenMP and not disabled at runtime.
bool parallel_enabled();
void set_parallel(bool on);
int max_threads();
/// Caps the worker count; 1 selects the serial path.
void set_threads(int n);

/// Runs fn(k) for 0 <= k < n; iterations must be independent.
void for_each_index(int n, bool parallel, const std::function<void(int)>& fn);

}  // namespace hw::kernels
