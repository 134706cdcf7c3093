#pragma once

#include <functional>

namespace fpbnn {

/// Runs task(i) for i in [0, n) on up to `workers` threads. Tasks must not
/// share mutable state. If any task throws, the exception of the lowest
/// failing index is rethrown after all threads join, so failures surface
/// identically under any scheduling.
void parallel_for(int n, int workers, const std::function<void(int)>& task);

int default_workers();

}  // namespace fpbnn
