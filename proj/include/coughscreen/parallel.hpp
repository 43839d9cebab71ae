#pragma once

#include <cstddef>
#include <functional>

namespace coughscreen {

/// Process-wide worker count used by the evaluation and selection stages.
/// Zero means "all available cores".
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Runs task(i) for i in [0, n). Tasks write their results into caller-owned
/// slots indexed by i, so any reduction done afterwards is in index order and
/// independent of scheduling. Nested calls from inside a task run serially.
/// If any task throws, the exception of the lowest failing index is rethrown
/// after all tasks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace coughscreen
