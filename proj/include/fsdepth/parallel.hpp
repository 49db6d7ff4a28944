#pragma once

#include <functional>

namespace fsdepth {

/// Caps the number of worker threads used by library loops.
/// n <= 0 resets to hardware concurrency. Thread count never changes
/// numeric results: every work item writes only its own outputs.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [begin, end). Items are distributed dynamically;
/// each item is executed exactly once by exactly one thread.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

/// Runs fn(lo, hi) over contiguous chunks partitioning [begin, end).
void parallel_chunks(int begin, int end, const std::function<void(int, int)>& fn);

}  // namespace fsdepth
