#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace bicausal {

// Thread count from BICAUSAL_THREADS, else hardware concurrency (at least 1).
unsigned default_thread_count();

// Runs body(i) for i in [0, count) on up to `threads` workers. Work items are
// handed out by index; the first exception is rethrown after all workers
// stop. threads == 0 means default_thread_count().
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace bicausal
