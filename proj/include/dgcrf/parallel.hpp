#pragma once

#include <cstddef>
#include <functional>

namespace dgcrf {

// Worker cap for data-parallel loops. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Splits [0, count) into fixed chunks of `chunk` items and runs
// fn(chunk_index, begin, end) for each. Chunk boundaries depend only on
// (count, chunk), never on the thread count, so per-chunk partial results
// merged in chunk order are reproducible for any number of workers.
void parallel_chunks(std::size_t count, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t count, std::size_t chunk) {
  return (count + chunk - 1) / chunk;
}

}  // namespace dgcrf
