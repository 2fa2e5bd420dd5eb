#pragma once

// Seed derivation and a static round-robin worker pool. Task i always gets
// the same seed regardless of how many workers run.

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace wh::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b * 0xd1342543de82ef95ULL));
}

template <class Task>
void run_indexed(int count, int workers, Task&& task) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) task(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace wh::detail
