#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace krono::detail {

// Runs task(i) for i in [0, count) on up to `threads` workers. Tasks own their
// output slots, so the caller assembles results in index order. Stops handing
// out work once *cancel is set or a task throws; the exception of the lowest
// failing index is rethrown. Returns which indices completed.
template <typename Task>
std::vector<char> run_indexed(std::size_t count, unsigned threads, const std::atomic<bool>* cancel, Task&& task) {
  std::vector<char> done(count, 0);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  const auto worker = [&] {
    for (;;) {
      if (failed.load() || (cancel && cancel->load())) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
        done[i] = 1;
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return done;
}

}  // namespace krono::detail
