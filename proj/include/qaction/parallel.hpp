#pragma once

// Fixed-order parallel map. Work items are split into contiguous chunks, each
// item writes only its own output slot, and callers reduce in index order, so
// results do not depend on the worker count.

#include <cstddef>
#include <functional>

namespace qaction {

class WorkerPool {
 public:
  /// threads == 0 picks the hardware concurrency.
  explicit WorkerPool(std::size_t threads = 1);

  std::size_t size() const noexcept { return threads_; }

  /// Runs body(i) for i in [0, n). Rethrows the first exception (lowest index).
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) const;

 private:
  std::size_t threads_;
};

/// Runs sequentially when pool is null.
void parallel_for(const WorkerPool* pool, std::size_t n,
                  const std::function<void(std::size_t)>& body);

}  // namespace qaction
