#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "speechpack/core.hpp"
#include "speechpack/detail/bounded_queue.hpp"
#include "speechpack/formats/byte_source.hpp"

namespace speechpack::formats {

struct ShardPoolOptions {
  std::size_t workers = 1;
  /// Ordered: samples come out in manifest order (shard by shard), workers
  /// prefetch ahead. Interleaved: whichever worker is ready first.
  bool ordered = false;
  HttpOptions http;
};

struct PoolItem {
  std::size_t shard = 0;
  std::size_t worker = 0;
  std::optional<PretrainSample> sample;  // empty when `error` is set
  std::string error;
};

struct WorkerStats {
  std::size_t samples = 0;
  std::size_t bytes = 0;
  std::size_t shards = 0;
  std::vector<std::string> errors;
};

/// Reads a list of shards with one worker per shard at a time and fans the
/// samples into a single consumer. A shard that fails mid-stream is reported
/// as one error item; its worker then moves on to the next unclaimed shard.
class ShardPool {
 public:
  ShardPool(std::vector<std::string> uris, ShardPoolOptions options);
  ~ShardPool();
  ShardPool(const ShardPool&) = delete;
  ShardPool& operator=(const ShardPool&) = delete;

  /// Blocks for the next sample or error; nullopt once every shard is done.
  std::optional<PoolItem> next();

  /// Stops workers early. Safe to call more than once.
  void stop();

  /// Per-worker counters; complete only after next() returned nullopt or stop().
  std::vector<WorkerStats> stats() const;

 private:
  struct Message {
    enum class Kind { kItem, kShardEnd, kWorkerEnd } kind = Kind::kItem;
    PoolItem item;
  };
  using Queue = detail::BoundedQueue<Message>;

  void run_worker(std::size_t worker);
  Queue& queue_for(std::size_t shard);

  std::vector<std::string> uris_;
  ShardPoolOptions options_;
  std::unique_ptr<Queue> shared_;
  std::vector<std::unique_ptr<Queue>> per_shard_;
  std::vector<WorkerStats> stats_;
  std::atomic<std::size_t> next_shard_{0};
  std::atomic<bool> stopping_{false};
  std::size_t live_workers_ = 0;
  std::size_t current_shard_ = 0;
  std::vector<std::thread> threads_;
};

}  // namespace speechpack::formats
