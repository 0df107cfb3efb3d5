#include "speechpack/formats/shard_pool.hpp"

#include <algorithm>

#include "speechpack/error.hpp"
#include "speechpack/formats/tar.hpp"

namespace speechpack::formats {

ShardPool::ShardPool(std::vector<std::string> uris, ShardPoolOptions options)
    : uris_(std::move(uris)), options_(options) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(options_.workers, uris_.size()));
  const std::size_t capacity = 2 * workers;
  if (options_.ordered) {
    per_shard_.reserve(uris_.size());
    for (std::size_t i = 0; i < uris_.size(); ++i) per_shard_.push_back(std::make_unique<Queue>(capacity));
  } else {
    shared_ = std::make_unique<Queue>(capacity);
  }
  stats_.resize(workers);
  if (uris_.empty()) return;
  live_workers_ = workers;
  threads_.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads_.emplace_back([this, w] { run_worker(w); });
}

ShardPool::~ShardPool() { stop(); }

ShardPool::Queue& ShardPool::queue_for(std::size_t shard) {
  return options_.ordered ? *per_shard_[shard] : *shared_;
}

void ShardPool::run_worker(std::size_t worker) {
  WorkerStats& stats = stats_[worker];
  while (!stopping_) {
    const std::size_t shard = next_shard_.fetch_add(1);
    if (shard >= uris_.size()) break;
    Queue& q = queue_for(shard);
    try {
      ShardReader reader = stream_shard(ByteSource::from_uri(uris_[shard]), options_.http);
      while (auto sample = reader.next()) {
        const std::size_t bytes = std::get<Bytes>(sample->wav).size() + sample->txt.size();
        if (!q.push({Message::Kind::kItem, {shard, worker, std::move(sample), {}}})) return;
        ++stats.samples;
        stats.bytes += bytes;
      }
      ++stats.shards;
    } catch (const Error& e) {
      std::string what = uris_[shard] + ": " + e.what();
      stats.errors.push_back(what);
      if (!q.push({Message::Kind::kItem, {shard, worker, std::nullopt, std::move(what)}})) return;
    }
    if (options_.ordered && !q.push({Message::Kind::kShardEnd, {}})) return;
  }
  if (!options_.ordered) shared_->push({Message::Kind::kWorkerEnd, {}});
}

std::optional<PoolItem> ShardPool::next() {
  if (options_.ordered) {
    while (current_shard_ < per_shard_.size()) {
      auto msg = per_shard_[current_shard_]->pop();
      if (!msg) return std::nullopt;  // stopped
      if (msg->kind == Message::Kind::kShardEnd) {
        ++current_shard_;
        continue;
      }
      return std::move(msg->item);
    }
    return std::nullopt;
  }
  while (live_workers_ > 0) {
    auto msg = shared_->pop();
    if (!msg) return std::nullopt;
    if (msg->kind == Message::Kind::kWorkerEnd) {
      --live_workers_;
      continue;
    }
    return std::move(msg->item);
  }
  return std::nullopt;
}

void ShardPool::stop() {
  stopping_ = true;
  if (shared_) shared_->close();
  for (auto& q : per_shard_) q->close();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

std::vector<WorkerStats> ShardPool::stats() const { return stats_; }

}  // namespace speechpack::formats
