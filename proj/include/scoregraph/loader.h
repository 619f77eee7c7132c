/**
 * @file loader.h
 * @brief Ordered multi-producer batch stream.
 *
 * Workers sample batches 0..count-1 concurrently, each from its own child
 * stream of the master seed, and the single consumer receives them strictly
 * in draw order. Output is therefore independent of the worker count.
 */

#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "scoregraph/graph.h"
#include "scoregraph/sampler.h"

namespace scoregraph {

class BatchStream {
 public:
  /// `corpus` must outlive the stream. `prefetch` bounds how many batches may
  /// be completed ahead of the consumer.
  BatchStream(std::span<const ScoreGraph> corpus, SamplerConfig config, std::uint64_t count,
              unsigned workers = 1, std::size_t prefetch = 2);
  ~BatchStream();

  BatchStream(const BatchStream&) = delete;
  BatchStream& operator=(const BatchStream&) = delete;

  /// Next batch in draw order, or nullopt once `count` batches were delivered.
  /// Rethrows the first error raised by a worker.
  std::optional<Batch> next();

  std::uint64_t delivered() const noexcept { return delivered_; }

 private:
  void work();

  std::span<const ScoreGraph> corpus_;
  SamplerConfig config_;
  std::uint64_t count_;
  std::size_t prefetch_;

  std::mutex mutex_;
  std::condition_variable ready_;
  std::condition_variable space_;
  std::uint64_t next_draw_ = 0;
  std::uint64_t delivered_ = 0;
  std::map<std::uint64_t, Batch> done_;
  std::exception_ptr error_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace scoregraph
