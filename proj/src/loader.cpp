#include "scoregraph/loader.h"

#include <algorithm>

#include "scoregraph/error.h"

namespace scoregraph {

BatchStream::BatchStream(std::span<const ScoreGraph> corpus, SamplerConfig config,
                         std::uint64_t count, unsigned workers, std::size_t prefetch)
    : corpus_(corpus), config_(std::move(config)), count_(count),
      prefetch_(std::max<std::size_t>(prefetch, 1)) {
  config_.validate();
  if (corpus_.empty()) throw ConfigError("cannot sample from an empty corpus");
  const unsigned n = std::max(workers, 1u);
  threads_.reserve(n);
  for (unsigned i = 0; i < n; ++i) threads_.emplace_back([this] { work(); });
}

BatchStream::~BatchStream() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  space_.notify_all();
  ready_.notify_all();
  for (auto& t : threads_) t.join();
}

void BatchStream::work() {
  for (;;) {
    std::uint64_t draw = 0;
    {
      std::unique_lock lock(mutex_);
      space_.wait(lock, [&] {
        return stopping_ || error_ || next_draw_ >= count_ || next_draw_ < delivered_ + prefetch_;
      });
      if (stopping_ || error_ || next_draw_ >= count_) return;
      draw = next_draw_++;
    }
    try {
      Batch batch = sample_batch(corpus_, config_, draw);
      std::lock_guard lock(mutex_);
      done_.emplace(draw, std::move(batch));
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
    ready_.notify_all();
  }
}

std::optional<Batch> BatchStream::next() {
  std::unique_lock lock(mutex_);
  if (delivered_ >= count_) return std::nullopt;
  ready_.wait(lock, [&] { return error_ || done_.count(delivered_) != 0; });
  if (auto it = done_.find(delivered_); it != done_.end()) {
    Batch batch = std::move(it->second);
    done_.erase(it);
    ++delivered_;
    lock.unlock();
    space_.notify_all();
    return batch;
  }
  std::rethrow_exception(error_);
}

}  // namespace scoregraph
