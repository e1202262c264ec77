// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

#include <pexec/common/errors.hpp>

namespace pexec::statedb {

//! Unbounded MPMC FIFO. close() wakes all consumers; pop() then drains and returns nullopt.
template <typename T>
class BlockingQueue {
  public:
    void push(T item) {
        {
            std::lock_guard lock{mutex_};
            if (closed_) {
                throw QueueClosed("push on closed queue");
            }
            items_.push_back(std::move(item));
        }
        cv_.notify_one();
    }

    std::optional<T> pop() {
        std::unique_lock lock{mutex_};
        cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) {
            return std::nullopt;
        }
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }

    void close() {
        {
            std::lock_guard lock{mutex_};
            closed_ = true;
        }
        cv_.notify_all();
    }

    [[nodiscard]] std::size_t size() const {
        std::lock_guard lock{mutex_};
        return items_.size();
    }

  private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<T> items_;
    bool closed_{false};
};

//! Counts outstanding work items of one pipeline stage; wait() blocks until none remain.
class WorkTracker {
  public:
    void add(uint64_t n = 1) {
        std::lock_guard lock{mutex_};
        pending_ += n;
    }

    void done() {
        std::lock_guard lock{mutex_};
        if (--pending_ == 0) {
            cv_.notify_all();
        }
    }

    void wait() {
        std::unique_lock lock{mutex_};
        cv_.wait(lock, [&] { return pending_ == 0; });
    }

    [[nodiscard]] uint64_t pending() const {
        std::lock_guard lock{mutex_};
        return pending_;
    }

  private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    uint64_t pending_{0};
};

}  // namespace pexec::statedb
