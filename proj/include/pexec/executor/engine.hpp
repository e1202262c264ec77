// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include <pexec/executor/execute.hpp>
#include <pexec/executor/scheduler.hpp>
#include <pexec/statedb/state_db.hpp>

namespace pexec::executor {

//! Fixed set of η execution threads. run() blocks until every task has finished.
class WorkerPool {
  public:
    explicit WorkerPool(uint32_t threads);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void run(std::size_t tasks, const std::function<void(std::size_t)>& fn);
    [[nodiscard]] uint32_t size() const noexcept { return static_cast<uint32_t>(threads_.size()); }

  private:
    void loop();

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* fn_{nullptr};
    std::size_t tasks_{0};
    std::size_t next_{0};
    std::size_t finished_{0};
    uint64_t generation_{0};
    bool stop_{false};
};

struct BatchTrace {
    uint64_t batch{0};
    std::vector<uint64_t> fetched;
    std::vector<uint64_t> committed;
    std::vector<uint64_t> aborted;
    uint64_t next_index{0};
    //! Merged state after this batch.
    const statedb::StateReader* state{nullptr};
};

struct EngineOptions {
    //! Nonzero: each task sleeps a pseudo-random 0-200 us before executing.
    uint64_t jitter_seed{0};
    //! Fault injection: commit stale records instead of aborting them.
    bool inject_skip_abort{false};
    std::function<void(const BatchTrace&)> on_batch;
};

struct BlockResult {
    Digest root;
    std::vector<uint64_t> commit_order;
    uint64_t aborts{0};
    uint64_t batches{0};
    uint64_t failed_txs{0};
    double wall_ms{0};
    //! Net committed writes of the block.
    std::map<StateKey, Bytes> writes;
    statedb::BlockStats stats;
};

/// Batched optimistic execution over the pipelined state database. Checks at runtime
/// that the commit cursor is the smallest held index before every merge, that every
/// batch advances it, and that the block finishes within one batch per transaction.
BlockResult run_block(const Block& block, statedb::StateDb& db, WorkerPool& pool, const EngineOptions& options = {});

//! Reference engine: block order, one transaction at a time, synchronous commit.
BlockResult serial_execute_block(const Block& block, statedb::StateDb& db);

}  // namespace pexec::executor
