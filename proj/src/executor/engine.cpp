// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/executor/engine.hpp>

#include <chrono>
#include <random>
#include <string>
#include <unordered_set>

#include <pexec/common/errors.hpp>

namespace pexec::executor {

WorkerPool::WorkerPool(uint32_t threads) {
    for (uint32_t i = 0; i < std::max<uint32_t>(threads, 1); ++i) {
        threads_.emplace_back([this] { loop(); });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock{mutex_};
        stop_ = true;
    }
    work_cv_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

void WorkerPool::run(std::size_t tasks, const std::function<void(std::size_t)>& fn) {
    if (tasks == 0) {
        return;
    }
    std::unique_lock lock{mutex_};
    fn_ = &fn;
    tasks_ = tasks;
    next_ = 0;
    finished_ = 0;
    ++generation_;
    work_cv_.notify_all();
    done_cv_.wait(lock, [&] { return finished_ == tasks_; });
    fn_ = nullptr;
}

void WorkerPool::loop() {
    uint64_t seen = 0;
    std::unique_lock lock{mutex_};
    while (true) {
        work_cv_.wait(lock, [&] { return stop_ || (generation_ != seen && next_ < tasks_); });
        if (stop_) {
            return;
        }
        seen = generation_;
        while (next_ < tasks_) {
            const std::size_t i = next_++;
            const auto* fn = fn_;
            lock.unlock();
            (*fn)(i);
            lock.lock();
            if (++finished_ == tasks_) {
                done_cv_.notify_all();
            }
        }
    }
}

namespace {

    double elapsed_ms(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }

}  // namespace

BlockResult run_block(const Block& block, statedb::StateDb& db, WorkerPool& pool, const EngineOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<Transaction>& txs = block.transactions;
    const uint64_t m = txs.size();
    for (uint64_t i = 0; i < m; ++i) {
        if (txs[i].index != i) {
            throw Error("transaction indices must be 0..m-1 in order");
        }
    }

    const auto last_explicit = last_explicit_index(txs);
    db.begin_block(block.height, m, last_explicit);

    BlockResult result;
    std::set<uint64_t> remaining;
    for (uint64_t i = 0; i < m; ++i) {
        remaining.insert(i);
    }
    MergeState merger{options.inject_skip_abort};
    std::unordered_set<Address> unpushed;

    while (merger.next_index() < m) {
        const uint64_t before = merger.next_index();
        std::vector<uint64_t> batch = batch_fetch(txs, remaining, pool.size());

        std::vector<ExecutionRecord> records(batch.size());
        pool.run(batch.size(), [&](std::size_t k) {
            if (options.jitter_seed != 0) {
                std::mt19937_64 rng{options.jitter_seed ^ (result.batches * 0x9e3779b97f4a7c15ull) ^ batch[k]};
                std::this_thread::sleep_for(std::chrono::microseconds(rng() % 200));
            }
            statedb::StateView view{db};
            records[k] = execute_tx(txs[batch[k]], view);
            records[k].snapshot = before;
        });

        MergeOutcome out = merger.merge(std::move(records), [&](const StateKey& k, const Bytes& v) {
            db.set(k, v);
            unpushed.insert(k.address);
        });
        for (uint64_t a : out.aborted) {
            remaining.insert(a);
        }
        result.aborts += out.aborted.size();
        result.failed_txs += out.failed;
        result.commit_order.insert(result.commit_order.end(), out.committed.begin(), out.committed.end());
        for (auto& [k, v] : out.writes) {
            result.writes.insert_or_assign(k, std::move(v));
        }
        ++result.batches;

        if (out.next_index <= before) {
            throw Error("batch " + std::to_string(result.batches) + " did not advance the commit cursor");
        }
        if (result.batches > m) {
            throw Error("block needed more batches than transactions");
        }

        // Accounts no remaining transaction names explicitly can be folded into the trie now.
        db.set_next_index(out.next_index);
        for (auto it = unpushed.begin(); it != unpushed.end();) {
            auto le = last_explicit.find(*it);
            if (le == last_explicit.end() || le->second < out.next_index) {
                db.push_commit(*it);
                it = unpushed.erase(it);
            } else {
                ++it;
            }
        }
        db.async_commit_account();

        if (options.on_batch) {
            options.on_batch(BatchTrace{result.batches, batch, out.committed, out.aborted, out.next_index, &db});
        }
    }

    for (const Address& a : unpushed) {
        db.push_commit(a);
    }
    result.root = db.finish_block();
    result.stats = db.last_block_stats();
    result.wall_ms = elapsed_ms(t0);
    return result;
}

BlockResult serial_execute_block(const Block& block, statedb::StateDb& db) {
    const auto t0 = std::chrono::steady_clock::now();
    BlockResult result;
    statedb::OverlayReader state{db, result.writes};
    for (const Transaction& tx : block.transactions) {
        statedb::StateView view{state};
        const ExecutionRecord rec = execute_tx(tx, view);
        if (rec.status != TxStatus::ok) {
            ++result.failed_txs;
        }
        for (const auto& [k, v] : rec.writes) {
            result.writes.insert_or_assign(k, v);
        }
        result.commit_order.push_back(tx.index);
    }
    result.root = db.commit_block_sync(block.height, result.writes);
    result.stats = db.last_block_stats();
    result.wall_ms = elapsed_ms(t0);
    return result;
}

}  // namespace pexec::executor
