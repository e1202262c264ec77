// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <vector>

#include <pexec/kv/store.hpp>
#include <pexec/mpt/trie.hpp>
#include <pexec/statedb/account.hpp>
#include <pexec/statedb/caches.hpp>
#include <pexec/statedb/commit_point.hpp>
#include <pexec/statedb/queue.hpp>

namespace pexec::statedb {

//! Read access to state values. Absent keys read as empty bytes (the zero value).
class StateReader {
  public:
    virtual ~StateReader() = default;
    [[nodiscard]] virtual Bytes get(const StateKey& key) const = 0;
};

enum class CrashPoint : uint8_t {
    none,
    mid_store,  // store worker halts before its n-th node of the block
    mid_hash,   // hash worker halts before emitting its n-th node of the block
    post_meta,  // block completes durably, then the process "dies"
};

//! Cooperative halt flags at instrumented points of the pipeline.
class CrashInjector {
  public:
    //! Arms `point` to fire on its event number `offset` (0-based) in the next block.
    void arm(CrashPoint point, uint64_t offset) {
        point_ = point;
        offset_ = offset;
        counter_ = 0;
    }
    void disarm() { point_ = CrashPoint::none; }

    //! Counts an event at `point`. Returns true once the injector has fired.
    bool hit(CrashPoint point) {
        if (point == point_ && counter_.fetch_add(1) == offset_) {
            crashed_ = true;
        }
        return crashed_;
    }

    [[nodiscard]] bool crashed() const noexcept { return crashed_.load(); }
    [[nodiscard]] CrashPoint armed() const noexcept { return point_; }

  private:
    CrashPoint point_{CrashPoint::none};
    uint64_t offset_{0};
    std::atomic<uint64_t> counter_{0};
    std::atomic<bool> crashed_{false};
};

struct StateDbOptions {
    CommitConfig commit;
    DigestFn hash{keccak256};
    //! Store worker flushes its batch after this many puts.
    std::size_t flush_interval{512};
};

struct BlockStats {
    uint64_t direct_reads{0};
    uint64_t node_reads{0};  // backend reads of D_node
    uint64_t node_writes{0};
    uint64_t direct_writes{0};
    uint64_t hash_events{0};   // nodes emitted by the hash worker
    uint64_t store_events{0};  // nodes popped by the store worker
    uint64_t stale_drops{0};   // store-side version mismatches
    uint64_t retrieval_tasks{0};
    uint64_t storage_commits{0};
    mpt::EarlyHashStats early;
};

/// Asynchronous authenticated state database.
///
/// Values are read directly from a height-versioned side table (D_direct) and written
/// through a per-block cache. Trie maintenance runs on background workers: retrieval
/// workers prefetch trie paths, storage-commit workers fold contract storage into the
/// account trie, and one hash worker plus one store worker persist account-trie nodes
/// as they reach their commit points.
///
/// The coordinator drives a block with begin_block, set, set_next_index, push_commit,
/// async_commit_account and finish_block. Only the coordinator may call those. get()
/// may be called from any thread.
class StateDb final : public StateReader {
  public:
    StateDb(kv::Store& store, StateDbOptions options);
    ~StateDb() override;

    StateDb(const StateDb&) = delete;
    StateDb& operator=(const StateDb&) = delete;

    //! Last durably committed height; nullopt on an empty store.
    [[nodiscard]] std::optional<uint64_t> height() const noexcept { return base_height_; }
    //! Account-trie root at height().
    [[nodiscard]] Digest root() const noexcept { return base_root_; }

    [[nodiscard]] Bytes get(const StateKey& key) const override;
    void set(const StateKey& key, Bytes value);

    // -- pipelined block ---------------------------------------------------------

    /// Opens block `height` with `tx_count` transactions. `last_explicit` maps each
    /// account to the highest index of a transaction naming it as sender or receiver.
    void begin_block(uint64_t height, uint64_t tx_count, std::unordered_map<Address, uint64_t> last_explicit);

    //! Progress report: transactions [0, i_next) are committed.
    void set_next_index(uint64_t i_next);

    //! Queues an account for storage commit and account-leaf update.
    void push_commit(const Address& address);

    //! Enqueues every account-trie node that has reached its commit point.
    void async_commit_account();

    //! Drains all workers, persists the meta record and returns the new root.
    //! Throws SimulatedCrash when a crash point fired during the block.
    Digest finish_block();

    [[nodiscard]] bool in_block() const noexcept { return in_block_; }

    // -- synchronous baseline ----------------------------------------------------

    //! Update, hash and store phases run one after another on the caller's thread.
    Digest commit_block_sync(uint64_t height, const std::map<StateKey, Bytes>& writes);

    // -- recovery and inspection -------------------------------------------------

    //! Discards every direct record and meta record above `height` and re-roots there.
    //! Throws CorruptMeta when no root was recorded for `height`.
    void recover(uint64_t height);

    //! Value by full account-trie (and storage-trie) traversal at height().
    [[nodiscard]] std::optional<Bytes> trie_get(const StateKey& key) const;

    //! Durable root recorded for `height`, if any.
    [[nodiscard]] std::optional<Digest> meta_root(uint64_t height) const;

    //! Blocking search-path load through 𝒞_node. Returns the leaf value when present.
    std::optional<Bytes> load_nodes(const Digest& root, ByteView key) const;

    [[nodiscard]] const BlockStats& last_block_stats() const noexcept { return stats_; }
    [[nodiscard]] CrashInjector& crash() noexcept { return crash_; }
    [[nodiscard]] const NodeCache& node_cache() const noexcept { return node_cache_; }
    [[nodiscard]] const StateCache& state_cache() const noexcept { return state_cache_; }
    [[nodiscard]] const StateDbOptions& options() const noexcept { return options_; }
    void set_commit_config(const CommitConfig& cfg);
    [[nodiscard]] DigestFn hash_fn() const noexcept { return options_.hash; }
    [[nodiscard]] uint64_t remaining() const noexcept { return remaining_.load(); }

  private:
    struct PendingAccount {
        std::optional<Bytes> body;
        std::map<Bytes32, Bytes> slots;
    };

    class Policy final : public mpt::HashPolicy {
      public:
        explicit Policy(const StateDb& db) : db_{db} {}
        [[nodiscard]] bool level_ready(uint32_t level) const override;
        [[nodiscard]] bool withheld(const mpt::Node& leaf) const override;
        [[nodiscard]] bool early() const override;

      private:
        const StateDb& db_;
    };

    void retrieval_loop();
    void commit_loop();
    void hash_loop();
    void store_loop();

    void commit_account(const Address& a);
    /// Applies `upd` to A's storage trie and commits it, collecting storage nodes and
    /// direct records in `out`. Returns the new account leaf value.
    Bytes apply_account(const Address& a, const PendingAccount& upd, uint64_t height, kv::WriteBatch& out);
    void close_stats();
    mpt::Trie& storage_trie(const Address& a, const std::optional<Digest>& root);
    void reroot();
    void record_error(std::exception_ptr e);
    void rethrow_error();
    void stop_workers();

    kv::Store& store_;
    StateDbOptions options_;
    NodeCache node_cache_;
    mutable StateCache state_cache_;

    std::optional<uint64_t> base_height_;
    Digest base_root_;
    std::unique_ptr<mpt::Trie> account_trie_;

    std::mutex storage_mutex_;
    std::unordered_map<Address, std::unique_ptr<mpt::Trie>> storage_tries_;
    std::array<std::mutex, 64> account_locks_;

    std::mutex pending_mutex_;
    std::unordered_map<Address, PendingAccount> pending_;

    // Block state.
    std::atomic<bool> in_block_{false};
    uint64_t block_height_{0};
    uint64_t tx_count_{0};
    std::unordered_map<Address, uint64_t> last_explicit_;
    std::atomic<uint64_t> remaining_{0};
    std::atomic<uint64_t> next_index_{0};
    std::atomic<uint64_t> inflight_{0};
    Policy policy_{*this};

    BlockingQueue<StateKey> q_ret_;
    BlockingQueue<Address> q_commit_;
    BlockingQueue<mpt::HashTask> q_hash_;
    BlockingQueue<mpt::HashedNode> q_store_;
    WorkTracker ret_tracker_;
    WorkTracker commit_tracker_;
    WorkTracker hash_tracker_;
    WorkTracker store_tracker_;

    std::mutex batch_mutex_;
    kv::WriteBatch store_batch_;

    CrashInjector crash_;
    std::mutex error_mutex_;
    std::exception_ptr error_;

    mutable std::atomic<uint64_t> direct_reads_{0};
    std::atomic<uint64_t> node_writes_{0};
    std::atomic<uint64_t> direct_writes_{0};
    std::atomic<uint64_t> hash_events_{0};
    std::atomic<uint64_t> store_events_{0};
    std::atomic<uint64_t> stale_drops_{0};
    std::atomic<uint64_t> retrieval_tasks_{0};
    std::atomic<uint64_t> storage_commits_{0};
    uint64_t node_reads_mark_{0};
    BlockStats stats_;

    std::vector<std::thread> threads_;
};

/// Light copy of a state reader: reads fall through to the base, writes stay private.
/// Records every key read from the base and every key written.
class StateView final : public StateReader {
  public:
    explicit StateView(const StateReader& base) : base_{&base} {}

    [[nodiscard]] Bytes get(const StateKey& key) const override;
    void set(const StateKey& key, Bytes value) { writes_.insert_or_assign(key, std::move(value)); }

    [[nodiscard]] const std::map<StateKey, Bytes>& writes() const noexcept { return writes_; }
    [[nodiscard]] const std::vector<StateKey>& reads() const noexcept { return reads_; }
    std::map<StateKey, Bytes> take_writes() { return std::move(writes_); }

  private:
    const StateReader* base_;
    std::map<StateKey, Bytes> writes_;
    mutable std::vector<StateKey> reads_;
};

//! Reader over a base plus a write overlay. The overlay wins.
class OverlayReader final : public StateReader {
  public:
    OverlayReader(const StateReader& base, const std::map<StateKey, Bytes>& overlay)
        : base_{&base}, overlay_{&overlay} {}
    [[nodiscard]] Bytes get(const StateKey& key) const override;

  private:
    const StateReader* base_;
    const std::map<StateKey, Bytes>* overlay_;
};

}  // namespace pexec::statedb
