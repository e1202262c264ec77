// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_set>
#include <variant>
#include <vector>

#include <pexec/common/bytes.hpp>
#include <pexec/common/keccak.hpp>
#include <pexec/mpt/nibbles.hpp>
#include <pexec/mpt/node_codec.hpp>
#include <pexec/mpt/node_reader.hpp>

namespace pexec::mpt {

//! Exclusive per-node lock. One byte; blocks on a futex instead of spinning.
class NodeLock {
  public:
    void lock() noexcept {
        while (flag_.test_and_set(std::memory_order_acquire)) {
            flag_.wait(true, std::memory_order_relaxed);
        }
    }
    bool try_lock() noexcept { return !flag_.test_and_set(std::memory_order_acquire); }
    void unlock() noexcept {
        flag_.clear(std::memory_order_release);
        flag_.notify_one();
    }

  private:
    std::atomic_flag flag_ = ATOMIC_FLAG_INIT;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

//! Empty, a persisted node identified by digest, or an in-memory node.
using NodeRef = std::variant<std::monostate, Digest, NodePtr>;

inline constexpr uint64_t kNotQueued = std::numeric_limits<uint64_t>::max();

//! Levels at or beyond this share one commit point and one dirty bucket.
inline constexpr uint32_t kDeepLevel = 4;

/// In-memory trie node.
///
/// Structure (kind, path, children, value, parent) changes only under the owning trie's
/// exclusive lock. The pipeline fields (dirty, hash, queued_version, early_*) may also
/// change under the shared lock, guarded by `lock`.
struct Node : std::enable_shared_from_this<Node> {
    NodeKind kind{NodeKind::leaf};
    Nibbles path;
    std::unique_ptr<std::array<NodeRef, 16>> children;
    NodeRef next;
    std::optional<Bytes> value;
    //! Leaf key before hashing (address or slot). Memory only, never serialized.
    Bytes preimage;

    Node* parent{nullptr};
    //! Number of key nibbles consumed above this node.
    uint32_t level{0};
    bool attached{true};
    bool dirty{true};
    std::optional<Digest> hash;
    //! Bumped on every modification; the stale check compares against it.
    uint64_t version{0};
    uint64_t queued_version{kNotQueued};
    bool early_hashed{false};
    uint8_t early_bucket{0};
    uint8_t dirty_bucket{0xff};

    mutable NodeLock lock;
};

//! Serializes `node` using its children's digests. Throws ChildNotHashed if a child is dirty.
NodeData snapshot(const Node& node);

//! Hashes `node`, caching the digest and clearing the dirty flag.
//! Children must already carry digests (ChildNotHashed otherwise).
Digest hash_node(Node& node, DigestFn hash = keccak256);

//! Decides when the pipelined workflow may hash a node early.
class HashPolicy {
  public:
    virtual ~HashPolicy() = default;
    //! True once a node at `level` has reached its commit point.
    [[nodiscard]] virtual bool level_ready(uint32_t level) const = 0;
    //! True for leaves that must not be hashed yet even at their commit point.
    [[nodiscard]] virtual bool withheld(const Node& leaf) const = 0;
    //! True while hashing counts as early (transactions still remain in the block).
    [[nodiscard]] virtual bool early() const = 0;
};

struct HashTask {
    NodePtr node;
    uint64_t version{0};
};

struct HashedNode {
    NodePtr node;
    uint64_t version{0};
    Digest digest;
    Bytes encoding;
    //! Set for leaves with a known preimage: the state entry the leaf carries.
    std::optional<std::pair<Bytes, Bytes>> leaf_entry;
};

struct NodeWrite {
    Digest digest;
    Bytes encoding;
};

struct CommitResult {
    Digest root;
    std::vector<NodeWrite> nodes;
    //! (preimage, value) for every committed leaf whose preimage is known.
    std::vector<std::pair<Bytes, Bytes>> leaves;
};

struct LevelCensus {
    uint64_t nodes{0};
    uint64_t branches{0};
    uint64_t full_branches{0};
};

//! Counters of early hashes and later re-modifications, bucketed by min(level, kDeepLevel).
struct EarlyHashStats {
    std::array<uint64_t, kDeepLevel + 1> early_hashed{};
    std::array<uint64_t, kDeepLevel + 1> redirtied{};
};

/// Merkle Patricia Trie over arbitrary byte keys.
///
/// Readers (get, prove, root_hash) may run concurrently. Structural mutation (insert,
/// commit) takes the trie exclusively. The pipeline entry points run under the shared
/// lock and coordinate through per-node locks.
class Trie {
  public:
    explicit Trie(const NodeReader& reader, DigestFn hash = keccak256);
    Trie(const NodeReader& reader, const Digest& root, DigestFn hash = keccak256);

    Trie(const Trie&) = delete;
    Trie& operator=(const Trie&) = delete;

    [[nodiscard]] std::optional<Bytes> get(ByteView key) const;

    //! Inserts or overwrites. `value` must be non-empty. Returns false when nothing changed.
    bool insert(ByteView key, Bytes value, Bytes preimage = {});

    //! Hashes all dirty nodes bottom-up and returns them for persistence.
    CommitResult commit();

    //! Throws ChildNotHashed while the root is dirty.
    [[nodiscard]] Digest root_hash() const;

    //! Serialized nodes from root to the leaf holding `key`. Throws KeyAbsent.
    [[nodiscard]] std::vector<Bytes> prove(ByteView key) const;

    [[nodiscard]] std::size_t dirty_count() const;
    [[nodiscard]] bool is_clean() const { return dirty_count() == 0; }

    //! Node counts per level, walking persisted nodes through the reader where needed.
    [[nodiscard]] std::vector<LevelCensus> census() const;

    [[nodiscard]] EarlyHashStats early_hash_stats() const;

    // -- pipelined workflow -------------------------------------------------------

    //! Dirty nodes whose children are clean and which the policy admits. Each node is
    //! returned at most once per version.
    std::vector<HashTask> collect_hashable(const HashPolicy& policy);

    /// Hashes the task node if it is unmodified since it was queued and still hashable,
    /// then keeps hashing parents while they are hashable. Each hashed node goes to
    /// `emit`. Stale tasks are dropped.
    void hash_ascend(const HashTask& task, const HashPolicy& policy,
                     const std::function<void(HashedNode&&)>& emit);

    //! Runs `fn` while holding the node lock if the node is attached, clean and still at
    //! `version`. Returns whether `fn` ran.
    bool if_current(const Node& node, uint64_t version, const std::function<void()>& fn) const;

  private:
    class DirtyIndex {
      public:
        void put(Node& n);
        void erase(Node& n);
        [[nodiscard]] std::size_t size() const;
        std::vector<Node*> bucket_nodes(uint32_t bucket) const;
        void clear();

      private:
        mutable std::mutex mutex_;
        std::array<std::unordered_set<Node*>, kDeepLevel + 1> buckets_;
    };

    bool insert_at(NodeRef& slot, Node* parent, uint32_t level, NibblesView path, Bytes& value,
                   Bytes& preimage);
    NodePtr resolve(NodeRef& slot, Node* parent, uint32_t level);
    NodePtr make_node(NodeKind kind, Node* parent, uint32_t level);
    void install(NodeRef& slot, Node* parent, uint32_t level, NibblesView prefix, const NodePtr& branch);
    void touch(Node& n);
    void detach(Node& n);
    Digest hash_subtree(Node& n, CommitResult& out);
    void mark_hashed(Node& n, bool early);
    [[nodiscard]] static bool children_clean(const Node& n, bool lock_children);
    [[nodiscard]] Digest root_hash_locked() const;
    std::optional<Bytes> get_persisted(Digest digest, NibblesView rest) const;

    const NodeReader* reader_;
    DigestFn hash_;
    mutable std::shared_mutex mutex_;
    NodeRef root_;
    DirtyIndex dirty_;
    std::array<std::atomic<uint64_t>, kDeepLevel + 1> early_hashed_{};
    std::array<std::atomic<uint64_t>, kDeepLevel + 1> redirtied_{};
};

//! Independent verifier: recomputes the hash chain from `root` through `proof`.
//! Returns the proved value, or nullopt if the proof is invalid or does not cover `key`.
std::optional<Bytes> verify_proof(const Digest& root, ByteView key, const std::vector<Bytes>& proof,
                                  DigestFn hash = keccak256);

}  // namespace pexec::mpt
