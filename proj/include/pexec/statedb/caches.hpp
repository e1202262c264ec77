// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

#include <pexec/kv/store.hpp>
#include <pexec/mpt/node_reader.hpp>
#include <pexec/statedb/account.hpp>

namespace pexec::statedb {

template <typename K, typename V, std::size_t Shards = 32>
class ShardedMap {
  public:
    std::optional<V> find(const K& key) const {
        const Shard& s = shard(key);
        std::shared_lock lock{s.mutex};
        auto it = s.map.find(key);
        if (it == s.map.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    void assign(const K& key, V value) {
        Shard& s = shard(key);
        std::unique_lock lock{s.mutex};
        s.map.insert_or_assign(key, std::move(value));
    }

    //! Inserts only when absent. Returns the value now stored.
    V emplace(const K& key, V value) {
        Shard& s = shard(key);
        std::unique_lock lock{s.mutex};
        return s.map.try_emplace(key, std::move(value)).first->second;
    }

    void clear() {
        for (Shard& s : shards_) {
            std::unique_lock lock{s.mutex};
            s.map.clear();
        }
    }

    [[nodiscard]] std::size_t size() const {
        std::size_t n = 0;
        for (const Shard& s : shards_) {
            std::shared_lock lock{s.mutex};
            n += s.map.size();
        }
        return n;
    }

    void for_each(const std::function<void(const K&, const V&)>& fn) const {
        for (const Shard& s : shards_) {
            std::shared_lock lock{s.mutex};
            for (const auto& [k, v] : s.map) {
                fn(k, v);
            }
        }
    }

  private:
    struct Shard {
        mutable std::shared_mutex mutex;
        std::unordered_map<K, V> map;
    };

    Shard& shard(const K& key) { return shards_[std::hash<K>{}(key) % Shards]; }
    const Shard& shard(const K& key) const { return shards_[std::hash<K>{}(key) % Shards]; }

    std::array<Shard, Shards> shards_;
};

//! 𝒞_state: values written or read during the current block.
using StateCache = ShardedMap<StateKey, Bytes>;

//! Key namespaces inside the backing store.
namespace ns {
    inline constexpr uint8_t node = 'n';
    inline constexpr uint8_t direct = 'd';
    inline constexpr uint8_t meta = 'm';
}  // namespace ns

Bytes node_key(const Digest& digest);
//! 'd' | encoded length | StateKey encoding | height (BE8). Ordered by height within a key.
Bytes direct_key(const StateKey& key, uint64_t height);
Bytes direct_prefix(const StateKey& key);
Bytes meta_key(uint64_t height);

//! Reads nodes straight from the store with no caching. Used for oracle traversals.
class StoreNodeReader final : public mpt::NodeReader {
  public:
    StoreNodeReader(const kv::Store& store, DigestFn hash) : store_{&store}, hash_{hash} {}
    [[nodiscard]] std::shared_ptr<const mpt::NodeData> read_node(const Digest& digest) const override;

  private:
    const kv::Store* store_;
    DigestFn hash_;
};

/// 𝒞_node: decoded nodes by digest, filled from D_node on miss. Every loaded node is
/// verified against its digest before it enters the cache.
class NodeCache final : public mpt::NodeReader {
  public:
    NodeCache(const kv::Store& store, DigestFn hash) : store_{&store}, hash_{hash} {}

    [[nodiscard]] std::shared_ptr<const mpt::NodeData> read_node(const Digest& digest) const override;

    [[nodiscard]] bool contains(const Digest& digest) const { return map_.find(digest).has_value(); }
    [[nodiscard]] std::size_t size() const { return map_.size(); }
    void clear() { map_.clear(); }

    //! Backend reads caused by misses.
    [[nodiscard]] uint64_t backend_reads() const noexcept { return backend_reads_.load(); }

    //! Re-hashes every cached node. Test aid.
    [[nodiscard]] bool verify() const;

  private:
    const kv::Store* store_;
    DigestFn hash_;
    mutable ShardedMap<Digest, std::shared_ptr<const mpt::NodeData>> map_;
    mutable std::atomic<uint64_t> backend_reads_{0};
};

}  // namespace pexec::statedb
