// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/statedb/caches.hpp>

#include <pexec/common/errors.hpp>

namespace pexec::statedb {

Bytes node_key(const Digest& digest) {
    Bytes k{ns::node};
    k.append(digest.view());
    return k;
}

Bytes direct_prefix(const StateKey& key) {
    const Bytes enc = key.encode();
    Bytes k{ns::direct};
    k.push_back(static_cast<uint8_t>(enc.size()));
    k.append(enc);
    return k;
}

Bytes direct_key(const StateKey& key, uint64_t height) {
    Bytes k = direct_prefix(key);
    append_u64_be(k, height);
    return k;
}

Bytes meta_key(uint64_t height) {
    Bytes k{ns::meta};
    append_u64_be(k, height);
    return k;
}

namespace {

    std::shared_ptr<const mpt::NodeData> load_verified(const kv::Store& store, const Digest& digest, DigestFn hash) {
        auto bytes = store.get(node_key(digest));
        if (!bytes) {
            throw MissingNode("node " + to_hex(digest) + " not in node database");
        }
        if (hash(*bytes) != digest) {
            throw StorageFailure("node " + to_hex(digest) + " fails its hash check");
        }
        return std::make_shared<const mpt::NodeData>(mpt::deserialize(*bytes));
    }

}  // namespace

std::shared_ptr<const mpt::NodeData> StoreNodeReader::read_node(const Digest& digest) const {
    return load_verified(*store_, digest, hash_);
}

std::shared_ptr<const mpt::NodeData> NodeCache::read_node(const Digest& digest) const {
    if (auto hit = map_.find(digest)) {
        return *hit;
    }
    backend_reads_.fetch_add(1, std::memory_order_relaxed);
    return map_.emplace(digest, load_verified(*store_, digest, hash_));
}

bool NodeCache::verify() const {
    bool ok = true;
    map_.for_each([&](const Digest& d, const std::shared_ptr<const mpt::NodeData>& n) {
        ok = ok && hash_(mpt::serialize(*n)) == d;
    });
    return ok;
}

}  // namespace pexec::statedb
