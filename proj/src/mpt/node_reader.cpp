// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/mpt/node_reader.hpp>

#include <mutex>

#include <pexec/common/errors.hpp>

namespace pexec::mpt {

std::shared_ptr<const NodeData> MemoryNodeDb::read_node(const Digest& digest) const {
    reads_.fetch_add(1, std::memory_order_relaxed);
    std::shared_lock lock{mutex_};
    auto it = nodes_.find(digest);
    if (it == nodes_.end()) {
        throw MissingNode("node " + to_hex(digest) + " not in node database");
    }
    return std::make_shared<const NodeData>(deserialize(it->second));
}

void MemoryNodeDb::put(const Digest& digest, Bytes encoding) {
    std::unique_lock lock{mutex_};
    nodes_.insert_or_assign(digest, std::move(encoding));
}

std::size_t MemoryNodeDb::size() const {
    std::shared_lock lock{mutex_};
    return nodes_.size();
}

bool MemoryNodeDb::verify_integrity() const {
    std::shared_lock lock{mutex_};
    for (const auto& [digest, bytes] : nodes_) {
        if (hash_(bytes) != digest) {
            return false;
        }
    }
    return true;
}

}  // namespace pexec::mpt
