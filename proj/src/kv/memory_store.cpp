// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <mutex>

#include <pexec/common/errors.hpp>
#include <pexec/kv/store.hpp>

namespace pexec::kv {

std::optional<Bytes> MemoryStore::get(ByteView key) const {
    std::shared_lock lock{mutex_};
    auto it = map_.find(key);
    if (it == map_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::pair<Bytes, Bytes>> MemoryStore::floor(ByteView key, ByteView prefix) const {
    std::shared_lock lock{mutex_};
    auto it = map_.upper_bound(key);
    if (it == map_.begin()) {
        return std::nullopt;
    }
    --it;
    if (!ByteView{it->first}.starts_with(prefix)) {
        return std::nullopt;
    }
    return *it;
}

void MemoryStore::write(const WriteBatch& batch) {
    std::unique_lock lock{mutex_};
    for (const auto& op : batch.ops()) {
        if (op.value) {
            map_.insert_or_assign(op.key, *op.value);
        } else {
            map_.erase(op.key);
        }
    }
}

void MemoryStore::for_each_prefix(ByteView prefix, const std::function<bool(ByteView, ByteView)>& fn) const {
    std::shared_lock lock{mutex_};
    for (auto it = map_.lower_bound(prefix); it != map_.end() && ByteView{it->first}.starts_with(prefix); ++it) {
        if (!fn(it->first, it->second)) {
            return;
        }
    }
}

std::unique_ptr<MemoryStore> MemoryStore::clone() const {
    auto out = std::make_unique<MemoryStore>();
    std::shared_lock lock{mutex_};
    out->map_ = map_;
    return out;
}

std::size_t MemoryStore::size() const {
    std::shared_lock lock{mutex_};
    return map_.size();
}

std::unique_ptr<Store> open_store(const std::string& backend, const std::string& path) {
    if (backend == "memory") {
        return std::make_unique<MemoryStore>();
    }
    if (backend == "sqlite") {
        return std::make_unique<SqliteStore>(path);
    }
    throw StorageFailure("unknown store backend: " + backend);
}

}  // namespace pexec::kv
