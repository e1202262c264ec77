// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <pexec/common/bytes.hpp>

namespace pexec::kv {

//! Ordered group of puts and deletes applied all-or-nothing.
class WriteBatch {
  public:
    void put(Bytes key, Bytes value) { ops_.push_back({std::move(key), std::move(value)}); }
    void erase(Bytes key) { ops_.push_back({std::move(key), std::nullopt}); }

    [[nodiscard]] bool empty() const noexcept { return ops_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return ops_.size(); }
    void clear() noexcept { ops_.clear(); }

    struct Op {
        Bytes key;
        std::optional<Bytes> value;  // nullopt: delete
    };
    [[nodiscard]] const std::vector<Op>& ops() const noexcept { return ops_; }

  private:
    std::vector<Op> ops_;
};

/// Ordered byte-keyed store with atomic batches and concurrent point reads.
/// Keys compare as unsigned bytes.
class Store {
  public:
    virtual ~Store() = default;

    [[nodiscard]] virtual std::optional<Bytes> get(ByteView key) const = 0;

    //! Greatest entry with key <= `key` whose key starts with `prefix`.
    [[nodiscard]] virtual std::optional<std::pair<Bytes, Bytes>> floor(ByteView key, ByteView prefix) const = 0;

    //! Applies the whole batch atomically. Throws StorageFailure.
    virtual void write(const WriteBatch& batch) = 0;

    //! Visits entries whose key starts with `prefix` in key order. Stops when `fn` returns false.
    virtual void for_each_prefix(ByteView prefix, const std::function<bool(ByteView, ByteView)>& fn) const = 0;
};

class MemoryStore final : public Store {
  public:
    MemoryStore() = default;

    [[nodiscard]] std::optional<Bytes> get(ByteView key) const override;
    [[nodiscard]] std::optional<std::pair<Bytes, Bytes>> floor(ByteView key, ByteView prefix) const override;
    void write(const WriteBatch& batch) override;
    void for_each_prefix(ByteView prefix, const std::function<bool(ByteView, ByteView)>& fn) const override;

    //! Point-in-time copy. Used to model what survives a crash.
    [[nodiscard]] std::unique_ptr<MemoryStore> clone() const;
    [[nodiscard]] std::size_t size() const;

  private:
    mutable std::shared_mutex mutex_;
    std::map<Bytes, Bytes, std::less<>> map_;
};

//! Single-file SQLite backend. One connection, serialized by a mutex.
class SqliteStore final : public Store {
  public:
    explicit SqliteStore(const std::string& path);
    ~SqliteStore() override;

    SqliteStore(const SqliteStore&) = delete;
    SqliteStore& operator=(const SqliteStore&) = delete;

    [[nodiscard]] std::optional<Bytes> get(ByteView key) const override;
    [[nodiscard]] std::optional<std::pair<Bytes, Bytes>> floor(ByteView key, ByteView prefix) const override;
    void write(const WriteBatch& batch) override;
    void for_each_prefix(ByteView prefix, const std::function<bool(ByteView, ByteView)>& fn) const override;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

//! Opens a backend by name: "memory", or "sqlite" at `path`.
std::unique_ptr<Store> open_store(const std::string& backend, const std::string& path);

}  // namespace pexec::kv
