// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <shared_mutex>

#include <pexec/mpt/node_codec.hpp>

namespace pexec::mpt {

//! Resolves Digest-form node references. Implementations must allow concurrent calls.
class NodeReader {
  public:
    virtual ~NodeReader() = default;

    //! Throws MissingNode when no node with this digest is persisted.
    [[nodiscard]] virtual std::shared_ptr<const NodeData> read_node(const Digest& digest) const = 0;
};

//! Map-backed node database for standalone tries and tests.
class MemoryNodeDb final : public NodeReader {
  public:
    explicit MemoryNodeDb(DigestFn hash = keccak256) : hash_{hash} {}

    [[nodiscard]] std::shared_ptr<const NodeData> read_node(const Digest& digest) const override;

    void put(const Digest& digest, Bytes encoding);
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] uint64_t reads() const noexcept { return reads_.load(); }

    //! Every stored value re-hashes to its key.
    [[nodiscard]] bool verify_integrity() const;

  private:
    DigestFn hash_;
    mutable std::shared_mutex mutex_;
    std::map<Digest, Bytes> nodes_;
    mutable std::atomic<uint64_t> reads_{0};
};

}  // namespace pexec::mpt
