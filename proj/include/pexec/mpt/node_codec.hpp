// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <optional>

#include <pexec/common/bytes.hpp>
#include <pexec/common/keccak.hpp>
#include <pexec/mpt/nibbles.hpp>

namespace pexec::mpt {

enum class NodeKind : uint8_t {
    branch = 0,
    extension = 1,
    leaf = 2,
};

//! Persisted form of a trie node: every child is referenced by digest.
struct NodeData {
    NodeKind kind{NodeKind::leaf};
    Nibbles path;                                      // extension / leaf
    std::array<std::optional<Digest>, 16> children{};  // branch
    std::optional<Digest> next;                        // extension
    std::optional<Bytes> value;                        // leaf, or branch value slot

    friend bool operator==(const NodeData&, const NodeData&) = default;
};

/// Canonical encoding
///
///   branch:    0x00 | u16 child bitmap | digest per set bit (ascending) | value?
///   extension: 0x01 | path | digest
///   leaf:      0x02 | path | value
///
///   path  = u32 nibble count | nibbles packed two per byte, odd tail low-padded with 0
///   value = u32 length | bytes            (branch: preceded by a 0x00/0x01 presence byte)
///
/// All integers are big-endian. A branch must populate at least two of its 17 slots,
/// an extension must have a non-empty path, and values are never empty.
Bytes serialize(const NodeData& node);

//! Throws MalformedEncoding on any deviation from the canonical encoding.
NodeData deserialize(ByteView encoded);

//! Digest of the empty trie.
Digest empty_root(DigestFn hash = keccak256) noexcept;

}  // namespace pexec::mpt
