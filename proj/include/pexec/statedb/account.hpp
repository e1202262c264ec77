// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include <boost/multiprecision/cpp_int.hpp>

#include <pexec/common/bytes.hpp>

namespace pexec {

using u256 = boost::multiprecision::uint256_t;

Bytes32 to_bytes32(const u256& v);
u256 to_u256(ByteView be);  // up to 32 big-endian bytes; empty is zero

}  // namespace pexec

namespace pexec::statedb {

//! Account address with an optional contract storage slot. Encodes as A or A||slot.
struct StateKey {
    Address address;
    std::optional<Bytes32> slot;

    [[nodiscard]] Bytes encode() const;
    static std::optional<StateKey> decode(ByteView encoded);

    static StateKey account(const Address& a) { return {a, std::nullopt}; }
    static StateKey storage(const Address& a, const Bytes32& s) { return {a, s}; }

    friend auto operator<=>(const StateKey&, const StateKey&) = default;
    friend bool operator==(const StateKey&, const StateKey&) = default;
};

//! Account fields visible to execution. The storage root lives only in the account trie.
struct AccountBody {
    u256 balance{0};
    uint64_t nonce{0};
    std::optional<Digest> code_hash;

    [[nodiscard]] bool is_contract() const noexcept { return code_hash.has_value(); }

    //! balance (32) | nonce (8) | code presence (1) | code hash (32)?
    [[nodiscard]] Bytes encode() const;
    //! Empty input decodes to the zero account. Throws MalformedEncoding.
    static AccountBody decode(ByteView encoded);

    friend bool operator==(const AccountBody&, const AccountBody&) = default;
};

//! Account trie leaf payload.
struct AccountState {
    AccountBody body;
    std::optional<Digest> storage_root;

    //! body encoding | root presence (1) | storage root (32)?
    [[nodiscard]] Bytes encode() const;
    static AccountState decode(ByteView encoded);

    friend bool operator==(const AccountState&, const AccountState&) = default;
};

//! Slot values are 32-byte big-endian words; absent reads as zero.
Bytes encode_word(const u256& v);
u256 decode_word(ByteView encoded);

}  // namespace pexec::statedb

template <>
struct std::hash<pexec::statedb::StateKey> {
    std::size_t operator()(const pexec::statedb::StateKey& k) const noexcept {
        std::size_t h = std::hash<pexec::Address>{}(k.address);
        if (k.slot) {
            h ^= std::hash<pexec::Bytes32>{}(*k.slot) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};
