// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <random>

#include <pexec/common/bytes.hpp>
#include <pexec/executor/types.hpp>
#include <pexec/statedb/account.hpp>

namespace pexec::testing {

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
    Bytes out(n, 0);
    for (auto& b : out) {
        b = static_cast<uint8_t>(rng());
    }
    return out;
}

inline Address addr(uint8_t tag) {
    Address a;
    a.bytes.fill(tag);
    return a;
}

inline Bytes hex(std::string_view s) { return *from_hex(s); }

inline executor::Transaction transfer(uint64_t index, const Address& from, const Address& to, uint64_t value,
                                      uint64_t nonce = 0) {
    executor::Transaction tx;
    tx.index = index;
    tx.sender = from;
    tx.receiver = to;
    tx.value = value;
    tx.nonce = nonce;
    return tx;
}

/// Flat-map interpreter: applies transactions one by one to a plain map with the same
/// transfer and program semantics as the engine, without any trie or state database.
class FlatState {
  public:
    using Map = std::map<statedb::StateKey, Bytes>;

    explicit FlatState(Map init) : state_{std::move(init)} {}

    [[nodiscard]] Bytes get(const statedb::StateKey& k) const {
        auto it = state_.find(k);
        return it == state_.end() ? Bytes{} : it->second;
    }

    void apply(const executor::Transaction& tx);

    [[nodiscard]] const Map& state() const { return state_; }

  private:
    Map state_;
};

}  // namespace pexec::testing
