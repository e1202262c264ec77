// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <pexec/common/bytes.hpp>
#include <pexec/statedb/account.hpp>

namespace pexec::executor {

using statedb::StateKey;

enum class Opcode : uint8_t {
    load,      // acc = storage[slot(a)]
    store,     // storage[slot(a)] = value(b)
    add,       // acc += value(a)
    sub,       // acc -= value(a)
    transfer,  // move value(a) from the contract to `target`
    call,      // storage[target][0] += 1 when target is a contract
};

//! Immediate word or the accumulator.
struct Operand {
    bool use_acc{false};
    u256 imm{0};

    static Operand acc() { return {true, 0}; }
    static Operand word(u256 v) { return {false, std::move(v)}; }

    friend bool operator==(const Operand&, const Operand&) = default;
};

struct Instruction {
    Opcode op{Opcode::load};
    Operand a;
    Operand b;
    Address target;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

//! Straight-line contract program. Arithmetic wraps modulo 2^256.
struct MiniProgram {
    std::vector<Instruction> code;

    friend bool operator==(const MiniProgram&, const MiniProgram&) = default;
};

struct Transaction {
    uint64_t index{0};
    Address sender;
    Address receiver;
    u256 value{0};
    uint64_t nonce{0};
    std::optional<MiniProgram> program;

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct Block {
    uint64_t height{0};
    std::vector<Transaction> transactions;
};

enum class TxStatus : uint8_t {
    ok,
    bad_nonce,
    insufficient_balance,
    reverted,  // program failed; only the nonce bump is kept
};

struct ExecutionRecord {
    uint64_t index{0};
    //! Committed prefix length the execution observed.
    uint64_t snapshot{0};
    TxStatus status{TxStatus::ok};
    std::vector<StateKey> reads;  // sorted, unique
    std::map<StateKey, Bytes> writes;
};

//! Byte encoding used for block fingerprints in reproducibility checks.
Bytes encode_block(const Block& block);

}  // namespace pexec::executor
