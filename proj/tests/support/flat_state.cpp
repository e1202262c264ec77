// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

namespace pexec::testing {

using executor::Opcode;
using statedb::AccountBody;
using statedb::StateKey;

void FlatState::apply(const executor::Transaction& tx) {
    Map next;  // this transaction's writes, applied only on success
    auto lookup = [&](const StateKey& k) {
        if (auto it = next.find(k); it != next.end()) {
            return it->second;
        }
        return get(k);
    };
    auto body = [&](const Address& a) { return AccountBody::decode(lookup(StateKey::account(a))); };
    auto put_body = [](Map& m, const Address& a, const AccountBody& b) { m[StateKey::account(a)] = b.encode(); };

    AccountBody s = body(tx.sender);
    AccountBody nonce_only = s;
    nonce_only.nonce += 1;
    if (tx.nonce != s.nonce || s.balance < tx.value) {
        put_body(state_, tx.sender, nonce_only);
        return;
    }

    s.nonce += 1;
    s.balance -= tx.value;
    put_body(next, tx.sender, s);
    AccountBody r = body(tx.receiver);
    r.balance += tx.value;
    put_body(next, tx.receiver, r);

    if (tx.program && r.is_contract()) {
        u256 acc = 0;
        auto val = [&](const executor::Operand& o) { return o.use_acc ? acc : o.imm; };
        auto slot_get = [&](const Address& c, const u256& k) {
            return statedb::decode_word(lookup(StateKey::storage(c, to_bytes32(k))));
        };
        for (const auto& ins : tx.program->code) {
            if (ins.op == Opcode::load) {
                acc = slot_get(tx.receiver, val(ins.a));
            } else if (ins.op == Opcode::store) {
                next[StateKey::storage(tx.receiver, to_bytes32(val(ins.a)))] = statedb::encode_word(val(ins.b));
            } else if (ins.op == Opcode::add) {
                acc += val(ins.a);
            } else if (ins.op == Opcode::sub) {
                acc -= val(ins.a);
            } else if (ins.op == Opcode::transfer) {
                AccountBody c = body(tx.receiver);
                const u256 amount = val(ins.a);
                if (c.balance < amount) {
                    put_body(state_, tx.sender, nonce_only);
                    return;
                }
                c.balance -= amount;
                put_body(next, tx.receiver, c);
                AccountBody t = body(ins.target);
                t.balance += amount;
                put_body(next, ins.target, t);
            } else if (ins.op == Opcode::call && body(ins.target).is_contract()) {
                next[StateKey::storage(ins.target, Bytes32{})] = statedb::encode_word(slot_get(ins.target, 0) + 1);
            }
        }
    }
    for (auto& [k, v] : next) {
        state_[k] = std::move(v);
    }
}

}  // namespace pexec::testing
