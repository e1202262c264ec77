// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/executor/execute.hpp>

#include <algorithm>

namespace pexec::executor {

using statedb::AccountBody;

namespace {

    //! Buffers a transaction's writes so a failed program can be dropped as a whole.
    class TxContext {
      public:
        explicit TxContext(statedb::StateView& view) : view_{view} {}

        Bytes read(const StateKey& k) const {
            if (auto it = local_.find(k); it != local_.end()) {
                return it->second;
            }
            return view_.get(k);
        }
        AccountBody account(const Address& a) const { return AccountBody::decode(read(StateKey::account(a))); }

        void write(const StateKey& k, Bytes v) { local_.insert_or_assign(k, std::move(v)); }
        void write_account(const Address& a, const AccountBody& b) { write(StateKey::account(a), b.encode()); }

        void apply() {
            for (auto& [k, v] : local_) {
                view_.set(k, std::move(v));
            }
            local_.clear();
        }

      private:
        statedb::StateView& view_;
        std::map<StateKey, Bytes> local_;
    };

    bool run_program(const MiniProgram& program, const Address& contract, TxContext& ctx) {
        u256 acc{0};
        auto value = [&](const Operand& o) { return o.use_acc ? acc : o.imm; };
        auto slot = [&](const Operand& o) { return StateKey::storage(contract, to_bytes32(value(o))); };

        for (const Instruction& ins : program.code) {
            switch (ins.op) {
                case Opcode::load:
                    acc = statedb::decode_word(ctx.read(slot(ins.a)));
                    break;
                case Opcode::store:
                    ctx.write(slot(ins.a), statedb::encode_word(value(ins.b)));
                    break;
                case Opcode::add:
                    acc += value(ins.a);
                    break;
                case Opcode::sub:
                    acc -= value(ins.a);
                    break;
                case Opcode::transfer: {
                    const u256 amount = value(ins.a);
                    AccountBody from = ctx.account(contract);
                    if (from.balance < amount) {
                        return false;
                    }
                    from.balance -= amount;
                    ctx.write_account(contract, from);
                    AccountBody to = ctx.account(ins.target);
                    to.balance += amount;
                    ctx.write_account(ins.target, to);
                    break;
                }
                case Opcode::call: {
                    if (!ctx.account(ins.target).is_contract()) {
                        break;
                    }
                    const StateKey k = StateKey::storage(ins.target, Bytes32{});
                    ctx.write(k, statedb::encode_word(statedb::decode_word(ctx.read(k)) + 1));
                    break;
                }
            }
        }
        return true;
    }

}  // namespace

ExecutionRecord execute_tx(const Transaction& tx, statedb::StateView& view) {
    ExecutionRecord rec;
    rec.index = tx.index;

    TxContext ctx{view};
    const AccountBody sender = ctx.account(tx.sender);
    AccountBody bumped = sender;
    ++bumped.nonce;

    if (tx.nonce != sender.nonce) {
        rec.status = TxStatus::bad_nonce;
    } else if (sender.balance < tx.value) {
        rec.status = TxStatus::insufficient_balance;
    } else {
        AccountBody debited = bumped;
        debited.balance -= tx.value;
        ctx.write_account(tx.sender, debited);
        AccountBody receiver = ctx.account(tx.receiver);
        receiver.balance += tx.value;
        ctx.write_account(tx.receiver, receiver);
        if (tx.program && receiver.is_contract() && !run_program(*tx.program, tx.receiver, ctx)) {
            rec.status = TxStatus::reverted;
        }
    }

    if (rec.status == TxStatus::ok) {
        ctx.apply();
    } else {
        view.set(StateKey::account(tx.sender), bumped.encode());
    }

    rec.reads = view.reads();
    std::sort(rec.reads.begin(), rec.reads.end());
    rec.reads.erase(std::unique(rec.reads.begin(), rec.reads.end()), rec.reads.end());
    rec.writes = view.writes();
    return rec;
}

}  // namespace pexec::executor
