// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/executor/types.hpp>

namespace pexec::executor {

namespace {

    void put_operand(Bytes& out, const Operand& o) {
        out.push_back(o.use_acc ? 1 : 0);
        out.append(to_bytes32(o.imm).view());
    }

}  // namespace

Bytes encode_block(const Block& block) {
    Bytes out;
    append_u64_be(out, block.height);
    append_u64_be(out, block.transactions.size());
    for (const Transaction& tx : block.transactions) {
        append_u64_be(out, tx.index);
        out.append(tx.sender.view());
        out.append(tx.receiver.view());
        out.append(to_bytes32(tx.value).view());
        append_u64_be(out, tx.nonce);
        if (!tx.program) {
            out.push_back(0);
            continue;
        }
        out.push_back(1);
        append_u32_be(out, static_cast<uint32_t>(tx.program->code.size()));
        for (const Instruction& ins : tx.program->code) {
            out.push_back(static_cast<uint8_t>(ins.op));
            put_operand(out, ins.a);
            put_operand(out, ins.b);
            out.append(ins.target.view());
        }
    }
    return out;
}

}  // namespace pexec::executor
