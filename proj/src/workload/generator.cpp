// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/workload/generator.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <pexec/common/keccak.hpp>

namespace pexec::workload {

using executor::Instruction;
using executor::Opcode;
using executor::Operand;
using statedb::AccountBody;
using statedb::StateKey;

namespace {

    Address derive(std::string_view tag, uint64_t i) {
        Bytes in{to_view(tag)};
        append_u64_be(in, i);
        const Digest d = keccak256(in);
        return *Address::from_view(d.view().substr(12));
    }

    Digest code_hash(uint64_t j) {
        Bytes in{to_view("pexec-code")};
        append_u64_be(in, j);
        return keccak256(in);
    }

    std::vector<uint64_t> permutation(uint64_t n, std::mt19937_64& rng) {
        std::vector<uint64_t> p(n);
        std::iota(p.begin(), p.end(), 0);
        for (uint64_t i = n; i > 1; --i) {
            std::swap(p[i - 1], p[std::uniform_int_distribution<uint64_t>{0, i - 1}(rng)]);
        }
        return p;
    }

    bool contains(const std::vector<Address>& v, const Address& a) { return std::find(v.begin(), v.end(), a) != v.end(); }

}  // namespace

Address account_address(uint64_t i) { return derive("pexec-account", i); }
Address contract_address(uint64_t j) { return derive("pexec-contract", j); }

u256 genesis_balance() { return u256{1'000'000'000'000'000'000ull}; }

std::map<StateKey, Bytes> genesis_writes(const WorkloadSpec& spec) {
    spec.validate();
    std::map<StateKey, Bytes> out;
    AccountBody user;
    user.balance = genesis_balance();
    for (uint64_t i = 0; i < spec.num_accounts; ++i) {
        out.emplace(StateKey::account(account_address(i)), user.encode());
    }
    for (uint64_t j = 0; j < spec.num_contracts; ++j) {
        const Address c = contract_address(j);
        AccountBody body;
        body.balance = genesis_balance();
        body.code_hash = code_hash(j);
        out.emplace(StateKey::account(c), body.encode());
        for (uint32_t s = 0; s < spec.contract_slots; ++s) {
            const u256 v = (uint64_t{s} * 7 + j) % spec.contract_slots;
            out.emplace(StateKey::storage(c, to_bytes32(s)), statedb::encode_word(v));
        }
    }
    return out;
}

Generator::Generator(WorkloadSpec spec)
    : spec_{spec},
      account_zipf_{std::max<uint64_t>(spec.num_accounts, 1), spec.zipf_theta},
      contract_zipf_{std::max<uint64_t>(spec.num_contracts, 1), spec.zipf_theta} {
    spec_.validate();
    accounts_.reserve(spec_.num_accounts);
    for (uint64_t i = 0; i < spec_.num_accounts; ++i) {
        accounts_.push_back(account_address(i));
    }
    for (uint64_t j = 0; j < spec_.num_contracts; ++j) {
        contracts_.push_back(contract_address(j));
    }
    std::mt19937_64 rng{spec_.seed ^ 0x5eedf00dull};
    account_rank_ = permutation(spec_.num_accounts, rng);
    contract_rank_ = permutation(spec_.num_contracts, rng);
    if (spec_.contract_ratio > 0.0) {
        extra_per_contract_tx_ = (spec_.mu_target - 2.0) / spec_.contract_ratio;
    }
}

Address Generator::draw_account(std::mt19937_64& rng) const { return accounts_[account_rank_[account_zipf_(rng) - 1]]; }

Address Generator::draw_contract(std::mt19937_64& rng) const {
    return contracts_[contract_rank_[contract_zipf_(rng) - 1]];
}

executor::MiniProgram Generator::make_program(std::mt19937_64& rng, std::vector<Address>& touched) const {
    executor::MiniProgram p;
    const uint32_t slots = std::max<uint32_t>(spec_.contract_slots, 1);
    std::uniform_int_distribution<uint32_t> slot{0, slots - 1};

    // Read-modify-write of one slot.
    const uint32_t k = slot(rng);
    p.code.push_back({Opcode::load, Operand::word(k), {}, {}});
    p.code.push_back({Opcode::add, Operand::word(std::uniform_int_distribution<uint64_t>{1, 100}(rng)), {}, {}});
    p.code.push_back({Opcode::store, Operand::word(k), Operand::acc(), {}});

    // Data-dependent write: the slot index is a stored value.
    if (std::bernoulli_distribution{0.5}(rng)) {
        p.code.push_back({Opcode::load, Operand::word(slot(rng)), {}, {}});
        p.code.push_back({Opcode::sub, Operand::word(std::uniform_int_distribution<uint64_t>{0, 3}(rng)), {}, {}});
        p.code.push_back({Opcode::store, Operand::acc(), Operand::word(std::uniform_int_distribution<uint64_t>{1, 1000}(rng)), {}});
    }

    // Extra accounts so the mean per transaction approaches mu_target.
    const double whole = std::floor(extra_per_contract_tx_);
    uint64_t extras = static_cast<uint64_t>(whole);
    if (std::bernoulli_distribution{extra_per_contract_tx_ - whole}(rng)) {
        ++extras;
    }
    for (uint64_t e = 0; e < extras; ++e) {
        const bool call = contracts_.size() > 1 && std::bernoulli_distribution{0.5}(rng);
        Address target;
        for (int attempt = 0; attempt < 16; ++attempt) {
            target = call ? draw_contract(rng) : draw_account(rng);
            if (!contains(touched, target)) {
                break;
            }
        }
        touched.push_back(target);
        if (call) {
            p.code.push_back({Opcode::call, {}, {}, target});
        } else {
            p.code.push_back({Opcode::transfer, Operand::word(std::uniform_int_distribution<uint64_t>{1, 10}(rng)), {}, target});
        }
    }
    return p;
}

executor::Block Generator::next_block() {
    executor::Block block;
    block.height = next_height_++;
    std::mt19937_64 rng{spec_.seed * 0x9e3779b97f4a7c15ull + block.height};
    std::bernoulli_distribution is_contract{spec_.contract_ratio};
    std::uniform_int_distribution<uint64_t> value{1, 1000};

    block.transactions.reserve(spec_.block_size);
    for (uint64_t i = 0; i < spec_.block_size; ++i) {
        executor::Transaction tx;
        tx.index = i;
        tx.sender = draw_account(rng);
        const bool contract = !contracts_.empty() && is_contract(rng);
        if (contract) {
            tx.receiver = draw_contract(rng);
        } else {
            do {
                tx.receiver = draw_account(rng);
            } while (tx.receiver == tx.sender);
        }
        tx.value = value(rng);
        tx.nonce = nonces_[tx.sender]++;
        if (contract) {
            std::vector<Address> touched{tx.sender, tx.receiver};
            tx.program = make_program(rng, touched);
        }
        block.transactions.push_back(std::move(tx));
    }
    return block;
}

executor::Block Generator::next_hot_block() {
    executor::Block block;
    block.height = next_height_++;
    std::mt19937_64 rng{spec_.seed * 0x9e3779b97f4a7c15ull + block.height};
    const Address hot = accounts_[account_rank_[0]];
    block.transactions.reserve(spec_.block_size);
    for (uint64_t i = 0; i < spec_.block_size; ++i) {
        executor::Transaction tx;
        tx.index = i;
        do {
            tx.sender = draw_account(rng);
        } while (tx.sender == hot);
        tx.receiver = hot;
        tx.value = std::uniform_int_distribution<uint64_t>{1, 1000}(rng);
        tx.nonce = nonces_[tx.sender]++;
        block.transactions.push_back(std::move(tx));
    }
    return block;
}

executor::Block gen_block(const WorkloadSpec& spec, uint64_t height) {
    if (height == 0) {
        throw std::invalid_argument("height 0 is genesis, not a block");
    }
    Generator g{spec};
    executor::Block b;
    while (g.next_height() <= height) {
        b = g.next_block();
    }
    return b;
}

std::size_t accounts_touched(const executor::Transaction& tx) {
    std::unordered_set<Address> s{tx.sender, tx.receiver};
    if (tx.program) {
        for (const auto& ins : tx.program->code) {
            if (ins.op == Opcode::transfer || ins.op == Opcode::call) {
                s.insert(ins.target);
            }
        }
    }
    return s.size();
}

double mean_accounts_touched(const executor::Block& block) {
    if (block.transactions.empty()) {
        return 0.0;
    }
    std::size_t total = 0;
    for (const auto& tx : block.transactions) {
        total += accounts_touched(tx);
    }
    return static_cast<double>(total) / static_cast<double>(block.transactions.size());
}

}  // namespace pexec::workload
