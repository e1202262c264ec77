// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <random>
#include <unordered_map>
#include <vector>

#include <pexec/executor/types.hpp>
#include <pexec/workload/spec.hpp>
#include <pexec/workload/zipf.hpp>

namespace pexec::workload {

Address account_address(uint64_t i);
Address contract_address(uint64_t j);

//! Balance every genesis account and contract starts with.
u256 genesis_balance();

//! Genesis state as a write set for height 0. Deterministic in the spec.
std::map<statedb::StateKey, Bytes> genesis_writes(const WorkloadSpec& spec);

/// Produces blocks 1, 2, ... in order. Block h depends only on (seed, h) and the sender
/// nonces implied by blocks before it, which the generator tracks itself.
class Generator {
  public:
    explicit Generator(WorkloadSpec spec);

    executor::Block next_block();
    //! Adversarial block: every transaction pays the most popular account.
    executor::Block next_hot_block();
    [[nodiscard]] uint64_t next_height() const noexcept { return next_height_; }
    [[nodiscard]] const WorkloadSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const std::vector<Address>& accounts() const noexcept { return accounts_; }
    [[nodiscard]] const std::vector<Address>& contracts() const noexcept { return contracts_; }

    //! Account index of the given popularity rank (1-based).
    [[nodiscard]] uint64_t account_of_rank(uint64_t rank) const { return account_rank_[rank - 1]; }

  private:
    Address draw_account(std::mt19937_64& rng) const;
    Address draw_contract(std::mt19937_64& rng) const;
    executor::MiniProgram make_program(std::mt19937_64& rng, std::vector<Address>& touched) const;

    WorkloadSpec spec_;
    std::vector<Address> accounts_;
    std::vector<Address> contracts_;
    std::vector<uint64_t> account_rank_;
    std::vector<uint64_t> contract_rank_;
    ZipfSampler account_zipf_;
    ZipfSampler contract_zipf_;
    double extra_per_contract_tx_{0};
    std::unordered_map<Address, uint64_t> nonces_;
    uint64_t next_height_{1};
};

//! Block at `height` (>= 1), regenerating blocks 1..height-1 for their nonce effects.
executor::Block gen_block(const WorkloadSpec& spec, uint64_t height);

//! Distinct accounts named by a transaction: sender, receiver and program targets.
std::size_t accounts_touched(const executor::Transaction& tx);
double mean_accounts_touched(const executor::Block& block);

}  // namespace pexec::workload
