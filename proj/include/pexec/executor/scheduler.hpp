// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <set>
#include <unordered_map>
#include <vector>

#include <pexec/executor/types.hpp>

namespace pexec::executor {

//! True when the two transactions share a sender or receiver account.
bool explicit_conflict(const Transaction& ti, const Transaction& tj);

/// Picks up to `eta` transactions from `remaining` (indices into `txs`). A greedy pass in
/// index order skips candidates that explicitly conflict with one already picked; any
/// shortfall is then filled with the smallest remaining indices. Picked indices are
/// removed from `remaining` and returned in ascending order.
std::vector<uint64_t> batch_fetch(const std::vector<Transaction>& txs, std::set<uint64_t>& remaining, std::size_t eta);

//! Highest index of a transaction naming each account as sender or receiver.
std::unordered_map<Address, uint64_t> last_explicit_index(const std::vector<Transaction>& txs);

struct MergeOutcome {
    std::vector<uint64_t> committed;
    std::vector<uint64_t> aborted;
    std::map<StateKey, Bytes> writes;  // W: this merge's committed writes
    uint64_t next_index{0};
    uint64_t failed{0};  // committed with a non-ok status
};

/// Executed-but-uncommitted records of one block and the commit cursor I_next.
///
/// merge() adds a batch of records and scans all held records in ascending index order.
/// A record aborts when it read a key written by a lower held record, or a key committed
/// after the record's snapshot. Otherwise it commits if its index equals I_next, and is
/// held for a later scan if not.
class MergeState {
  public:
    explicit MergeState(bool skip_abort_checks = false) : skip_abort_checks_{skip_abort_checks} {}

    //! `commit` receives each committed write in commit order.
    MergeOutcome merge(std::vector<ExecutionRecord> records,
                       const std::function<void(const StateKey&, const Bytes&)>& commit);

    [[nodiscard]] uint64_t next_index() const noexcept { return next_index_; }
    [[nodiscard]] const std::map<uint64_t, ExecutionRecord>& held() const noexcept { return held_; }

  private:
    bool skip_abort_checks_;
    uint64_t next_index_{0};
    std::map<uint64_t, ExecutionRecord> held_;
    //! Index of the last committed transaction that wrote each key in this block.
    std::unordered_map<StateKey, uint64_t> last_commit_;
};

}  // namespace pexec::executor
