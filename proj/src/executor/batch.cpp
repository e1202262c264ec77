// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/executor/scheduler.hpp>

#include <algorithm>
#include <string>
#include <unordered_set>

#include <pexec/common/errors.hpp>

namespace pexec::executor {

bool explicit_conflict(const Transaction& ti, const Transaction& tj) {
    return ti.sender == tj.sender || ti.sender == tj.receiver || ti.receiver == tj.sender ||
           ti.receiver == tj.receiver;
}

std::vector<uint64_t> batch_fetch(const std::vector<Transaction>& txs, std::set<uint64_t>& remaining, std::size_t eta) {
    std::vector<uint64_t> batch;
    std::unordered_set<Address> touched;
    for (uint64_t i : remaining) {
        if (batch.size() == eta) {
            break;
        }
        const Transaction& t = txs[i];
        if (!batch.empty() && (touched.contains(t.sender) || touched.contains(t.receiver))) {
            continue;
        }
        batch.push_back(i);
        touched.insert(t.sender);
        touched.insert(t.receiver);
    }
    for (uint64_t i : batch) {
        remaining.erase(i);
    }
    // Forced fill.
    while (batch.size() < eta && !remaining.empty()) {
        batch.push_back(*remaining.begin());
        remaining.erase(remaining.begin());
    }
    std::sort(batch.begin(), batch.end());
    return batch;
}

std::unordered_map<Address, uint64_t> last_explicit_index(const std::vector<Transaction>& txs) {
    std::unordered_map<Address, uint64_t> out;
    for (const Transaction& t : txs) {
        out[t.sender] = t.index;
        out[t.receiver] = t.index;
    }
    return out;
}

MergeOutcome MergeState::merge(std::vector<ExecutionRecord> records,
                               const std::function<void(const StateKey&, const Bytes&)>& commit) {
    for (auto& r : records) {
        const uint64_t idx = r.index;
        if (idx < next_index_ || !held_.emplace(idx, std::move(r)).second) {
            throw Error("record " + std::to_string(idx) + " is already committed or held");
        }
    }
    // The commit cursor always points at the lowest uncommitted record.
    if (!held_.empty() && held_.begin()->first != next_index_) {
        throw Error("commit cursor " + std::to_string(next_index_) + " is not the smallest held index " +
                    std::to_string(held_.begin()->first));
    }

    MergeOutcome out;
    std::unordered_set<StateKey> lower_writes;
    for (auto it = held_.begin(); it != held_.end();) {
        ExecutionRecord& rec = it->second;
        bool stale = false;
        for (const StateKey& k : rec.reads) {
            if (lower_writes.contains(k)) {
                stale = true;
                break;
            }
            if (auto lc = last_commit_.find(k); lc != last_commit_.end() && lc->second >= rec.snapshot) {
                stale = true;
                break;
            }
        }
        for (const auto& [k, v] : rec.writes) {
            lower_writes.insert(k);
        }

        if (stale && !skip_abort_checks_) {
            out.aborted.push_back(rec.index);
            it = held_.erase(it);
            continue;
        }
        if (rec.index == next_index_) {
            for (const auto& [k, v] : rec.writes) {
                commit(k, v);
                out.writes.insert_or_assign(k, v);
                last_commit_[k] = rec.index;
            }
            out.committed.push_back(rec.index);
            out.failed += rec.status == TxStatus::ok ? 0 : 1;
            ++next_index_;
            it = held_.erase(it);
            continue;
        }
        ++it;
    }
    out.next_index = next_index_;
    return out;
}

}  // namespace pexec::executor
