// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <numeric>

#include <pexec/common/errors.hpp>
#include <pexec/executor/engine.hpp>
#include <pexec/kv/store.hpp>
#include <pexec/workload/generator.hpp>

#include "fixtures.hpp"

using namespace pexec;
using namespace pexec::executor;
using pexec::testing::addr;
using pexec::testing::transfer;
using statedb::AccountBody;
using statedb::StateDb;

namespace {

Bytes body(uint64_t balance, uint64_t nonce = 0, bool contract = false) {
    AccountBody b;
    b.balance = balance;
    b.nonce = nonce;
    if (contract) {
        b.code_hash = keccak256(to_view("c"));
    }
    return b.encode();
}

StateKey acct(uint8_t tag) { return StateKey::account(addr(tag)); }
StateKey slot(uint8_t tag, uint64_t s) { return StateKey::storage(addr(tag), to_bytes32(s)); }

statedb::StateDbOptions small_opts(uint32_t workers = 4) {
    statedb::StateDbOptions o;
    o.commit.workers = workers;
    o.flush_interval = 64;
    return o;
}

//! A state database at genesis plus the worker pool that goes with it.
struct Chain {
    kv::MemoryStore store;
    StateDb db;
    WorkerPool pool;
    Chain(const std::map<StateKey, Bytes>& genesis, uint32_t workers)
        : db{store, small_opts(workers)}, pool{workers} {
        db.commit_block_sync(0, genesis);
    }
};

workload::WorkloadSpec contended_spec() {
    workload::WorkloadSpec s;
    s.seed = 5;
    s.num_accounts = 100;
    s.num_contracts = 4;
    s.block_size = 200;
    s.zipf_theta = 1.2;
    s.contract_ratio = 0.3;
    s.mu_target = 2.5;
    return s;
}

}  // namespace

TEST_CASE("explicit conflict", "[executor][fetch]") {
    const Address a = addr(1), b = addr(2), c = addr(3), d = addr(4);
    CHECK_FALSE(explicit_conflict(transfer(0, a, b, 1), transfer(1, c, d, 1)));
    CHECK(explicit_conflict(transfer(0, a, b, 1), transfer(1, b, c, 1)));
    CHECK(explicit_conflict(transfer(0, a, b, 1), transfer(1, a, b, 1)));
    CHECK(explicit_conflict(transfer(0, a, b, 1), transfer(1, c, b, 1)));
}

TEST_CASE("batch fetch", "[executor][fetch]") {
    const Address a = addr(1), b = addr(2), c = addr(3), d = addr(4), e = addr(5);
    auto all = [](std::size_t n) {
        std::set<uint64_t> s;
        for (uint64_t i = 0; i < n; ++i) {
            s.insert(i);
        }
        return s;
    };
    SECTION("greedy skip of a conflicting candidate") {
        const std::vector<Transaction> txs{transfer(0, a, b, 1), transfer(1, b, c, 1), transfer(2, d, e, 1)};
        auto rem = all(3);
        CHECK(batch_fetch(txs, rem, 2) == std::vector<uint64_t>{0, 2});
        CHECK(rem == std::set<uint64_t>{1});
    }
    SECTION("forced fill when everything conflicts") {
        const std::vector<Transaction> txs{transfer(0, a, b, 1), transfer(1, a, c, 1), transfer(2, a, d, 1)};
        auto rem = all(3);
        CHECK(batch_fetch(txs, rem, 2) == std::vector<uint64_t>{0, 1});
    }
    SECTION("non-conflicting set smaller than eta is taken whole") {
        const std::vector<Transaction> txs{transfer(0, a, b, 1), transfer(1, c, d, 1)};
        auto rem = all(2);
        CHECK(batch_fetch(txs, rem, 8) == std::vector<uint64_t>{0, 1});
        CHECK(rem.empty());
    }
    SECTION("batch size is min(eta, remaining) and contains the smallest index") {
        std::mt19937_64 rng{1};
        std::vector<Transaction> txs;
        for (uint64_t i = 0; i < 300; ++i) {
            txs.push_back(transfer(i, addr(rng() % 12), addr(rng() % 12), 1));
        }
        auto rem = all(300);
        while (!rem.empty()) {
            const uint64_t lowest = *rem.begin();
            const std::size_t before = rem.size();
            const auto batch = batch_fetch(txs, rem, 5);
            REQUIRE(batch.size() == std::min<std::size_t>(5, before));
            REQUIRE(batch.front() == lowest);
            REQUIRE(std::is_sorted(batch.begin(), batch.end()));
        }
    }
}

TEST_CASE("execute_tx transfer semantics", "[executor][execute]") {
    const std::map<StateKey, Bytes> state{{acct(1), body(10)}, {acct(2), body(0)}};
    kv::MemoryStore store;
    StateDb db{store, small_opts()};
    db.commit_block_sync(0, state);

    SECTION("transfer a to b") {
        statedb::StateView view{db};
        const ExecutionRecord r = execute_tx(transfer(0, addr(1), addr(2), 5), view);
        CHECK(r.status == TxStatus::ok);
        CHECK(r.writes.at(acct(1)) == body(5, 1));
        CHECK(r.writes.at(acct(2)) == body(5, 0));
        CHECK(r.reads == std::vector<StateKey>{acct(1), acct(2)});
        CHECK(db.get(acct(1)) == body(10));
    }
    SECTION("bad nonce keeps only the nonce bump") {
        statedb::StateView view{db};
        const ExecutionRecord r = execute_tx(transfer(0, addr(1), addr(2), 5, 3), view);
        CHECK(r.status == TxStatus::bad_nonce);
        CHECK(r.writes == std::map<StateKey, Bytes>{{acct(1), body(10, 1)}});
    }
    SECTION("insufficient balance keeps only the nonce bump") {
        statedb::StateView view{db};
        const ExecutionRecord r = execute_tx(transfer(0, addr(1), addr(2), 11), view);
        CHECK(r.status == TxStatus::insufficient_balance);
        CHECK(r.writes == std::map<StateKey, Bytes>{{acct(1), body(10, 1)}});
    }
    SECTION("self transfer only bumps the nonce") {
        statedb::StateView view{db};
        const ExecutionRecord r = execute_tx(transfer(0, addr(1), addr(1), 4), view);
        CHECK(r.status == TxStatus::ok);
        CHECK(r.writes == std::map<StateKey, Bytes>{{acct(1), body(10, 1)}});
    }
}

TEST_CASE("execute_tx programs", "[executor][execute]") {
    std::map<StateKey, Bytes> genesis{{acct(1), body(1000)}, {acct(9), body(50, 0, true)}, {acct(8), body(0, 0, true)},
                                      {slot(9, 1), statedb::encode_word(4)}};
    kv::MemoryStore store;
    StateDb db{store, small_opts()};
    db.commit_block_sync(0, genesis);
    auto call = [&](MiniProgram p) {
        Transaction tx = transfer(0, addr(1), addr(9), 1);
        tx.program = std::move(p);
        statedb::StateView view{db};
        return std::pair{execute_tx(tx, view), tx};
    };

    SECTION("store an immediate") {
        const auto [r, tx] = call({{{Opcode::store, Operand::word(1), Operand::word(42), {}}}});
        CHECK(r.writes.at(slot(9, 1)) == statedb::encode_word(42));
    }
    SECTION("data-dependent store matches the flat interpreter") {
        const auto [r, tx] = call({{{Opcode::load, Operand::word(1), {}, {}},
                                    {Opcode::store, Operand::acc(), Operand::word(7), {}}}});
        CHECK(r.writes.at(slot(9, 4)) == statedb::encode_word(7));
        CHECK(std::binary_search(r.reads.begin(), r.reads.end(), slot(9, 1)));
        testing::FlatState flat{genesis};
        flat.apply(tx);
        for (const auto& [k, v] : r.writes) {
            CHECK(flat.get(k) == v);
        }
    }
    SECTION("arithmetic wraps modulo 2^256") {
        const auto [r, tx] = call({{{Opcode::load, Operand::word(5), {}, {}},
                                    {Opcode::sub, Operand::word(1), {}, {}},
                                    {Opcode::store, Operand::word(6), Operand::acc(), {}}}});
        CHECK(statedb::decode_word(r.writes.at(slot(9, 6))) == ~u256{0});
    }
    SECTION("internal transfer and call") {
        const auto [r, tx] = call({{{Opcode::transfer, Operand::word(20), {}, addr(2)},
                                    {Opcode::call, {}, {}, addr(8)},
                                    {Opcode::call, {}, {}, addr(2)}}});
        CHECK(r.status == TxStatus::ok);
        CHECK(r.writes.at(acct(2)) == body(20));
        CHECK(r.writes.at(acct(9)) == body(31, 0, true));
        CHECK(statedb::decode_word(r.writes.at(StateKey::storage(addr(8), Bytes32{}))) == 1);
        CHECK_FALSE(r.writes.contains(StateKey::storage(addr(2), Bytes32{})));
    }
    SECTION("failing program reverts everything but the nonce") {
        const auto [r, tx] = call({{{Opcode::store, Operand::word(1), Operand::word(42), {}},
                                    {Opcode::transfer, Operand::word(1000), {}, addr(2)}}});
        CHECK(r.status == TxStatus::reverted);
        CHECK(r.writes == std::map<StateKey, Bytes>{{acct(1), body(1000, 1)}});
        testing::FlatState flat{genesis};
        flat.apply(tx);
        CHECK(flat.get(acct(1)) == body(1000, 1));
        CHECK(flat.get(slot(9, 1)) == statedb::encode_word(4));
    }
}

TEST_CASE("merge scan", "[executor][merge]") {
    auto rec = [](uint64_t idx, uint64_t snap, std::vector<StateKey> reads, std::map<StateKey, Bytes> writes) {
        ExecutionRecord r;
        r.index = idx;
        r.snapshot = snap;
        std::sort(reads.begin(), reads.end());
        r.reads = std::move(reads);
        r.writes = std::move(writes);
        return r;
    };
    std::vector<StateKey> committed_keys;
    auto sink = [&](const StateKey& k, const Bytes&) { committed_keys.push_back(k); };

    SECTION("disjoint transfers both commit") {
        MergeState m;
        std::vector<ExecutionRecord> batch;
        batch.push_back(rec(0, 0, {acct(1), acct(2)}, {{acct(1), body(1)}, {acct(2), body(2)}}));
        batch.push_back(rec(1, 0, {acct(3), acct(4)}, {{acct(3), body(3)}, {acct(4), body(4)}}));
        const auto out = m.merge(std::move(batch), sink);
        CHECK(out.committed == std::vector<uint64_t>{0, 1});
        CHECK(out.next_index == 2);
        CHECK(out.writes.size() >= 4);
        CHECK(committed_keys.size() == 4);
    }
    SECTION("read of a lower uncommitted write aborts") {
        MergeState m;
        std::vector<ExecutionRecord> batch;
        batch.push_back(rec(0, 0, {acct(1)}, {{slot(9, 1), body(1)}}));
        batch.push_back(rec(1, 0, {slot(9, 1)}, {{acct(2), body(2)}}));
        const auto out = m.merge(std::move(batch), sink);
        CHECK(out.committed == std::vector<uint64_t>{0});
        CHECK(out.aborted == std::vector<uint64_t>{1});
        CHECK(m.next_index() == 1);
    }
    SECTION("stale lowest record aborts, clean higher record is held") {
        MergeState m;
        std::vector<ExecutionRecord> first;
        first.push_back(rec(0, 0, {}, {{acct(1), body(1)}}));
        m.merge(std::move(first), sink);
        std::vector<ExecutionRecord> second;
        second.push_back(rec(1, 0, {acct(1)}, {{acct(5), body(5)}}));
        second.push_back(rec(2, 1, {acct(7)}, {{acct(6), body(6)}}));
        const auto out = m.merge(std::move(second), sink);
        CHECK(out.aborted == std::vector<uint64_t>{1});
        CHECK(out.committed.empty());
        CHECK(m.held().size() == 1);
        CHECK(m.held().begin()->first == 2);
        CHECK(m.next_index() == 1);

        // Re-executed record 1 commits, then held record 2 follows without re-execution.
        std::vector<ExecutionRecord> third;
        third.push_back(rec(1, 1, {acct(1)}, {{acct(5), body(5)}}));
        const auto out3 = m.merge(std::move(third), sink);
        CHECK(out3.committed == std::vector<uint64_t>{1, 2});
    }
    SECTION("held record revalidated against later commits") {
        MergeState m;
        std::vector<ExecutionRecord> first;
        first.push_back(rec(0, 0, {acct(1)}, {{slot(9, 1), body(1)}}));
        first.push_back(rec(1, 0, {acct(2)}, {{acct(2), body(2)}}));
        first.push_back(rec(2, 0, {slot(9, 1)}, {{acct(3), body(3)}}));
        const auto out = m.merge(std::move(first), sink);
        CHECK(out.committed == std::vector<uint64_t>{0, 1});
        CHECK(out.aborted == std::vector<uint64_t>{2});
    }
    SECTION("cursor must be the smallest held index") {
        MergeState m;
        std::vector<ExecutionRecord> batch;
        batch.push_back(rec(1, 0, {}, {}));
        CHECK_THROWS_AS(m.merge(std::move(batch), sink), Error);
    }
    SECTION("skip-abort injection commits stale records") {
        MergeState m{true};
        std::vector<ExecutionRecord> batch;
        batch.push_back(rec(0, 0, {}, {{slot(9, 1), body(1)}}));
        batch.push_back(rec(1, 0, {slot(9, 1)}, {{acct(2), body(2)}}));
        const auto out = m.merge(std::move(batch), sink);
        CHECK(out.committed == std::vector<uint64_t>{0, 1});
        CHECK(out.aborted.empty());
    }
}

TEST_CASE("run_block matches serial execution", "[executor][engine]") {
    SECTION("1000 transfers, eight workers") {
        workload::WorkloadSpec spec;
        spec.num_accounts = 3000;
        spec.block_size = 1000;
        const auto genesis = workload::genesis_writes(spec);
        workload::Generator gen{spec};
        const Block block = gen.next_block();
        Chain par{genesis, 8};
        Chain ser{genesis, 1};
        const BlockResult p = run_block(block, par.db, par.pool);
        const BlockResult s = serial_execute_block(block, ser.db);
        CHECK(p.root == s.root);
        std::vector<uint64_t> order(1000);
        std::iota(order.begin(), order.end(), 0);
        CHECK(p.commit_order == order);
        CHECK(p.writes == s.writes);
    }
    SECTION("single transaction is one batch and one commit") {
        const std::map<StateKey, Bytes> genesis{{acct(1), body(10)}, {acct(2), body(0)}};
        Chain par{genesis, 4};
        const BlockResult r = run_block({1, {transfer(0, addr(1), addr(2), 3)}}, par.db, par.pool);
        CHECK(r.batches == 1);
        CHECK(r.commit_order == std::vector<uint64_t>{0});
    }
    SECTION("every transaction pays one hot account") {
        workload::WorkloadSpec spec;
        spec.num_accounts = 500;
        spec.block_size = 300;
        const auto genesis = workload::genesis_writes(spec);
        workload::Generator gen{spec};
        const Block block = gen.next_hot_block();
        Chain par{genesis, 8};
        Chain ser{genesis, 1};
        uint64_t last = 0;
        EngineOptions eo;
        eo.on_batch = [&](const BatchTrace& t) {
            REQUIRE(t.next_index > last);
            last = t.next_index;
        };
        const BlockResult p = run_block(block, par.db, par.pool, eo);
        const BlockResult s = serial_execute_block(block, ser.db);
        CHECK(p.root == s.root);
        CHECK(p.batches <= block.transactions.size());
        CHECK(p.aborts > 0);
        CHECK(std::is_sorted(p.commit_order.begin(), p.commit_order.end()));
        CHECK(p.commit_order.size() == block.transactions.size());
    }
}

TEST_CASE("merged state reflects the committed prefix after every batch", "[executor][engine]") {
    const auto spec = contended_spec();
    const auto genesis = workload::genesis_writes(spec);
    workload::Generator gen{spec};
    const Block block = gen.next_block();
    Chain par{genesis, 8};

    std::set<StateKey> keys;
    for (const auto& [k, v] : genesis) {
        keys.insert(k);
    }
    testing::FlatState flat{genesis};
    uint64_t applied = 0;
    EngineOptions eo;
    eo.on_batch = [&](const BatchTrace& t) {
        while (applied < t.next_index) {
            flat.apply(block.transactions[applied++]);
        }
        for (const auto& [k, v] : flat.state()) {
            keys.insert(k);
        }
        for (const StateKey& k : keys) {
            REQUIRE(t.state->get(k) == flat.get(k));
        }
    };
    const BlockResult r = run_block(block, par.db, par.pool, eo);
    CHECK(applied == block.transactions.size());
    CHECK(r.aborts > 0);
    for (const StateKey& k : keys) {
        REQUIRE(par.db.get(k) == flat.get(k));
    }
}

TEST_CASE("serial engine", "[executor][serial]") {
    const auto spec = contended_spec();
    const auto genesis = workload::genesis_writes(spec);
    SECTION("empty block keeps the root") {
        Chain c{genesis, 1};
        const Digest before = c.db.root();
        CHECK(serial_execute_block({1, {}}, c.db).root == before);
    }
    SECTION("deterministic and equal to the flat interpreter") {
        workload::Generator gen{spec};
        const Block block = gen.next_block();
        Chain a{genesis, 1};
        Chain b{genesis, 1};
        const BlockResult ra = serial_execute_block(block, a.db);
        CHECK(serial_execute_block(block, b.db).root == ra.root);
        testing::FlatState flat{genesis};
        for (const auto& tx : block.transactions) {
            flat.apply(tx);
        }
        for (const auto& [k, v] : flat.state()) {
            REQUIRE(a.db.get(k) == v);
        }
    }
}

TEST_CASE("skipping aborts breaks equivalence on a contended block", "[executor][negative]") {
    const auto spec = contended_spec();
    const auto genesis = workload::genesis_writes(spec);
    workload::Generator gen{spec};
    const Block block = gen.next_block();
    Chain bad{genesis, 8};
    Chain ser{genesis, 1};
    EngineOptions eo;
    eo.inject_skip_abort = true;
    CHECK(run_block(block, bad.db, bad.pool, eo).root != serial_execute_block(block, ser.db).root);
}

TEST_CASE("block indices must be dense", "[executor][engine]") {
    const std::map<StateKey, Bytes> genesis{{acct(1), body(10)}, {acct(2), body(0)}};
    Chain c{genesis, 2};
    CHECK_THROWS_AS(run_block({1, {transfer(1, addr(1), addr(2), 1)}}, c.db, c.pool), Error);
}
