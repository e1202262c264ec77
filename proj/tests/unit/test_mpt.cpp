// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>

#include <pexec/common/errors.hpp>
#include <pexec/mpt/node_reader.hpp>
#include <pexec/mpt/trie.hpp>

#include "fixtures.hpp"
#include "reference_trie.hpp"

using namespace pexec;
using namespace pexec::mpt;
using pexec::testing::random_bytes;
using pexec::testing::ReferenceTrie;

namespace {

void persist(MemoryNodeDb& db, const CommitResult& r) {
    for (const auto& w : r.nodes) {
        db.put(w.digest, w.encoding);
    }
}

std::map<Bytes, Bytes> random_kv(std::mt19937_64& rng, std::size_t n, std::size_t key_len = 32) {
    std::map<Bytes, Bytes> out;
    while (out.size() < n) {
        out.emplace(random_bytes(rng, key_len), random_bytes(rng, 1 + rng() % 40));
    }
    return out;
}

//! Admits every level; withholds leaves whose value starts with 0xff.
struct OpenPolicy final : HashPolicy {
    bool level_ready(uint32_t) const override { return true; }
    bool withheld(const Node& leaf) const override { return leaf.value && !leaf.value->empty() && (*leaf.value)[0] == 0xff; }
    bool early() const override { return true; }
};

//! Admits only levels >= floor.
struct FloorPolicy final : HashPolicy {
    uint32_t floor;
    explicit FloorPolicy(uint32_t f) : floor{f} {}
    bool level_ready(uint32_t level) const override { return level >= floor; }
    bool withheld(const Node&) const override { return false; }
    bool early() const override { return true; }
};

NodeData random_node(std::mt19937_64& rng) {
    NodeData n;
    auto rand_path = [&](std::size_t min) {
        Nibbles p;
        const std::size_t len = min + rng() % 12;
        for (std::size_t i = 0; i < len; ++i) {
            p.push_back(static_cast<uint8_t>(rng() % 16));
        }
        return p;
    };
    auto rand_digest = [&] { return *Digest::from_view(random_bytes(rng, 32)); };
    switch (rng() % 3) {
        case 0: {
            n.kind = NodeKind::branch;
            std::size_t used = 0;
            for (auto& c : n.children) {
                if (rng() % 3 == 0) {
                    c = rand_digest();
                    ++used;
                }
            }
            if (rng() % 2 == 0 || used < 2) {
                n.value = random_bytes(rng, 1 + rng() % 20);
                ++used;
            }
            if (used < 2) {
                n.children[rng() % 16] = rand_digest();
            }
            break;
        }
        case 1:
            n.kind = NodeKind::extension;
            n.path = rand_path(1);
            n.next = rand_digest();
            break;
        default:
            n.kind = NodeKind::leaf;
            n.path = rand_path(0);
            n.value = random_bytes(rng, 1 + rng() % 40);
            break;
    }
    return n;
}

}  // namespace

TEST_CASE("empty trie", "[mpt]") {
    MemoryNodeDb db;
    Trie t{db};
    CHECK_FALSE(t.get(testing::hex("ab")).has_value());
    CHECK(t.commit().root == empty_root());
    CHECK(t.root_hash() == empty_root());
}

TEST_CASE("insert then get, overwrite wins", "[mpt]") {
    MemoryNodeDb db;
    Trie t{db};
    const Bytes k = testing::hex("0102");
    CHECK(t.insert(k, testing::hex("aa")));
    CHECK(t.get(k) == testing::hex("aa"));
    CHECK(t.insert(k, testing::hex("bb")));
    CHECK(t.get(k) == testing::hex("bb"));
    CHECK_FALSE(t.insert(k, testing::hex("bb")));
}

TEST_CASE("single insert yields one leaf over the full key", "[mpt]") {
    MemoryNodeDb db;
    Trie t{db};
    const Bytes k = testing::hex("a1b2c3");
    t.insert(k, testing::hex("01"));
    const CommitResult r = t.commit();
    REQUIRE(r.nodes.size() == 1);
    const NodeData leaf = deserialize(r.nodes[0].encoding);
    CHECK(leaf.kind == NodeKind::leaf);
    CHECK(leaf.path == to_nibbles(k));
}

TEST_CASE("shared three-nibble prefix gives extension, branch, two leaves", "[mpt]") {
    const Bytes k1 = testing::hex("abc1");
    const Bytes k2 = testing::hex("abc2");
    MemoryNodeDb db;
    Trie t{db};
    t.insert(k1, testing::hex("01"));
    t.insert(k2, testing::hex("02"));
    const CommitResult r = t.commit();
    persist(db, r);
    CHECK(r.nodes.size() == 4);

    const ReferenceTrie ref{{{k1, testing::hex("01")}, {k2, testing::hex("02")}}};
    CHECK(r.root == ref.root());
    const NodeData root = ref.root_node();
    CHECK(root.kind == NodeKind::extension);
    CHECK(root.path == Nibbles{0xa, 0xb, 0xc});
    const NodeData branch = *db.read_node(*root.next);
    CHECK(branch.kind == NodeKind::branch);
    CHECK(branch.children[1].has_value());
    CHECK(branch.children[2].has_value());
    CHECK(std::count_if(branch.children.begin(), branch.children.end(), [](const auto& c) { return c.has_value(); }) == 2);
}

TEST_CASE("hash_node is the digest of the canonical encoding", "[mpt]") {
    Node leaf;
    leaf.kind = NodeKind::leaf;
    leaf.value = testing::hex("cafe");
    NodeData data;
    data.kind = NodeKind::leaf;
    data.value = testing::hex("cafe");
    const Digest expect = keccak256(serialize(data));
    CHECK(hash_node(leaf) == expect);
    CHECK_FALSE(leaf.dirty);
    CHECK(leaf.hash == expect);
    leaf.dirty = true;
    CHECK(hash_node(leaf) == expect);
}

TEST_CASE("hash_node rejects a branch with an unhashed child", "[mpt]") {
    auto child = std::make_shared<Node>();
    child->kind = NodeKind::leaf;
    child->value = testing::hex("01");
    Node branch;
    branch.kind = NodeKind::branch;
    branch.children = std::make_unique<std::array<NodeRef, 16>>();
    (*branch.children)[3] = child;
    (*branch.children)[7] = *Digest::from_view(Bytes(32, 1));
    CHECK_THROWS_AS(hash_node(branch), ChildNotHashed);
    hash_node(*child);
    CHECK_NOTHROW(hash_node(branch));
}

TEST_CASE("codec round trip per variant", "[mpt][codec]") {
    NodeData leaf;
    leaf.kind = NodeKind::leaf;
    leaf.path = {1, 2, 3};
    leaf.value = testing::hex("ff");
    NodeData ext;
    ext.kind = NodeKind::extension;
    ext.path = {0xf};
    ext.next = *Digest::from_view(Bytes(32, 9));
    NodeData branch;
    branch.kind = NodeKind::branch;
    branch.children[0] = *Digest::from_view(Bytes(32, 1));
    branch.children[15] = *Digest::from_view(Bytes(32, 2));
    branch.value = testing::hex("0102");
    for (const NodeData& n : {leaf, ext, branch}) {
        CHECK(deserialize(serialize(n)) == n);
    }
}

TEST_CASE("codec rejects malformed input", "[mpt][codec]") {
    // Branch tag, empty bitmap, no value.
    CHECK_THROWS_AS(deserialize(testing::hex("00000000")), MalformedEncoding);
    // Branch with a single child and no value.
    NodeData one;
    one.kind = NodeKind::branch;
    one.children[4] = *Digest::from_view(Bytes(32, 4));
    Bytes enc = serialize(one);
    CHECK_THROWS_AS(deserialize(enc), MalformedEncoding);
    // Unknown tag, truncation, trailing garbage.
    CHECK_THROWS_AS(deserialize(testing::hex("03")), MalformedEncoding);
    NodeData leaf;
    leaf.kind = NodeKind::leaf;
    leaf.path = {1, 2, 3};
    leaf.value = testing::hex("ff");
    Bytes good = serialize(leaf);
    CHECK_THROWS_AS(deserialize(ByteView{good}.substr(0, good.size() - 1)), MalformedEncoding);
    good.push_back(0);
    CHECK_THROWS_AS(deserialize(good), MalformedEncoding);
    CHECK_THROWS_AS(deserialize(Bytes{}), MalformedEncoding);
}

TEST_CASE("codec fuzz: ten thousand random nodes round trip", "[mpt][codec]") {
    std::mt19937_64 rng{1};
    for (int i = 0; i < 10000; ++i) {
        const NodeData n = random_node(rng);
        const Bytes enc = serialize(n);
        REQUIRE(deserialize(enc) == n);
        REQUIRE(serialize(deserialize(enc)) == enc);
    }
}

TEST_CASE("codec fuzz: random bytes either reject or are canonical", "[mpt][codec]") {
    std::mt19937_64 rng{2};
    for (int i = 0; i < 10000; ++i) {
        Bytes junk = random_bytes(rng, rng() % 80);
        if (!junk.empty()) {
            junk[0] %= 3;
        }
        try {
            const NodeData n = deserialize(junk);
            REQUIRE(serialize(n) == junk);
        } catch (const MalformedEncoding&) {
        }
    }
}

TEST_CASE("64 random pairs match a flat map", "[mpt][oracle]") {
    std::mt19937_64 rng{3};
    const auto kv = random_kv(rng, 64);
    MemoryNodeDb db;
    Trie t{db};
    for (const auto& [k, v] : kv) {
        t.insert(k, v);
    }
    for (const auto& [k, v] : kv) {
        REQUIRE(t.get(k) == v);
    }
}

TEST_CASE("100-key root equals the reference trie", "[mpt][oracle]") {
    std::mt19937_64 rng{4};
    const auto kv = random_kv(rng, 100);
    MemoryNodeDb db;
    Trie t{db};
    for (const auto& [k, v] : kv) {
        t.insert(k, v);
    }
    CHECK(t.commit().root == ReferenceTrie{kv}.root());
}

TEST_CASE("variable-length keys use branch value slots like the reference", "[mpt][oracle]") {
    std::mt19937_64 rng{5};
    std::map<Bytes, Bytes> kv;
    while (kv.size() < 300) {
        kv.emplace(random_bytes(rng, rng() % 4), random_bytes(rng, 1 + rng() % 8));
    }
    MemoryNodeDb db;
    Trie t{db};
    for (const auto& [k, v] : kv) {
        t.insert(k, v);
    }
    for (const auto& [k, v] : kv) {
        REQUIRE(t.get(k) == v);
    }
    CHECK(t.commit().root == ReferenceTrie{kv}.root());
}

TEST_CASE("ten thousand mixed operations agree with a flat map", "[mpt][oracle]") {
    std::mt19937_64 rng{6};
    MemoryNodeDb db;
    auto t = std::make_unique<Trie>(db);
    std::map<Bytes, Bytes> oracle;
    std::vector<Bytes> keys;
    for (int op = 0; op < 10000; ++op) {
        const auto dice = rng() % 10;
        if (dice < 5 || keys.empty()) {
            Bytes k = random_bytes(rng, 1 + rng() % 6);
            Bytes v = random_bytes(rng, 1 + rng() % 10);
            t->insert(k, v);
            if (!oracle.count(k)) {
                keys.push_back(k);
            }
            oracle[k] = v;
        } else if (dice < 7) {
            const Bytes& k = keys[rng() % keys.size()];
            Bytes v = random_bytes(rng, 1 + rng() % 10);
            t->insert(k, v);
            oracle[k] = v;
        } else if (dice < 9) {
            const Bytes k = rng() % 2 ? keys[rng() % keys.size()] : random_bytes(rng, 1 + rng() % 6);
            auto it = oracle.find(k);
            REQUIRE(t->get(k) == (it == oracle.end() ? std::nullopt : std::optional<Bytes>{it->second}));
        } else {
            // Commit and reopen from the node database.
            const CommitResult r = t->commit();
            persist(db, r);
            t = std::make_unique<Trie>(db, r.root);
        }
    }
    for (const auto& [k, v] : oracle) {
        REQUIRE(t->get(k) == v);
    }
}

TEST_CASE("committed root is insertion-order invariant", "[mpt][oracle]") {
    std::mt19937_64 rng{7};
    const auto kv = random_kv(rng, 500);
    std::vector<std::pair<Bytes, Bytes>> items(kv.begin(), kv.end());
    const Digest expect = ReferenceTrie{kv}.root();
    for (int s = 0; s < 100; ++s) {
        std::shuffle(items.begin(), items.end(), rng);
        MemoryNodeDb db;
        Trie t{db};
        for (const auto& [k, v] : items) {
            t.insert(k, v);
        }
        REQUIRE(t.commit().root == expect);
    }
}

TEST_CASE("commit writes exactly the new nodes", "[mpt][commit]") {
    std::mt19937_64 rng{8};
    auto kv = random_kv(rng, 1000);
    MemoryNodeDb db;
    Trie t{db};
    for (const auto& [k, v] : kv) {
        t.insert(k, v);
    }
    const CommitResult first = t.commit();
    persist(db, first);
    CHECK(db.verify_integrity());

    SECTION("unchanged trie commits nothing") {
        const CommitResult again = t.commit();
        CHECK(again.root == first.root);
        CHECK(again.nodes.empty());
    }
    SECTION("overwrite writes exactly the key's path") {
        const Bytes k = kv.begin()->first;
        kv[k] = testing::hex("beef");
        t.insert(k, testing::hex("beef"));
        const CommitResult r = t.commit();
        const ReferenceTrie ref{kv};
        CHECK(r.root == ref.root());
        CHECK(r.nodes.size() == ref.path_length(k));
    }
    SECTION("fresh key writes the nodes the reference trie gains") {
        for (int i = 0; i < 50; ++i) {
            const auto before = ReferenceTrie{kv}.digests();
            const Bytes k = random_bytes(rng, 32);
            kv[k] = testing::hex("01");
            t.insert(k, testing::hex("01"));
            REQUIRE(t.dirty_count() <= ReferenceTrie{kv}.path_length(k) + 2);
            const CommitResult r = t.commit();
            persist(db, r);
            const ReferenceTrie ref{kv};
            const auto after = ref.digests();
            std::size_t gained = 0;
            for (const auto& d : after) {
                gained += before.count(d) ? 0 : 1;
            }
            REQUIRE(r.root == ref.root());
            REQUIRE(r.nodes.size() == gained);
            REQUIRE(r.nodes.size() >= ref.path_length(k));
        }
    }
    SECTION("reopened node database resolves every value") {
        Trie reopened{db, first.root};
        for (const auto& [k, v] : kv) {
            REQUIRE(reopened.get(k) == v);
        }
    }
}

TEST_CASE("missing node surfaces as MissingNode", "[mpt]") {
    MemoryNodeDb db;
    Trie t{db, *Digest::from_view(Bytes(32, 0x42))};
    CHECK_THROWS_AS(t.get(testing::hex("00")), MissingNode);
}

TEST_CASE("proofs verify and reject tampering", "[mpt][proof]") {
    std::mt19937_64 rng{9};
    SECTION("single leaf proof has one node") {
        MemoryNodeDb db;
        Trie t{db};
        t.insert(testing::hex("aa"), testing::hex("01"));
        const Digest root = t.commit().root;
        const auto proof = t.prove(testing::hex("aa"));
        CHECK(proof.size() == 1);
        CHECK(verify_proof(root, testing::hex("aa"), proof) == testing::hex("01"));
    }
    SECTION("every key of a committed trie, tamper any byte") {
        const auto kv = random_kv(rng, 200);
        MemoryNodeDb db;
        Trie t{db};
        for (const auto& [k, v] : kv) {
            t.insert(k, v);
        }
        const CommitResult r = t.commit();
        persist(db, r);
        Trie reopened{db, r.root};
        int checked = 0;
        for (const auto& [k, v] : kv) {
            const auto proof = reopened.prove(k);
            REQUIRE(verify_proof(r.root, k, proof) == v);
            if (checked++ % 10 == 0) {
                auto bad = proof;
                auto& node = bad[rng() % bad.size()];
                node[rng() % node.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
                REQUIRE_FALSE(verify_proof(r.root, k, bad).has_value());
            }
        }
        const auto proof = reopened.prove(kv.begin()->first);
        CHECK_FALSE(verify_proof(r.root, std::next(kv.begin())->first, proof).has_value());
        CHECK_THROWS_AS(reopened.prove(random_bytes(rng, 32)), KeyAbsent);
    }
}

TEST_CASE("census counts full upper levels", "[mpt]") {
    std::mt19937_64 rng{10};
    MemoryNodeDb db;
    Trie t{db};
    for (int i = 0; i < 5000; ++i) {
        t.insert(random_bytes(rng, 32), testing::hex("01"));
    }
    t.commit();
    const auto census = t.census();
    REQUIRE(census.size() > 3);
    CHECK(census[0].full_branches == 1);
    CHECK(census[1].full_branches == 16);
    CHECK(census[2].branches == 256);
}

TEST_CASE("pipelined hashing: leaf first, parent waits for its last dirty child", "[mpt][pipeline]") {
    MemoryNodeDb db;
    Trie t{db};
    const Bytes k1 = testing::hex("10");
    const Bytes k2 = testing::hex("20");
    t.insert(k1, testing::hex("01"));
    t.insert(k2, testing::hex("02"));
    OpenPolicy policy;
    auto tasks = t.collect_hashable(policy);
    REQUIRE(tasks.size() == 2);
    CHECK(t.collect_hashable(policy).empty());

    std::vector<HashedNode> emitted;
    auto sink = [&](HashedNode&& h) { emitted.push_back(std::move(h)); };
    t.hash_ascend(tasks[0], policy, sink);
    REQUIRE(emitted.size() == 1);
    CHECK(emitted[0].node->kind == NodeKind::leaf);
    t.hash_ascend(tasks[1], policy, sink);
    REQUIRE(emitted.size() == 3);
    CHECK(emitted[2].node->kind == NodeKind::branch);
    CHECK(t.is_clean());

    MemoryNodeDb db2;
    Trie sync{db2};
    sync.insert(k1, testing::hex("01"));
    sync.insert(k2, testing::hex("02"));
    CHECK(t.root_hash() == sync.commit().root);
    CHECK(emitted[2].digest == t.root_hash());
}

TEST_CASE("pipelined hashing drops stale tasks and requeues the new version", "[mpt][pipeline]") {
    MemoryNodeDb db;
    Trie t{db};
    t.insert(testing::hex("10"), testing::hex("01"));
    t.insert(testing::hex("20"), testing::hex("02"));
    OpenPolicy policy;
    auto tasks = t.collect_hashable(policy);
    REQUIRE(tasks.size() == 2);
    t.insert(testing::hex("10"), testing::hex("09"));
    std::vector<HashedNode> emitted;
    auto sink = [&](HashedNode&& h) { emitted.push_back(std::move(h)); };
    const auto stale = std::find_if(tasks.begin(), tasks.end(), [](const HashTask& h) { return h.node->value == testing::hex("09"); });
    REQUIRE(stale != tasks.end());
    t.hash_ascend(*stale, policy, sink);
    CHECK(emitted.empty());
    const auto again = t.collect_hashable(policy);
    REQUIRE(again.size() == 1);
    CHECK(again[0].version != stale->version);
}

TEST_CASE("pipelined hashing honours withheld leaves and level floors", "[mpt][pipeline]") {
    MemoryNodeDb db;
    Trie t{db};
    t.insert(testing::hex("10"), testing::hex("ff"));
    t.insert(testing::hex("20"), testing::hex("02"));
    OpenPolicy open;
    const auto tasks = t.collect_hashable(open);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].node->value == testing::hex("02"));

    MemoryNodeDb db2;
    Trie deep{db2};
    deep.insert(testing::hex("10"), testing::hex("01"));
    deep.insert(testing::hex("20"), testing::hex("02"));
    FloorPolicy floor{2};
    CHECK(deep.collect_hashable(floor).empty());
}

TEST_CASE("if_current runs only for the clean current version", "[mpt][pipeline]") {
    MemoryNodeDb db;
    Trie t{db};
    t.insert(testing::hex("10"), testing::hex("01"));
    t.insert(testing::hex("20"), testing::hex("02"));
    OpenPolicy policy;
    auto tasks = t.collect_hashable(policy);
    std::vector<HashedNode> emitted;
    for (const auto& task : tasks) {
        t.hash_ascend(task, policy, [&](HashedNode&& h) { emitted.push_back(std::move(h)); });
    }
    REQUIRE(emitted.size() == 3);
    const auto leaf = std::find_if(emitted.begin(), emitted.end(), [](const HashedNode& h) { return h.node->value == testing::hex("01"); });
    REQUIRE(leaf != emitted.end());
    int ran = 0;
    CHECK(t.if_current(*leaf->node, leaf->version, [&] { ++ran; }));
    t.insert(testing::hex("10"), testing::hex("05"));
    CHECK_FALSE(t.if_current(*leaf->node, leaf->version, [&] { ++ran; }));
    CHECK(ran == 1);
}
