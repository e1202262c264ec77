// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/statedb/state_db.hpp>

#include <limits>

#include <pexec/common/errors.hpp>

namespace pexec::statedb {

namespace {

    std::size_t stripe(const Address& a) { return std::hash<Address>{}(a) % 64; }

}  // namespace

StateDb::StateDb(kv::Store& store, StateDbOptions options)
    : store_{store}, options_{std::move(options)}, node_cache_{store, options_.hash} {
    options_.commit.validate();
    base_root_ = mpt::empty_root(options_.hash);
    const Bytes meta_ns{ns::meta};
    if (auto last = store_.floor(meta_key(std::numeric_limits<uint64_t>::max()), meta_ns)) {
        base_height_ = read_u64_be(ByteView{last->first}.substr(1));
        base_root_ = *Digest::from_view(last->second);
    }
    reroot();

    for (uint32_t i = 0; i < options_.commit.retrieval_threads; ++i) {
        threads_.emplace_back([this] { retrieval_loop(); });
    }
    for (uint32_t i = 0; i < options_.commit.commit_threads; ++i) {
        threads_.emplace_back([this] { commit_loop(); });
    }
    threads_.emplace_back([this] { hash_loop(); });
    threads_.emplace_back([this] { store_loop(); });
}

StateDb::~StateDb() { stop_workers(); }

void StateDb::stop_workers() {
    q_ret_.close();
    q_commit_.close();
    q_hash_.close();
    q_store_.close();
    for (auto& t : threads_) {
        if (t.joinable()) {
            t.join();
        }
    }
    threads_.clear();
}

void StateDb::reroot() {
    account_trie_ = std::make_unique<mpt::Trie>(node_cache_, base_root_, options_.hash);
    std::lock_guard lock{storage_mutex_};
    storage_tries_.clear();
}

void StateDb::set_commit_config(const CommitConfig& cfg) {
    if (in_block_) {
        throw Error("commit config cannot change inside a block");
    }
    cfg.validate();
    options_.commit = cfg;
}

// -- state access -------------------------------------------------------------------

Bytes StateDb::get(const StateKey& key) const {
    if (auto hit = state_cache_.find(key)) {
        return std::move(*hit);
    }
    if (!base_height_) {
        return {};
    }
    direct_reads_.fetch_add(1, std::memory_order_relaxed);
    auto rec = store_.floor(direct_key(key, *base_height_), direct_prefix(key));
    Bytes value = rec ? std::move(rec->second) : Bytes{};
    if (in_block_) {
        // Insert-if-absent: a concurrent coordinator write must win over this base value.
        return state_cache_.emplace(key, std::move(value));
    }
    return value;
}

void StateDb::set(const StateKey& key, Bytes value) {
    if (!in_block_) {
        throw Error("set outside a block");
    }
    state_cache_.assign(key, value);
    {
        std::lock_guard lock{pending_mutex_};
        PendingAccount& p = pending_[key.address];
        if (key.slot) {
            p.slots.insert_or_assign(*key.slot, std::move(value));
        } else {
            p.body = std::move(value);
        }
    }
    ret_tracker_.add();
    retrieval_tasks_.fetch_add(1, std::memory_order_relaxed);
    q_ret_.push(key);
}

std::optional<Bytes> StateDb::load_nodes(const Digest& root, ByteView key) const {
    if (root == mpt::empty_root(options_.hash)) {
        return std::nullopt;
    }
    const mpt::Nibbles nibbles = mpt::to_nibbles(key);
    mpt::NibblesView rest{nibbles};
    Digest digest = root;
    while (true) {
        const auto node = node_cache_.read_node(digest);
        std::optional<Digest> next;
        switch (node->kind) {
            case mpt::NodeKind::leaf:
                return mpt::NibblesView{node->path} == rest ? node->value : std::nullopt;
            case mpt::NodeKind::extension:
                if (!rest.starts_with(mpt::NibblesView{node->path})) {
                    return std::nullopt;
                }
                rest.remove_prefix(node->path.size());
                next = node->next;
                break;
            case mpt::NodeKind::branch:
                if (rest.empty()) {
                    return node->value;
                }
                next = node->children[rest[0]];
                rest.remove_prefix(1);
                break;
        }
        if (!next) {
            return std::nullopt;
        }
        digest = *next;
    }
}

// -- pipelined block ----------------------------------------------------------------

void StateDb::begin_block(uint64_t height, uint64_t tx_count, std::unordered_map<Address, uint64_t> last_explicit) {
    if (in_block_) {
        throw Error("block already open");
    }
    const uint64_t expected = base_height_ ? *base_height_ + 1 : 0;
    if (height != expected) {
        throw Error("block height " + std::to_string(height) + " does not follow " + std::to_string(expected));
    }
    {
        std::lock_guard lock{error_mutex_};
        error_ = nullptr;
    }
    block_height_ = height;
    tx_count_ = tx_count;
    last_explicit_ = std::move(last_explicit);
    next_index_ = 0;
    remaining_ = tx_count;
    inflight_ = 0;
    in_block_ = true;
}

void StateDb::set_next_index(uint64_t i_next) {
    next_index_ = i_next;
    remaining_ = tx_count_ > i_next ? tx_count_ - i_next : 0;
}

void StateDb::push_commit(const Address& address) {
    inflight_.fetch_add(1);
    commit_tracker_.add();
    q_commit_.push(address);
}

void StateDb::async_commit_account() {
    auto tasks = account_trie_->collect_hashable(policy_);
    hash_tracker_.add(tasks.size());
    for (auto& t : tasks) {
        q_hash_.push(std::move(t));
    }
}

Digest StateDb::finish_block() {
    if (!in_block_) {
        throw Error("no open block");
    }
    std::vector<Address> leftover;
    {
        std::lock_guard lock{pending_mutex_};
        for (const auto& [a, p] : pending_) {
            leftover.push_back(a);
        }
    }
    for (const Address& a : leftover) {
        push_commit(a);
    }

    ret_tracker_.wait();
    commit_tracker_.wait();
    // Drain the hash queue so no pop-time check races the final collection.
    hash_tracker_.wait();
    set_next_index(tx_count_);
    async_commit_account();
    hash_tracker_.wait();
    store_tracker_.wait();

    if (crash_.crashed()) {
        in_block_ = false;
        throw SimulatedCrash("crash point fired in block " + std::to_string(block_height_));
    }
    try {
        rethrow_error();
    } catch (...) {
        in_block_ = false;
        throw;
    }

    const Digest root = account_trie_->root_hash();
    if (!account_trie_->is_clean()) {
        in_block_ = false;
        throw Error("account trie still dirty at block end");
    }
    {
        std::lock_guard lock{batch_mutex_};
        store_batch_.put(meta_key(block_height_), Bytes{root.view()});
        store_.write(store_batch_);
        store_batch_.clear();
    }
    stats_.early = account_trie_->early_hash_stats();
    close_stats();

    base_height_ = block_height_;
    base_root_ = root;
    in_block_ = false;
    last_explicit_.clear();
    state_cache_.clear();
    reroot();

    if (crash_.armed() == CrashPoint::post_meta && crash_.hit(CrashPoint::post_meta)) {
        throw SimulatedCrash("crash after meta record of block " + std::to_string(block_height_));
    }
    return root;
}

void StateDb::close_stats() {
    stats_.direct_reads = direct_reads_.exchange(0);
    const uint64_t reads = node_cache_.backend_reads();
    stats_.node_reads = reads - node_reads_mark_;
    node_reads_mark_ = reads;
    stats_.node_writes = node_writes_.exchange(0);
    stats_.direct_writes = direct_writes_.exchange(0);
    stats_.hash_events = hash_events_.exchange(0);
    stats_.store_events = store_events_.exchange(0);
    stats_.stale_drops = stale_drops_.exchange(0);
    stats_.retrieval_tasks = retrieval_tasks_.exchange(0);
    stats_.storage_commits = storage_commits_.exchange(0);
}

// -- workers ------------------------------------------------------------------------

void StateDb::record_error(std::exception_ptr e) {
    std::lock_guard lock{error_mutex_};
    if (!error_) {
        error_ = e;
    }
}

void StateDb::rethrow_error() {
    std::exception_ptr e;
    {
        std::lock_guard lock{error_mutex_};
        std::swap(e, error_);
    }
    if (e) {
        std::rethrow_exception(e);
    }
}

void StateDb::retrieval_loop() {
    while (auto key = q_ret_.pop()) {
        if (!crash_.crashed()) {
            try {
                const Digest akey = options_.hash(key->address.view());
                auto leaf = load_nodes(base_root_, akey.view());
                if (key->slot && leaf) {
                    const AccountState st = AccountState::decode(*leaf);
                    if (st.storage_root) {
                        load_nodes(*st.storage_root, options_.hash(key->slot->view()).view());
                    }
                }
            } catch (...) {
                record_error(std::current_exception());
            }
        }
        ret_tracker_.done();
    }
}

void StateDb::commit_loop() {
    while (auto a = q_commit_.pop()) {
        if (!crash_.crashed()) {
            try {
                commit_account(*a);
            } catch (...) {
                record_error(std::current_exception());
            }
        }
        inflight_.fetch_sub(1);
        commit_tracker_.done();
    }
}

mpt::Trie& StateDb::storage_trie(const Address& a, const std::optional<Digest>& root) {
    std::lock_guard lock{storage_mutex_};
    auto& slot = storage_tries_[a];
    if (!slot) {
        slot = std::make_unique<mpt::Trie>(node_cache_, root.value_or(mpt::empty_root(options_.hash)), options_.hash);
    }
    return *slot;
}

Bytes StateDb::apply_account(const Address& a, const PendingAccount& upd, uint64_t height, kv::WriteBatch& out) {
    const Digest akey = options_.hash(a.view());
    const auto prev = account_trie_->get(akey.view());
    AccountState st = prev ? AccountState::decode(*prev) : AccountState{};
    if (upd.body) {
        st.body = AccountBody::decode(*upd.body);
    }
    if (!upd.slots.empty()) {
        mpt::Trie& trie = storage_trie(a, st.storage_root);
        for (const auto& [slot, value] : upd.slots) {
            trie.insert(options_.hash(slot.view()).view(), value, Bytes{slot.view()});
        }
        mpt::CommitResult res = trie.commit();
        for (auto& n : res.nodes) {
            out.put(node_key(n.digest), std::move(n.encoding));
        }
        for (auto& [pre, value] : res.leaves) {
            out.put(direct_key(StateKey::storage(a, *Bytes32::from_view(pre)), height), std::move(value));
        }
        node_writes_.fetch_add(res.nodes.size());
        direct_writes_.fetch_add(res.leaves.size());
        st.storage_root = res.root;
    }
    if (st.body.is_contract() && !st.storage_root) {
        st.storage_root = mpt::empty_root(options_.hash);
    }
    return st.encode();
}

void StateDb::commit_account(const Address& a) {
    std::lock_guard account_lock{account_locks_[stripe(a)]};
    PendingAccount upd;
    {
        std::lock_guard lock{pending_mutex_};
        auto it = pending_.find(a);
        if (it == pending_.end()) {
            return;
        }
        upd = std::move(it->second);
        pending_.erase(it);
    }
    kv::WriteBatch batch;
    Bytes leaf = apply_account(a, upd, block_height_, batch);
    if (crash_.crashed()) {
        return;
    }
    store_.write(batch);
    account_trie_->insert(options_.hash(a.view()).view(), std::move(leaf), Bytes{a.view()});
    storage_commits_.fetch_add(1, std::memory_order_relaxed);
}

void StateDb::hash_loop() {
    while (auto task = q_hash_.pop()) {
        if (!crash_.crashed()) {
            try {
                account_trie_->hash_ascend(*task, policy_, [this](mpt::HashedNode&& h) {
                    if (crash_.hit(CrashPoint::mid_hash)) {
                        return;
                    }
                    hash_events_.fetch_add(1, std::memory_order_relaxed);
                    store_tracker_.add();
                    q_store_.push(std::move(h));
                });
            } catch (...) {
                record_error(std::current_exception());
            }
        }
        hash_tracker_.done();
    }
}

void StateDb::store_loop() {
    while (auto h = q_store_.pop()) {
        if (crash_.hit(CrashPoint::mid_store)) {
            // Volatile state is lost: nothing buffered since the last flush survives.
            std::lock_guard lock{batch_mutex_};
            store_batch_.clear();
        } else {
            try {
                store_events_.fetch_add(1, std::memory_order_relaxed);
                std::lock_guard lock{batch_mutex_};
                const bool current = account_trie_->if_current(*h->node, h->version, [&] {
                    store_batch_.put(node_key(h->digest), std::move(h->encoding));
                    node_writes_.fetch_add(1, std::memory_order_relaxed);
                    if (h->leaf_entry) {
                        const auto& [pre, value] = *h->leaf_entry;
                        const StateKey key = StateKey::account(*Address::from_view(pre));
                        store_batch_.put(direct_key(key, block_height_), AccountState::decode(value).body.encode());
                        direct_writes_.fetch_add(1, std::memory_order_relaxed);
                    }
                });
                if (!current) {
                    stale_drops_.fetch_add(1, std::memory_order_relaxed);
                }
                if (store_batch_.size() >= options_.flush_interval) {
                    store_.write(store_batch_);
                    store_batch_.clear();
                }
            } catch (...) {
                record_error(std::current_exception());
            }
        }
        store_tracker_.done();
    }
}

bool StateDb::Policy::level_ready(uint32_t level) const {
    if (level >= mpt::kDeepLevel) {
        return true;
    }
    const double m = static_cast<double>(db_.remaining_.load()) +
                     static_cast<double>(db_.inflight_.load()) / db_.options_.commit.mu;
    return m <= commit_point(level, db_.options_.commit);
}

bool StateDb::Policy::withheld(const mpt::Node& leaf) const {
    if (db_.remaining_.load() == 0) {
        return false;
    }
    const auto a = Address::from_view(leaf.preimage);
    if (!a) {
        return false;
    }
    auto it = db_.last_explicit_.find(*a);
    return it != db_.last_explicit_.end() && it->second >= db_.next_index_.load();
}

bool StateDb::Policy::early() const { return db_.remaining_.load() > 0; }

// -- synchronous baseline -----------------------------------------------------------

Digest StateDb::commit_block_sync(uint64_t height, const std::map<StateKey, Bytes>& writes) {
    if (in_block_) {
        throw Error("synchronous commit inside an open pipelined block");
    }
    const uint64_t expected = base_height_ ? *base_height_ + 1 : 0;
    if (height != expected) {
        throw Error("block height " + std::to_string(height) + " does not follow " + std::to_string(expected));
    }

    // Update.
    std::map<Address, PendingAccount> grouped;
    for (const auto& [key, value] : writes) {
        PendingAccount& p = grouped[key.address];
        if (key.slot) {
            p.slots.insert_or_assign(*key.slot, value);
        } else {
            p.body = value;
        }
    }
    kv::WriteBatch batch;
    for (const auto& [a, upd] : grouped) {
        Bytes leaf = apply_account(a, upd, height, batch);
        account_trie_->insert(options_.hash(a.view()).view(), std::move(leaf), Bytes{a.view()});
    }

    // Hash.
    mpt::CommitResult res = account_trie_->commit();

    // Store.
    for (auto& n : res.nodes) {
        batch.put(node_key(n.digest), std::move(n.encoding));
    }
    for (const auto& [pre, value] : res.leaves) {
        const StateKey key = StateKey::account(*Address::from_view(pre));
        batch.put(direct_key(key, height), AccountState::decode(value).body.encode());
    }
    node_writes_.fetch_add(res.nodes.size());
    direct_writes_.fetch_add(res.leaves.size());
    batch.put(meta_key(height), Bytes{res.root.view()});
    store_.write(batch);

    stats_ = {};
    close_stats();
    base_height_ = height;
    base_root_ = res.root;
    state_cache_.clear();
    reroot();
    return res.root;
}

// -- recovery and inspection --------------------------------------------------------

std::optional<Digest> StateDb::meta_root(uint64_t height) const {
    auto v = store_.get(meta_key(height));
    if (!v) {
        return std::nullopt;
    }
    return Digest::from_view(*v);
}

void StateDb::recover(uint64_t height) {
    if (in_block_) {
        throw Error("recover inside an open block");
    }
    const auto root = meta_root(height);
    if (!root) {
        throw CorruptMeta("no root recorded for height " + std::to_string(height));
    }
    kv::WriteBatch batch;
    auto discard_above = [&](uint8_t prefix) {
        store_.for_each_prefix(Bytes{prefix}, [&](ByteView k, ByteView) {
            if (read_u64_be(k.substr(k.size() - 8)) > height) {
                batch.erase(Bytes{k});
            }
            return true;
        });
    };
    discard_above(ns::direct);
    discard_above(ns::meta);
    store_.write(batch);

    {
        std::lock_guard lock{pending_mutex_};
        pending_.clear();
    }
    base_height_ = height;
    base_root_ = *root;
    state_cache_.clear();
    reroot();
}

std::optional<Bytes> StateDb::trie_get(const StateKey& key) const {
    if (!base_height_) {
        return std::nullopt;
    }
    StoreNodeReader reader{store_, options_.hash};
    const mpt::Trie accounts{reader, base_root_, options_.hash};
    const auto leaf = accounts.get(options_.hash(key.address.view()).view());
    if (!leaf) {
        return std::nullopt;
    }
    const AccountState st = AccountState::decode(*leaf);
    if (!key.slot) {
        return st.body.encode();
    }
    if (!st.storage_root) {
        return std::nullopt;
    }
    const mpt::Trie storage{reader, *st.storage_root, options_.hash};
    return storage.get(options_.hash(key.slot->view()).view());
}

}  // namespace pexec::statedb
