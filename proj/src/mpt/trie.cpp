// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/mpt/trie.hpp>

#include <cassert>

#include <pexec/common/errors.hpp>

namespace pexec::mpt {

namespace {

    uint8_t bucket_of(uint32_t level) noexcept { return static_cast<uint8_t>(std::min(level, kDeepLevel)); }

    std::optional<Digest> ref_digest(const NodeRef& ref) {
        if (const auto* d = std::get_if<Digest>(&ref)) {
            return *d;
        }
        if (const auto* p = std::get_if<NodePtr>(&ref)) {
            if ((*p)->dirty || !(*p)->hash) {
                throw ChildNotHashed("child node has no digest");
            }
            return (*p)->hash;
        }
        return std::nullopt;
    }

    bool ref_clean(const NodeRef& ref, bool lock) {
        const auto* p = std::get_if<NodePtr>(&ref);
        if (p == nullptr) {
            return true;
        }
        if (lock) {
            std::lock_guard guard{(*p)->lock};
            return !(*p)->dirty;
        }
        return !(*p)->dirty;
    }

}  // namespace

NodeData snapshot(const Node& node) {
    NodeData data;
    data.kind = node.kind;
    switch (node.kind) {
        case NodeKind::branch:
            for (std::size_t i = 0; i < 16; ++i) {
                data.children[i] = ref_digest((*node.children)[i]);
            }
            data.value = node.value;
            break;
        case NodeKind::extension:
            data.path = node.path;
            data.next = ref_digest(node.next);
            break;
        case NodeKind::leaf:
            data.path = node.path;
            data.value = node.value;
            break;
    }
    return data;
}

Digest hash_node(Node& node, DigestFn hash) {
    const Digest d = hash(serialize(snapshot(node)));
    node.hash = d;
    node.dirty = false;
    return d;
}

// -- DirtyIndex -------------------------------------------------------------------

void Trie::DirtyIndex::put(Node& n) {
    const uint8_t b = bucket_of(n.level);
    std::lock_guard guard{mutex_};
    if (n.dirty_bucket == b) {
        return;
    }
    if (n.dirty_bucket != 0xff) {
        buckets_[n.dirty_bucket].erase(&n);
    }
    buckets_[b].insert(&n);
    n.dirty_bucket = b;
}

void Trie::DirtyIndex::erase(Node& n) {
    std::lock_guard guard{mutex_};
    if (n.dirty_bucket != 0xff) {
        buckets_[n.dirty_bucket].erase(&n);
        n.dirty_bucket = 0xff;
    }
}

std::size_t Trie::DirtyIndex::size() const {
    std::lock_guard guard{mutex_};
    std::size_t total = 0;
    for (const auto& b : buckets_) {
        total += b.size();
    }
    return total;
}

std::vector<Node*> Trie::DirtyIndex::bucket_nodes(uint32_t bucket) const {
    std::lock_guard guard{mutex_};
    return {buckets_[bucket].begin(), buckets_[bucket].end()};
}

void Trie::DirtyIndex::clear() {
    std::lock_guard guard{mutex_};
    for (auto& b : buckets_) {
        for (Node* n : b) {
            n->dirty_bucket = 0xff;
        }
        b.clear();
    }
}

// -- Trie ---------------------------------------------------------------------------

Trie::Trie(const NodeReader& reader, DigestFn hash) : reader_{&reader}, hash_{hash} {}

Trie::Trie(const NodeReader& reader, const Digest& root, DigestFn hash) : reader_{&reader}, hash_{hash} {
    if (root != empty_root(hash)) {
        root_ = root;
    }
}

std::optional<Bytes> Trie::get(ByteView key) const {
    std::shared_lock lock{mutex_};
    const Nibbles nibbles = to_nibbles(key);
    NibblesView rest{nibbles};
    const NodeRef* ref = &root_;
    while (true) {
        if (std::holds_alternative<std::monostate>(*ref)) {
            return std::nullopt;
        }
        if (const auto* d = std::get_if<Digest>(ref)) {
            return get_persisted(*d, rest);
        }
        const Node& n = *std::get<NodePtr>(*ref);
        switch (n.kind) {
            case NodeKind::leaf:
                return NibblesView{n.path} == rest ? n.value : std::nullopt;
            case NodeKind::extension:
                if (!rest.starts_with(NibblesView{n.path})) {
                    return std::nullopt;
                }
                rest.remove_prefix(n.path.size());
                ref = &n.next;
                break;
            case NodeKind::branch:
                if (rest.empty()) {
                    return n.value;
                }
                ref = &(*n.children)[rest[0]];
                rest.remove_prefix(1);
                break;
        }
    }
}

std::optional<Bytes> Trie::get_persisted(Digest digest, NibblesView rest) const {
    while (true) {
        const auto data = reader_->read_node(digest);
        std::optional<Digest> next;
        switch (data->kind) {
            case NodeKind::leaf:
                return NibblesView{data->path} == rest ? data->value : std::nullopt;
            case NodeKind::extension:
                if (!rest.starts_with(NibblesView{data->path})) {
                    return std::nullopt;
                }
                rest.remove_prefix(data->path.size());
                next = data->next;
                break;
            case NodeKind::branch:
                if (rest.empty()) {
                    return data->value;
                }
                next = data->children[rest[0]];
                rest.remove_prefix(1);
                break;
        }
        if (!next) {
            return std::nullopt;
        }
        digest = *next;
    }
}

bool Trie::insert(ByteView key, Bytes value, Bytes preimage) {
    assert(!value.empty());
    std::unique_lock lock{mutex_};
    const Nibbles nibbles = to_nibbles(key);
    return insert_at(root_, nullptr, 0, nibbles, value, preimage);
}

NodePtr Trie::make_node(NodeKind kind, Node* parent, uint32_t level) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->parent = parent;
    n->level = level;
    if (kind == NodeKind::branch) {
        n->children = std::make_unique<std::array<NodeRef, 16>>();
    }
    return n;
}

NodePtr Trie::resolve(NodeRef& slot, Node* parent, uint32_t level) {
    if (auto* p = std::get_if<NodePtr>(&slot)) {
        return *p;
    }
    const Digest digest = std::get<Digest>(slot);
    const auto data = reader_->read_node(digest);
    NodePtr n = make_node(data->kind, parent, level);
    n->path = data->path;
    n->value = data->value;
    if (data->kind == NodeKind::branch) {
        for (std::size_t i = 0; i < 16; ++i) {
            if (data->children[i]) {
                (*n->children)[i] = *data->children[i];
            }
        }
    } else if (data->kind == NodeKind::extension) {
        n->next = *data->next;
    }
    n->hash = digest;
    n->dirty = false;
    slot = n;
    return n;
}

void Trie::touch(Node& n) {
    if (!n.dirty) {
        n.dirty = true;
        n.hash.reset();
    }
    if (n.early_hashed) {
        redirtied_[n.early_bucket].fetch_add(1, std::memory_order_relaxed);
        n.early_hashed = false;
    }
    ++n.version;
    dirty_.put(n);
}

void Trie::detach(Node& n) {
    if (n.early_hashed) {
        redirtied_[n.early_bucket].fetch_add(1, std::memory_order_relaxed);
        n.early_hashed = false;
    }
    n.attached = false;
    ++n.version;
    dirty_.erase(n);
}

void Trie::install(NodeRef& slot, Node* parent, uint32_t level, NibblesView prefix, const NodePtr& branch) {
    if (prefix.empty()) {
        branch->parent = parent;
        slot = branch;
        return;
    }
    NodePtr ext = make_node(NodeKind::extension, parent, level);
    ext->path = Nibbles{prefix};
    ext->next = branch;
    branch->parent = ext.get();
    touch(*ext);
    slot = ext;
}

bool Trie::insert_at(NodeRef& slot, Node* parent, uint32_t level, NibblesView path, Bytes& value,
                     Bytes& preimage) {
    if (std::holds_alternative<std::monostate>(slot)) {
        NodePtr leaf = make_node(NodeKind::leaf, parent, level);
        leaf->path = Nibbles{path};
        leaf->value = std::move(value);
        leaf->preimage = std::move(preimage);
        touch(*leaf);
        slot = leaf;
        return true;
    }

    NodePtr node = resolve(slot, parent, level);
    switch (node->kind) {
        case NodeKind::leaf: {
            const std::size_t common = common_prefix_length(node->path, path);
            if (common == node->path.size() && common == path.size()) {
                if (!preimage.empty()) {
                    node->preimage = std::move(preimage);
                }
                if (node->value == value) {
                    return false;
                }
                node->value = std::move(value);
                touch(*node);
                return true;
            }
            NodePtr branch = make_node(NodeKind::branch, nullptr, level + static_cast<uint32_t>(common));
            if (common == node->path.size()) {
                branch->value = std::move(node->value);
                detach(*node);
            } else {
                const uint8_t nibble = node->path[common];
                node->path = node->path.substr(common + 1);
                node->level = branch->level + 1;
                node->parent = branch.get();
                touch(*node);
                (*branch->children)[nibble] = node;
            }
            if (common == path.size()) {
                branch->value = std::move(value);
            } else {
                NodeRef& fresh = (*branch->children)[path[common]];
                insert_at(fresh, branch.get(), branch->level + 1, path.substr(common + 1), value, preimage);
            }
            touch(*branch);
            install(slot, parent, level, path.substr(0, common), branch);
            return true;
        }
        case NodeKind::extension: {
            const std::size_t common = common_prefix_length(node->path, path);
            if (common == node->path.size()) {
                const bool changed = insert_at(node->next, node.get(), level + static_cast<uint32_t>(common),
                                               path.substr(common), value, preimage);
                if (changed) {
                    touch(*node);
                }
                return changed;
            }
            NodePtr branch = make_node(NodeKind::branch, nullptr, level + static_cast<uint32_t>(common));
            const uint8_t nibble = node->path[common];
            if (common + 1 < node->path.size()) {
                node->path = node->path.substr(common + 1);
                node->level = branch->level + 1;
                node->parent = branch.get();
                touch(*node);
                (*branch->children)[nibble] = node;
            } else {
                NodeRef child = std::move(node->next);
                node->next = std::monostate{};
                if (auto* p = std::get_if<NodePtr>(&child)) {
                    (*p)->parent = branch.get();
                }
                (*branch->children)[nibble] = std::move(child);
                detach(*node);
            }
            if (common == path.size()) {
                branch->value = std::move(value);
            } else {
                NodeRef& fresh = (*branch->children)[path[common]];
                insert_at(fresh, branch.get(), branch->level + 1, path.substr(common + 1), value, preimage);
            }
            touch(*branch);
            install(slot, parent, level, path.substr(0, common), branch);
            return true;
        }
        case NodeKind::branch: {
            if (path.empty()) {
                if (node->value == value) {
                    return false;
                }
                node->value = std::move(value);
                touch(*node);
                return true;
            }
            NodeRef& child = (*node->children)[path[0]];
            const bool changed = insert_at(child, node.get(), level + 1, path.substr(1), value, preimage);
            if (changed) {
                touch(*node);
            }
            return changed;
        }
    }
    return false;
}

void Trie::mark_hashed(Node& n, bool early) {
    n.early_hashed = early;
    if (early) {
        n.early_bucket = bucket_of(n.level);
        early_hashed_[n.early_bucket].fetch_add(1, std::memory_order_relaxed);
    }
    n.queued_version = kNotQueued;
    dirty_.erase(n);
}

Digest Trie::hash_subtree(Node& n, CommitResult& out) {
    if (!n.dirty) {
        return *n.hash;
    }
    if (n.kind == NodeKind::branch) {
        for (auto& child : *n.children) {
            if (auto* p = std::get_if<NodePtr>(&child)) {
                hash_subtree(**p, out);
            }
        }
    } else if (n.kind == NodeKind::extension) {
        if (auto* p = std::get_if<NodePtr>(&n.next)) {
            hash_subtree(**p, out);
        }
    }
    Bytes encoding = serialize(snapshot(n));
    const Digest d = hash_(encoding);
    n.hash = d;
    n.dirty = false;
    mark_hashed(n, false);
    if (n.kind == NodeKind::leaf && !n.preimage.empty()) {
        out.leaves.emplace_back(n.preimage, *n.value);
    }
    out.nodes.push_back({d, std::move(encoding)});
    return d;
}

CommitResult Trie::commit() {
    std::unique_lock lock{mutex_};
    CommitResult out;
    if (auto* p = std::get_if<NodePtr>(&root_)) {
        hash_subtree(**p, out);
    }
    out.root = root_hash_locked();
    return out;
}

Digest Trie::root_hash_locked() const {
    if (std::holds_alternative<std::monostate>(root_)) {
        return empty_root(hash_);
    }
    if (const auto* d = std::get_if<Digest>(&root_)) {
        return *d;
    }
    const Node& n = *std::get<NodePtr>(root_);
    std::lock_guard guard{n.lock};
    if (n.dirty || !n.hash) {
        throw ChildNotHashed("trie root is dirty");
    }
    return *n.hash;
}

Digest Trie::root_hash() const {
    std::shared_lock lock{mutex_};
    return root_hash_locked();
}

std::vector<Bytes> Trie::prove(ByteView key) const {
    std::shared_lock lock{mutex_};
    const Nibbles nibbles = to_nibbles(key);
    NibblesView rest{nibbles};
    std::vector<Bytes> proof;

    NodeRef current = root_;
    while (true) {
        NodeData data;
        if (std::holds_alternative<std::monostate>(current)) {
            throw KeyAbsent("key not present in trie");
        }
        if (const auto* d = std::get_if<Digest>(&current)) {
            data = *reader_->read_node(*d);
        } else {
            const Node& n = *std::get<NodePtr>(current);
            if (n.dirty) {
                throw ChildNotHashed("cannot prove through a dirty node");
            }
            data = snapshot(n);
        }
        proof.push_back(serialize(data));

        const Node* mem = nullptr;
        if (const auto* p = std::get_if<NodePtr>(&current)) {
            mem = p->get();
        }
        switch (data.kind) {
            case NodeKind::leaf:
                if (NibblesView{data.path} != rest) {
                    throw KeyAbsent("key not present in trie");
                }
                return proof;
            case NodeKind::extension:
                if (!rest.starts_with(NibblesView{data.path})) {
                    throw KeyAbsent("key not present in trie");
                }
                rest.remove_prefix(data.path.size());
                current = mem != nullptr ? mem->next : NodeRef{*data.next};
                break;
            case NodeKind::branch:
                if (rest.empty()) {
                    if (!data.value) {
                        throw KeyAbsent("key not present in trie");
                    }
                    return proof;
                }
                if (mem != nullptr) {
                    current = (*mem->children)[rest[0]];
                } else if (data.children[rest[0]]) {
                    current = *data.children[rest[0]];
                } else {
                    current = std::monostate{};
                }
                rest.remove_prefix(1);
                break;
        }
    }
}

std::size_t Trie::dirty_count() const { return dirty_.size(); }

std::vector<LevelCensus> Trie::census() const {
    std::shared_lock lock{mutex_};
    std::vector<LevelCensus> levels;
    auto bump = [&](uint32_t level, NodeKind kind, std::size_t populated) {
        if (levels.size() <= level) {
            levels.resize(level + 1);
        }
        ++levels[level].nodes;
        if (kind == NodeKind::branch) {
            ++levels[level].branches;
            if (populated == 16) {
                ++levels[level].full_branches;
            }
        }
    };
    std::function<void(const NodeRef&, uint32_t)> walk = [&](const NodeRef& ref, uint32_t level) {
        if (std::holds_alternative<std::monostate>(ref)) {
            return;
        }
        if (const auto* d = std::get_if<Digest>(&ref)) {
            const auto data = reader_->read_node(*d);
            std::size_t populated = 0;
            for (const auto& c : data->children) {
                populated += c ? 1 : 0;
            }
            bump(level, data->kind, populated);
            if (data->kind == NodeKind::branch) {
                for (const auto& c : data->children) {
                    if (c) walk(NodeRef{*c}, level + 1);
                }
            } else if (data->kind == NodeKind::extension) {
                walk(NodeRef{*data->next}, level + static_cast<uint32_t>(data->path.size()));
            }
            return;
        }
        const Node& n = *std::get<NodePtr>(ref);
        std::size_t populated = 0;
        if (n.kind == NodeKind::branch) {
            for (const auto& c : *n.children) {
                populated += std::holds_alternative<std::monostate>(c) ? 0 : 1;
            }
        }
        bump(level, n.kind, populated);
        if (n.kind == NodeKind::branch) {
            for (const auto& c : *n.children) {
                walk(c, level + 1);
            }
        } else if (n.kind == NodeKind::extension) {
            walk(n.next, level + static_cast<uint32_t>(n.path.size()));
        }
    };
    walk(root_, 0);
    return levels;
}

EarlyHashStats Trie::early_hash_stats() const {
    EarlyHashStats s;
    for (std::size_t i = 0; i <= kDeepLevel; ++i) {
        s.early_hashed[i] = early_hashed_[i].load();
        s.redirtied[i] = redirtied_[i].load();
    }
    return s;
}

// -- pipeline -----------------------------------------------------------------------

bool Trie::children_clean(const Node& n, bool lock_children) {
    switch (n.kind) {
        case NodeKind::branch:
            for (const auto& c : *n.children) {
                if (!ref_clean(c, lock_children)) {
                    return false;
                }
            }
            return true;
        case NodeKind::extension:
            return ref_clean(n.next, lock_children);
        case NodeKind::leaf:
            return true;
    }
    return true;
}

std::vector<HashTask> Trie::collect_hashable(const HashPolicy& policy) {
    std::shared_lock lock{mutex_};
    std::vector<HashTask> out;
    for (uint32_t bucket = 0; bucket <= kDeepLevel; ++bucket) {
        if (!policy.level_ready(bucket)) {
            continue;
        }
        for (Node* n : dirty_.bucket_nodes(bucket)) {
            if (!policy.level_ready(n->level) || !children_clean(*n, true)) {
                continue;
            }
            if (n->kind == NodeKind::leaf && policy.withheld(*n)) {
                continue;
            }
            std::lock_guard guard{n->lock};
            if (!n->dirty || !n->attached || n->queued_version == n->version) {
                continue;
            }
            n->queued_version = n->version;
            out.push_back({n->shared_from_this(), n->version});
        }
    }
    return out;
}

void Trie::hash_ascend(const HashTask& task, const HashPolicy& policy,
                       const std::function<void(HashedNode&&)>& emit) {
    std::shared_lock lock{mutex_};
    Node* cur = task.node.get();
    bool first = true;
    while (cur != nullptr) {
        std::unique_lock guard{cur->lock};
        if (!cur->attached || !cur->dirty) {
            return;
        }
        if (first && cur->version != task.version) {
            return;
        }
        const bool hashable = policy.level_ready(cur->level) &&
                              !(cur->kind == NodeKind::leaf && policy.withheld(*cur)) &&
                              children_clean(*cur, false);
        if (!hashable) {
            if (first) {
                cur->queued_version = kNotQueued;
            }
            return;
        }
        HashedNode out;
        out.encoding = serialize(snapshot(*cur));
        out.digest = hash_(out.encoding);
        cur->hash = out.digest;
        cur->dirty = false;
        mark_hashed(*cur, policy.early());
        out.node = cur->shared_from_this();
        out.version = cur->version;
        if (cur->kind == NodeKind::leaf && !cur->preimage.empty()) {
            out.leaf_entry.emplace(cur->preimage, *cur->value);
        }
        Node* parent = cur->parent;
        guard.unlock();
        emit(std::move(out));
        first = false;
        cur = parent;
    }
}

bool Trie::if_current(const Node& node, uint64_t version, const std::function<void()>& fn) const {
    std::shared_lock lock{mutex_};
    std::lock_guard guard{node.lock};
    if (!node.attached || node.dirty || node.version != version) {
        return false;
    }
    fn();
    return true;
}

// -- proofs -------------------------------------------------------------------------

std::optional<Bytes> verify_proof(const Digest& root, ByteView key, const std::vector<Bytes>& proof, DigestFn hash) {
    const Nibbles nibbles = to_nibbles(key);
    NibblesView rest{nibbles};
    Digest expected = root;
    for (std::size_t i = 0; i < proof.size(); ++i) {
        if (hash(proof[i]) != expected) {
            return std::nullopt;
        }
        NodeData data;
        try {
            data = deserialize(proof[i]);
        } catch (const MalformedEncoding&) {
            return std::nullopt;
        }
        const bool last = i + 1 == proof.size();
        switch (data.kind) {
            case NodeKind::leaf:
                if (!last || NibblesView{data.path} != rest) {
                    return std::nullopt;
                }
                return data.value;
            case NodeKind::extension:
                if (!rest.starts_with(NibblesView{data.path})) {
                    return std::nullopt;
                }
                rest.remove_prefix(data.path.size());
                expected = *data.next;
                break;
            case NodeKind::branch:
                if (rest.empty()) {
                    return last ? data.value : std::nullopt;
                }
                if (!data.children[rest[0]]) {
                    return std::nullopt;
                }
                expected = *data.children[rest[0]];
                rest.remove_prefix(1);
                break;
        }
    }
    return std::nullopt;
}

}  // namespace pexec::mpt
