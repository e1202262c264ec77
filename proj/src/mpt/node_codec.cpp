// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/mpt/node_codec.hpp>

#include <pexec/common/errors.hpp>

namespace pexec::mpt {

namespace {

    void put_path(Bytes& out, NibblesView path) {
        append_u32_be(out, static_cast<uint32_t>(path.size()));
        for (std::size_t i = 0; i < path.size(); i += 2) {
            const uint8_t hi = path[i];
            const uint8_t lo = i + 1 < path.size() ? path[i + 1] : 0;
            out.push_back(static_cast<uint8_t>((hi << 4) | lo));
        }
    }

    void put_value(Bytes& out, const Bytes& value) {
        append_u32_be(out, static_cast<uint32_t>(value.size()));
        out.append(value);
    }

    class Reader {
      public:
        explicit Reader(ByteView in) : in_{in} {}

        ByteView take(std::size_t n) {
            if (in_.size() < n) {
                throw MalformedEncoding("truncated node encoding");
            }
            ByteView out = in_.substr(0, n);
            in_.remove_prefix(n);
            return out;
        }

        uint8_t byte() { return take(1)[0]; }
        uint32_t u32() { return read_u32_be(take(4)); }

        Digest digest() {
            return *Digest::from_view(take(32));
        }

        Nibbles path() {
            const uint32_t count = u32();
            if (count > 2 * in_.size()) {
                throw MalformedEncoding("path length exceeds input");
            }
            ByteView packed = take((count + 1) / 2);
            Nibbles out;
            out.reserve(count);
            for (uint32_t i = 0; i < count; ++i) {
                const uint8_t b = packed[i / 2];
                out.push_back(i % 2 == 0 ? static_cast<uint8_t>(b >> 4) : static_cast<uint8_t>(b & 0x0f));
            }
            if (count % 2 == 1 && (packed.back() & 0x0f) != 0) {
                throw MalformedEncoding("non-zero path padding");
            }
            return out;
        }

        Bytes value() {
            const uint32_t len = u32();
            if (len == 0) {
                throw MalformedEncoding("empty value");
            }
            ByteView v = take(len);
            return Bytes{v};
        }

        [[nodiscard]] bool done() const noexcept { return in_.empty(); }

      private:
        ByteView in_;
    };

}  // namespace

Bytes serialize(const NodeData& node) {
    Bytes out;
    out.push_back(static_cast<uint8_t>(node.kind));
    switch (node.kind) {
        case NodeKind::branch: {
            uint16_t bitmap = 0;
            for (std::size_t i = 0; i < 16; ++i) {
                if (node.children[i]) {
                    bitmap |= static_cast<uint16_t>(1u << i);
                }
            }
            out.push_back(static_cast<uint8_t>(bitmap >> 8));
            out.push_back(static_cast<uint8_t>(bitmap));
            for (const auto& child : node.children) {
                if (child) {
                    out.append(child->view());
                }
            }
            out.push_back(node.value ? 1 : 0);
            if (node.value) {
                put_value(out, *node.value);
            }
            break;
        }
        case NodeKind::extension:
            put_path(out, node.path);
            out.append(node.next->view());
            break;
        case NodeKind::leaf:
            put_path(out, node.path);
            put_value(out, *node.value);
            break;
    }
    return out;
}

NodeData deserialize(ByteView encoded) {
    Reader r{encoded};
    NodeData node;
    const uint8_t tag = r.byte();
    switch (tag) {
        case 0: {
            node.kind = NodeKind::branch;
            const uint16_t bitmap = static_cast<uint16_t>((r.byte() << 8) | r.byte());
            std::size_t populated = 0;
            for (std::size_t i = 0; i < 16; ++i) {
                if (bitmap & (1u << i)) {
                    node.children[i] = r.digest();
                    ++populated;
                }
            }
            const uint8_t has_value = r.byte();
            if (has_value > 1) {
                throw MalformedEncoding("bad value presence flag");
            }
            if (has_value) {
                node.value = r.value();
                ++populated;
            }
            if (populated < 2) {
                throw MalformedEncoding("branch populates fewer than two slots");
            }
            break;
        }
        case 1:
            node.kind = NodeKind::extension;
            node.path = r.path();
            if (node.path.empty()) {
                throw MalformedEncoding("extension with empty path");
            }
            node.next = r.digest();
            break;
        case 2:
            node.kind = NodeKind::leaf;
            node.path = r.path();
            node.value = r.value();
            break;
        default:
            throw MalformedEncoding("unknown node tag");
    }
    if (!r.done()) {
        throw MalformedEncoding("trailing bytes after node");
    }
    return node;
}

Digest empty_root(DigestFn hash) noexcept { return hash(ByteView{}); }

}  // namespace pexec::mpt
