// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/statedb/account.hpp>

#include <pexec/common/errors.hpp>

namespace pexec {

Bytes32 to_bytes32(const u256& v) {
    Bytes32 out;
    Bytes tmp;
    boost::multiprecision::export_bits(v, std::back_inserter(tmp), 8);
    std::copy(tmp.begin(), tmp.end(), out.bytes.end() - static_cast<std::ptrdiff_t>(tmp.size()));
    return out;
}

u256 to_u256(ByteView be) {
    u256 v{0};
    if (!be.empty()) {
        boost::multiprecision::import_bits(v, be.begin(), be.end(), 8);
    }
    return v;
}

}  // namespace pexec

namespace pexec::statedb {

namespace {

    void put_optional_digest(Bytes& out, const std::optional<Digest>& d) {
        out.push_back(d ? 1 : 0);
        if (d) {
            out.append(d->view());
        }
    }

    std::optional<Digest> take_optional_digest(ByteView& in) {
        if (in.empty() || in[0] > 1) {
            throw MalformedEncoding("bad presence byte");
        }
        const bool present = in[0] == 1;
        in.remove_prefix(1);
        if (!present) {
            return std::nullopt;
        }
        if (in.size() < 32) {
            throw MalformedEncoding("truncated digest");
        }
        auto d = Digest::from_view(in.substr(0, 32));
        in.remove_prefix(32);
        return d;
    }

    AccountBody take_body(ByteView& in) {
        if (in.size() < 40) {
            throw MalformedEncoding("truncated account");
        }
        AccountBody b;
        b.balance = to_u256(in.substr(0, 32));
        b.nonce = read_u64_be(in.substr(32, 8));
        in.remove_prefix(40);
        b.code_hash = take_optional_digest(in);
        return b;
    }

}  // namespace

Bytes StateKey::encode() const {
    Bytes out{address.view()};
    if (slot) {
        out.append(slot->view());
    }
    return out;
}

std::optional<StateKey> StateKey::decode(ByteView encoded) {
    if (encoded.size() == 20) {
        return account(*Address::from_view(encoded));
    }
    if (encoded.size() == 52) {
        return storage(*Address::from_view(encoded.substr(0, 20)), *Bytes32::from_view(encoded.substr(20)));
    }
    return std::nullopt;
}

Bytes AccountBody::encode() const {
    Bytes out{to_bytes32(balance).view()};
    append_u64_be(out, nonce);
    put_optional_digest(out, code_hash);
    return out;
}

AccountBody AccountBody::decode(ByteView encoded) {
    if (encoded.empty()) {
        return {};
    }
    AccountBody b = take_body(encoded);
    if (!encoded.empty()) {
        throw MalformedEncoding("trailing bytes after account");
    }
    return b;
}

Bytes AccountState::encode() const {
    Bytes out = body.encode();
    put_optional_digest(out, storage_root);
    return out;
}

AccountState AccountState::decode(ByteView encoded) {
    if (encoded.empty()) {
        return {};
    }
    AccountState s;
    s.body = take_body(encoded);
    s.storage_root = take_optional_digest(encoded);
    if (!encoded.empty()) {
        throw MalformedEncoding("trailing bytes after account state");
    }
    return s;
}

Bytes encode_word(const u256& v) { return Bytes{to_bytes32(v).view()}; }

u256 decode_word(ByteView encoded) {
    if (encoded.size() > 32) {
        throw MalformedEncoding("word longer than 32 bytes");
    }
    return to_u256(encoded);
}

}  // namespace pexec::statedb
