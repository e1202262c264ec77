// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/mpt/nibbles.hpp>

#include <cassert>

namespace pexec::mpt {

Nibbles to_nibbles(ByteView key) {
    Nibbles out;
    out.reserve(key.size() * 2);
    for (uint8_t b : key) {
        out.push_back(static_cast<uint8_t>(b >> 4));
        out.push_back(static_cast<uint8_t>(b & 0x0f));
    }
    return out;
}

Bytes pack_nibbles(NibblesView nibbles) {
    assert(nibbles.size() % 2 == 0);
    Bytes out;
    out.reserve(nibbles.size() / 2);
    for (std::size_t i = 0; i + 1 < nibbles.size(); i += 2) {
        out.push_back(static_cast<uint8_t>((nibbles[i] << 4) | nibbles[i + 1]));
    }
    return out;
}

std::size_t common_prefix_length(NibblesView a, NibblesView b) noexcept {
    const std::size_t n = std::min(a.size(), b.size());
    std::size_t i = 0;
    while (i < n && a[i] == b[i]) {
        ++i;
    }
    return i;
}

}  // namespace pexec::mpt
