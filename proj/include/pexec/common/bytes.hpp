// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace pexec {

using Bytes = std::basic_string<uint8_t>;
using ByteView = std::basic_string_view<uint8_t>;

//! Fixed-width byte array with value semantics, ordering and hashing.
template <std::size_t N>
struct FixedBytes {
    static constexpr std::size_t size() noexcept { return N; }

    std::array<uint8_t, N> bytes{};

    [[nodiscard]] ByteView view() const noexcept { return {bytes.data(), N}; }
    [[nodiscard]] const uint8_t* data() const noexcept { return bytes.data(); }
    [[nodiscard]] uint8_t* data() noexcept { return bytes.data(); }

    [[nodiscard]] bool is_zero() const noexcept {
        return std::all_of(bytes.begin(), bytes.end(), [](uint8_t b) { return b == 0; });
    }

    //! Copies exactly N bytes; returns nullopt when `src` has another length.
    static std::optional<FixedBytes> from_view(ByteView src) noexcept {
        if (src.size() != N) {
            return std::nullopt;
        }
        FixedBytes out;
        std::memcpy(out.bytes.data(), src.data(), N);
        return out;
    }

    friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
    friend bool operator==(const FixedBytes&, const FixedBytes&) = default;
};

using Address = FixedBytes<20>;
using Bytes32 = FixedBytes<32>;
//! 32-byte cryptographic digest. Node identifiers and root hashes.
using Digest = Bytes32;

inline ByteView to_view(std::string_view s) noexcept {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);
template <std::size_t N>
std::string to_hex(const FixedBytes<N>& b) {
    return to_hex(b.view());
}

//! Accepts an optional 0x prefix. Returns nullopt on odd length or bad digits.
std::optional<Bytes> from_hex(std::string_view hex);

void append_u32_be(Bytes& out, uint32_t v);
void append_u64_be(Bytes& out, uint64_t v);
uint32_t read_u32_be(ByteView in);
uint64_t read_u64_be(ByteView in);

}  // namespace pexec

template <std::size_t N>
struct std::hash<pexec::FixedBytes<N>> {
    std::size_t operator()(const pexec::FixedBytes<N>& b) const noexcept {
        // Inputs are mostly hash outputs or addresses; FNV-1a over all bytes keeps
        // structured test keys well distributed too.
        std::size_t h = 1469598103934665603ull;
        for (uint8_t c : b.bytes) {
            h = (h ^ c) * 1099511628211ull;
        }
        return h;
    }
};
