// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/common/keccak.hpp>

#include <bit>

namespace pexec {

namespace {

    constexpr std::array<uint64_t, 24> kRoundConstants{
        0x0000000000000001ull, 0x0000000000008082ull, 0x800000000000808aull, 0x8000000080008000ull,
        0x000000000000808bull, 0x0000000080000001ull, 0x8000000080008081ull, 0x8000000000008009ull,
        0x000000000000008aull, 0x0000000000000088ull, 0x0000000080008009ull, 0x000000008000000aull,
        0x000000008000808bull, 0x800000000000008bull, 0x8000000000008089ull, 0x8000000000008003ull,
        0x8000000000008002ull, 0x8000000000000080ull, 0x000000000000800aull, 0x800000008000000aull,
        0x8000000080008081ull, 0x8000000000008080ull, 0x0000000080000001ull, 0x8000000080008008ull,
    };

    // rho offsets and pi lane order, walking the (x, y) -> (y, 2x + 3y) cycle from lane 1
    constexpr std::array<int, 24> kRho{1,  3,  6,  10, 15, 21, 28, 36, 45, 55, 2,  14,
                                       27, 41, 56, 8,  25, 43, 62, 18, 39, 61, 20, 44};
    constexpr std::array<int, 24> kPi{10, 7,  11, 17, 18, 3, 5,  16, 8,  21, 24, 4,
                                      15, 23, 19, 13, 12, 2, 20, 14, 22, 9,  6,  1};

    void keccak_f1600(std::array<uint64_t, 25>& a) noexcept {
        for (uint64_t rc : kRoundConstants) {
            std::array<uint64_t, 5> c{};
            for (int x = 0; x < 5; ++x) {
                c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
            }
            for (int x = 0; x < 5; ++x) {
                const uint64_t d = c[(x + 4) % 5] ^ std::rotl(c[(x + 1) % 5], 1);
                for (int y = 0; y < 25; y += 5) {
                    a[y + x] ^= d;
                }
            }
            uint64_t carry = a[1];
            for (int i = 0; i < 24; ++i) {
                const int j = kPi[i];
                const uint64_t tmp = a[j];
                a[j] = std::rotl(carry, kRho[i]);
                carry = tmp;
            }
            for (int y = 0; y < 25; y += 5) {
                std::array<uint64_t, 5> row{};
                for (int x = 0; x < 5; ++x) {
                    row[x] = a[y + x];
                }
                for (int x = 0; x < 5; ++x) {
                    a[y + x] = row[x] ^ (~row[(x + 1) % 5] & row[(x + 2) % 5]);
                }
            }
            a[0] ^= rc;
        }
    }

    uint64_t load_le(const uint8_t* p) noexcept {
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) {
            v = (v << 8) | p[i];
        }
        return v;
    }

    Digest sponge_256(ByteView data, uint8_t domain) noexcept {
        constexpr std::size_t kRate = 136;
        std::array<uint64_t, 25> state{};

        while (data.size() >= kRate) {
            for (std::size_t i = 0; i < kRate / 8; ++i) {
                state[i] ^= load_le(data.data() + 8 * i);
            }
            keccak_f1600(state);
            data.remove_prefix(kRate);
        }

        std::array<uint8_t, kRate> block{};
        std::copy(data.begin(), data.end(), block.begin());
        block[data.size()] ^= domain;
        block[kRate - 1] ^= 0x80;
        for (std::size_t i = 0; i < kRate / 8; ++i) {
            state[i] ^= load_le(block.data() + 8 * i);
        }
        keccak_f1600(state);

        Digest out;
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t b = 0; b < 8; ++b) {
                out.bytes[8 * i + b] = static_cast<uint8_t>(state[i] >> (8 * b));
            }
        }
        return out;
    }

}  // namespace

Digest keccak256(ByteView data) noexcept { return sponge_256(data, 0x01); }

Digest sha3_256(ByteView data) noexcept { return sponge_256(data, 0x06); }

}  // namespace pexec
