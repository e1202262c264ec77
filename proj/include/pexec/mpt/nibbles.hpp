// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <pexec/common/bytes.hpp>

namespace pexec::mpt {

//! Sequence of 4-bit values, most-significant nibble of each byte first.
using Nibbles = std::basic_string<uint8_t>;
using NibblesView = std::basic_string_view<uint8_t>;

Nibbles to_nibbles(ByteView key);

//! Packs nibbles two per byte. Requires an even number of nibbles.
Bytes pack_nibbles(NibblesView nibbles);

std::size_t common_prefix_length(NibblesView a, NibblesView b) noexcept;

}  // namespace pexec::mpt
