// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <pexec/common/bytes.hpp>

namespace pexec {

//! Original Keccak-256 (pre-FIPS padding 0x01), as used for Ethereum identifiers.
Digest keccak256(ByteView data) noexcept;

//! FIPS 202 SHA3-256. Shares the permutation with keccak256; differs only in padding.
Digest sha3_256(ByteView data) noexcept;

//! Pluggable digest function. Tries default to keccak256.
using DigestFn = Digest (*)(ByteView) noexcept;

}  // namespace pexec
