// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace pexec::statedb {

struct CommitConfig {
    double alpha{0.9};
    double mu{2.0};
    uint64_t block_size{4000};
    uint32_t workers{4};            // η
    uint32_t retrieval_threads{2};  // ζ_r
    uint32_t commit_threads{2};     // ζ_c

    //! Throws std::invalid_argument unless 0 < alpha < 1, mu > 0 and all counts >= 1.
    void validate() const;
};

/// Remaining-transaction threshold at or below which a level-`r` node may be hashed.
///
///   r <= 1      0
///   2 <= r <= 3 -(16^r ln alpha) / mu
///   r >= 4      block_size
double commit_point(uint32_t r, const CommitConfig& cfg);

}  // namespace pexec::statedb
