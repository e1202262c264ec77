// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/statedb/commit_point.hpp>

#include <cmath>
#include <stdexcept>

namespace pexec::statedb {

void CommitConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must be in (0, 1)");
    }
    if (!(mu > 0.0)) {
        throw std::invalid_argument("mu must be positive");
    }
    if (block_size < 1 || workers < 1 || retrieval_threads < 1 || commit_threads < 1) {
        throw std::invalid_argument("block size and thread counts must be at least 1");
    }
}

double commit_point(uint32_t r, const CommitConfig& cfg) {
    if (r <= 1) {
        return 0.0;
    }
    if (r >= 4) {
        return static_cast<double>(cfg.block_size);
    }
    return -(std::pow(16.0, r) * std::log(cfg.alpha)) / cfg.mu;
}

}  // namespace pexec::statedb
