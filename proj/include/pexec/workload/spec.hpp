// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace pexec::workload {

struct WorkloadSpec {
    uint64_t seed{42};
    uint64_t num_accounts{10000};
    uint64_t num_contracts{64};
    uint64_t block_size{4000};
    double contract_ratio{0.0};
    double zipf_theta{0.0};
    double mu_target{2.0};
    //! Storage slots seeded per contract at genesis.
    uint32_t contract_slots{16};

    //! Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

/// Plain-text `key = value` configuration. `#` starts a comment; blank lines are ignored.
/// Keys are case-sensitive; unknown keys are kept for other consumers.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(const std::string& text);
//! Throws std::runtime_error when the file cannot be read.
ConfigMap load_config(const std::string& path);

//! Applies the workload keys of `cfg` over `base`. Throws std::invalid_argument on bad values.
WorkloadSpec spec_from_config(const ConfigMap& cfg, WorkloadSpec base = {});

}  // namespace pexec::workload
