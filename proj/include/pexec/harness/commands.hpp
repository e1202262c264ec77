// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <pexec/statedb/commit_point.hpp>
#include <pexec/statedb/state_db.hpp>
#include <pexec/workload/spec.hpp>

namespace pexec::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitMismatch = 2;

//! Command-line options. Unset optionals fall back to the config file, then to defaults.
struct HarnessOptions {
    std::string config_path;
    std::vector<std::string> engines{"serial", "parallel"};
    uint64_t blocks{10};
    std::optional<uint32_t> workers;
    std::optional<uint32_t> retrieval_threads;
    std::optional<uint32_t> commit_threads;
    std::optional<double> alpha;
    std::optional<double> mu;
    std::string out;
    std::optional<uint64_t> seed;
    bool inject_skip_abort{false};
    std::string crash_point{"mid-store"};
    uint32_t repetitions{1};
};

//! Everything a command needs after merging flags, config and defaults.
struct Environment {
    workload::WorkloadSpec spec;
    statedb::StateDbOptions db;
    std::string backend{"memory"};
    std::string db_dir{"pexec-data"};
    uint64_t bench_blocks{2};
};

//! Throws std::runtime_error (unreadable config) or std::invalid_argument (bad values).
Environment resolve(const HarnessOptions& opts);

std::optional<statedb::CrashPoint> parse_crash_point(const std::string& name);

//! Runs the selected engines block by block. Exit 2 on a root mismatch, 1 on I/O failure.
int cmd_run(const HarnessOptions& opts, std::ostream& log);

/// Crashes block l+1 at the chosen point, recovers to the last durable height and
/// replays. Exit 0 iff every repetition reproduces the crash-free root.
int cmd_crash_test(const HarnessOptions& opts, std::ostream& log);

//! Sweeps workers over {1, 2, 4, 8} and zipf_theta over {0, 0.8, 1.2}.
int cmd_bench(const HarnessOptions& opts, std::ostream& log);

}  // namespace pexec::harness
