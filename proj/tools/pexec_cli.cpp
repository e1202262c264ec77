// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <CLI11.hpp>

#include <pexec/harness/commands.hpp>

namespace {

void add_common(CLI::App* cmd, pexec::harness::HarnessOptions& o) {
    cmd->add_option("--config", o.config_path, "Workload and engine config (key = value)");
    cmd->add_option("--blocks", o.blocks, "Number of blocks")->check(CLI::PositiveNumber);
    cmd->add_option("--workers", o.workers, "Execution threads")->check(CLI::PositiveNumber);
    cmd->add_option("--retrieval-threads", o.retrieval_threads, "State retrieval threads")->check(CLI::PositiveNumber);
    cmd->add_option("--commit-threads", o.commit_threads, "Storage-trie commit threads")->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", o.alpha, "Commit-point reuse probability bound");
    cmd->add_option("--mu", o.mu, "Mean accounts touched per transaction");
    cmd->add_option("--seed", o.seed, "Workload seed");
    cmd->add_option("--out", o.out, "Metrics CSV (appended)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pexec: pipelined state commitment and batched optimistic execution"};
    app.require_subcommand(1);

    pexec::harness::HarnessOptions opts;
    auto* run = app.add_subcommand("run", "Execute blocks with the selected engines and compare roots");
    add_common(run, opts);
    run->add_option("--engines", opts.engines, "serial, parallel or both")
        ->delimiter(',')
        ->check(CLI::IsMember({"serial", "parallel"}));
    run->add_flag("--inject-skip-abort", opts.inject_skip_abort, "Commit stale records instead of aborting");

    auto* crash = app.add_subcommand("crash-test", "Crash a block mid-commit, recover and replay");
    add_common(crash, opts);
    crash->add_option("--crash-point", opts.crash_point, "mid-store, mid-hash or post-meta")
        ->check(CLI::IsMember({"mid-store", "mid-hash", "post-meta"}));
    crash->add_option("--repetitions", opts.repetitions, "Crash offsets to try")->check(CLI::PositiveNumber);

    auto* bench = app.add_subcommand("bench", "Sweep workers and contention");
    add_common(bench, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pexec::harness::kExitIo;
    }

    if (run->parsed()) {
        return pexec::harness::cmd_run(opts, std::cout);
    }
    if (crash->parsed()) {
        return pexec::harness::cmd_crash_test(opts, std::cout);
    }
    return pexec::harness::cmd_bench(opts, std::cout);
}
