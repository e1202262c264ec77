// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/harness/commands.hpp>

#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include <pexec/common/errors.hpp>
#include <pexec/executor/engine.hpp>
#include <pexec/harness/metrics.hpp>
#include <pexec/kv/store.hpp>
#include <pexec/workload/generator.hpp>

namespace pexec::harness {

using executor::BlockResult;
using statedb::StateDb;

namespace {

    double cfg_double(const workload::ConfigMap& cfg, const std::string& key, double fallback) {
        auto it = cfg.find(key);
        if (it == cfg.end()) {
            return fallback;
        }
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) {
            throw std::invalid_argument("config " + key + ": not a number");
        }
        return v;
    }

    uint64_t cfg_u64(const workload::ConfigMap& cfg, const std::string& key, uint64_t fallback) {
        auto it = cfg.find(key);
        if (it == cfg.end()) {
            return fallback;
        }
        std::size_t pos = 0;
        const uint64_t v = std::stoull(it->second, &pos);
        if (pos != it->second.size() || it->second.find('-') != std::string::npos) {
            throw std::invalid_argument("config " + key + ": not an unsigned integer");
        }
        return v;
    }

    std::string cfg_str(const workload::ConfigMap& cfg, const std::string& key, std::string fallback) {
        auto it = cfg.find(key);
        return it == cfg.end() ? fallback : it->second;
    }

    //! A backing store plus the state database on top of it, built up to genesis.
    struct Instance {
        std::unique_ptr<kv::Store> store;
        std::unique_ptr<StateDb> db;
    };

    Instance open_instance(const Environment& env, const std::string& name) {
        Instance inst;
        std::string path;
        if (env.backend == "sqlite") {
            std::filesystem::create_directories(env.db_dir);
            path = (std::filesystem::path{env.db_dir} / (name + ".sqlite")).string();
            for (const char* suffix : {"", "-wal", "-shm"}) {
                std::filesystem::remove(path + suffix);
            }
        }
        inst.store = kv::open_store(env.backend, path);
        inst.db = std::make_unique<StateDb>(*inst.store, env.db);
        inst.db->commit_block_sync(0, workload::genesis_writes(env.spec));
        return inst;
    }

    RunMetrics to_metrics(const std::string& command, const std::string& engine, uint64_t height, uint32_t workers,
                          const workload::WorkloadSpec& spec, const BlockResult& r) {
        RunMetrics m;
        m.command = command;
        m.engine = engine;
        m.block_height = height;
        m.workers = workers;
        m.zipf_theta = spec.zipf_theta;
        m.contract_ratio = spec.contract_ratio;
        m.block_size = spec.block_size;
        m.wall_clock_ms = r.wall_ms;
        m.committed_tx = r.commit_order.size();
        m.aborted_tx = r.aborts;
        m.batches = r.batches;
        m.failed_tx = r.failed_txs;
        m.node_db_reads = r.stats.node_reads;
        m.node_db_writes = r.stats.node_writes;
        m.direct_db_reads = r.stats.direct_reads;
        for (std::size_t i = 0; i < r.stats.early.early_hashed.size(); ++i) {
            m.early_hashed += r.stats.early.early_hashed[i];
            m.early_hash_waste += r.stats.early.redirtied[i];
        }
        m.final_root = to_hex(r.root);
        return m;
    }

    template <typename Fn>
    int guarded(std::ostream& log, Fn&& fn) {
        try {
            return fn();
        } catch (const StorageFailure& e) {
            log << "storage failure: " << e.what() << '\n';
            return kExitIo;
        } catch (const Error& e) {
            log << "engine failure: " << e.what() << '\n';
            return kExitMismatch;
        } catch (const std::exception& e) {
            log << "error: " << e.what() << '\n';
            return kExitIo;
        }
    }

}  // namespace

Environment resolve(const HarnessOptions& opts) {
    const workload::ConfigMap cfg = opts.config_path.empty() ? workload::ConfigMap{} : workload::load_config(opts.config_path);
    Environment env;
    env.spec = workload::spec_from_config(cfg);
    if (opts.seed) {
        env.spec.seed = *opts.seed;
    }
    env.spec.validate();

    statedb::CommitConfig& c = env.db.commit;
    c.block_size = env.spec.block_size;
    c.alpha = opts.alpha.value_or(cfg_double(cfg, "alpha", c.alpha));
    c.mu = opts.mu.value_or(cfg_double(cfg, "mu", c.mu));
    c.workers = opts.workers.value_or(static_cast<uint32_t>(cfg_u64(cfg, "workers", c.workers)));
    c.retrieval_threads =
        opts.retrieval_threads.value_or(static_cast<uint32_t>(cfg_u64(cfg, "retrieval_threads", c.retrieval_threads)));
    c.commit_threads = opts.commit_threads.value_or(static_cast<uint32_t>(cfg_u64(cfg, "commit_threads", c.commit_threads)));
    c.validate();

    env.db.flush_interval = cfg_u64(cfg, "flush_interval", env.db.flush_interval);
    if (env.db.flush_interval == 0) {
        throw std::invalid_argument("flush_interval must be at least 1");
    }
    env.backend = cfg_str(cfg, "backend", env.backend);
    if (env.backend != "memory" && env.backend != "sqlite") {
        throw std::invalid_argument("backend must be memory or sqlite");
    }
    env.db_dir = cfg_str(cfg, "db_dir", env.db_dir);
    env.bench_blocks = std::max<uint64_t>(cfg_u64(cfg, "bench_blocks", env.bench_blocks), 1);
    return env;
}

std::optional<statedb::CrashPoint> parse_crash_point(const std::string& name) {
    if (name == "mid-store") {
        return statedb::CrashPoint::mid_store;
    }
    if (name == "mid-hash") {
        return statedb::CrashPoint::mid_hash;
    }
    if (name == "post-meta") {
        return statedb::CrashPoint::post_meta;
    }
    return std::nullopt;
}

int cmd_run(const HarnessOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Environment env = resolve(opts);
        bool want_serial = false;
        bool want_parallel = false;
        for (const auto& e : opts.engines) {
            if (e == "serial") {
                want_serial = true;
            } else if (e == "parallel") {
                want_parallel = true;
            } else {
                throw std::invalid_argument("unknown engine " + e);
            }
        }

        std::optional<CsvWriter> csv;
        if (!opts.out.empty()) {
            csv.emplace(opts.out);
        }
        Instance serial;
        Instance parallel;
        if (want_serial) {
            serial = open_instance(env, "serial");
        }
        if (want_parallel) {
            parallel = open_instance(env, "parallel");
        }
        executor::WorkerPool pool{env.db.commit.workers};
        executor::EngineOptions eopts;
        eopts.inject_skip_abort = opts.inject_skip_abort;

        workload::Generator gen{env.spec};
        for (uint64_t h = 1; h <= opts.blocks; ++h) {
            const executor::Block block = gen.next_block();
            std::optional<Digest> serial_root;
            std::optional<Digest> parallel_root;
            if (want_serial) {
                const BlockResult r = executor::serial_execute_block(block, *serial.db);
                serial_root = r.root;
                if (csv) {
                    csv->write(to_metrics("run", "serial", h, 1, env.spec, r));
                }
            }
            if (want_parallel) {
                const BlockResult r = executor::run_block(block, *parallel.db, pool, eopts);
                parallel_root = r.root;
                if (csv) {
                    csv->write(to_metrics("run", "parallel", h, env.db.commit.workers, env.spec, r));
                }
                log << fmt::format("block {} parallel: {} tx, {} aborts, {} batches, {:.1f} ms\n", h,
                                   r.commit_order.size(), r.aborts, r.batches, r.wall_ms);
            }
            if (serial_root && parallel_root && *serial_root != *parallel_root) {
                log << fmt::format("root mismatch at block {}: serial {} parallel {}\n", h, to_hex(*serial_root),
                                   to_hex(*parallel_root));
                return kExitMismatch;
            }
        }
        log << fmt::format("ok: {} blocks\n", opts.blocks);
        return kExitOk;
    });
}

int cmd_crash_test(const HarnessOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        Environment env = resolve(opts);
        const auto point = parse_crash_point(opts.crash_point);
        if (!point) {
            throw std::invalid_argument("crash point must be mid-store, mid-hash or post-meta");
        }
        // Small flushes so a mid-store crash leaves a partial block behind.
        env.db.flush_interval = std::min<std::size_t>(env.db.flush_interval, 32);
        const uint64_t target = std::max<uint64_t>(opts.blocks, 1);

        workload::Generator gen{env.spec};
        std::vector<executor::Block> blocks;
        for (uint64_t h = 1; h <= target; ++h) {
            blocks.push_back(gen.next_block());
        }
        const executor::Block& crash_block = blocks.back();
        executor::WorkerPool pool{env.db.commit.workers};

        // Durable state at height target-1, shared by every repetition.
        kv::MemoryStore base;
        {
            StateDb db{base, env.db};
            db.commit_block_sync(0, workload::genesis_writes(env.spec));
            for (uint64_t h = 1; h < target; ++h) {
                executor::run_block(blocks[h - 1], db, pool);
            }
        }

        Digest reference;
        uint64_t events = 0;
        {
            auto store = base.clone();
            StateDb db{*store, env.db};
            const BlockResult r = executor::run_block(crash_block, db, pool);
            reference = r.root;
            events = *point == statedb::CrashPoint::mid_hash ? r.stats.hash_events : r.stats.store_events;
        }
        log << fmt::format("reference root of block {}: {} ({} {} events)\n", target, to_hex(reference), events,
                           opts.crash_point);

        std::mt19937_64 rng{env.spec.seed ^ 0xc4a5bull};
        uint32_t failures = 0;
        for (uint32_t rep = 0; rep < std::max<uint32_t>(opts.repetitions, 1); ++rep) {
            auto store = base.clone();
            uint64_t offset = 0;
            if (*point != statedb::CrashPoint::post_meta && events > 0) {
                offset = std::uniform_int_distribution<uint64_t>{0, events - 1}(rng);
            }
            bool crashed = false;
            {
                StateDb db{*store, env.db};
                db.crash().arm(*point, offset);
                try {
                    executor::run_block(crash_block, db, pool);
                } catch (const SimulatedCrash&) {
                    crashed = true;
                }
            }
            // Fresh process: only the store survives.
            StateDb db{*store, env.db};
            const uint64_t durable = db.height().value_or(0);
            db.recover(durable);
            Digest root;
            bool replayed = false;
            if (durable < target) {
                root = executor::run_block(crash_block, db, pool).root;
                replayed = true;
            } else {
                root = *db.meta_root(target);
            }
            const bool ok = root == reference;
            failures += ok ? 0 : 1;
            log << fmt::format("rep {}: offset {} crashed {} durable {} replayed {} -> {}\n", rep, offset, crashed,
                               durable, replayed, ok ? "match" : "MISMATCH");
        }
        log << fmt::format("{} of {} repetitions matched\n", opts.repetitions - failures, opts.repetitions);
        return failures == 0 ? kExitOk : kExitMismatch;
    });
}

int cmd_bench(const HarnessOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Environment base_env = resolve(opts);
        std::optional<CsvWriter> csv;
        if (!opts.out.empty()) {
            csv.emplace(opts.out);
        }
        log << "zipf_theta workers throughput_tps abort_rate speedup\n";
        for (double theta : {0.0, 0.8, 1.2}) {
            Environment env = base_env;
            env.spec.zipf_theta = theta;
            double baseline = 0;
            for (uint32_t workers : {1u, 2u, 4u, 8u}) {
                env.db.commit.workers = workers;
                Instance inst = open_instance(env, "bench");
                executor::WorkerPool pool{workers};
                workload::Generator gen{env.spec};
                BlockResult total;
                double wall = 0;
                uint64_t committed = 0;
                uint64_t aborts = 0;
                uint64_t batches = 0;
                for (uint64_t h = 1; h <= env.bench_blocks; ++h) {
                    const BlockResult r = executor::run_block(gen.next_block(), *inst.db, pool);
                    wall += r.wall_ms;
                    committed += r.commit_order.size();
                    aborts += r.aborts;
                    batches += r.batches;
                    total = r;
                }
                const double tps = wall > 0 ? static_cast<double>(committed) / (wall / 1000.0) : 0.0;
                if (workers == 1) {
                    baseline = tps;
                }
                RunMetrics m = to_metrics("bench", "parallel", env.bench_blocks, workers, env.spec, total);
                m.wall_clock_ms = wall;
                m.committed_tx = committed;
                m.aborted_tx = aborts;
                m.batches = batches;
                m.throughput_tps = tps;
                m.abort_rate = committed > 0 ? static_cast<double>(aborts) / static_cast<double>(committed) : 0.0;
                m.speedup = workers == 1 ? 1.0 : (baseline > 0 ? tps / baseline : 0.0);
                if (csv) {
                    csv->write(m);
                }
                log << fmt::format("{:<10} {:<7} {:<14.1f} {:<10.4f} {:.3f}\n", theta, workers, tps, *m.abort_rate,
                                   *m.speedup);
            }
        }
        return kExitOk;
    });
}

}  // namespace pexec::harness
