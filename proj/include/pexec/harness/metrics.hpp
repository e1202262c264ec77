// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace pexec::harness {

//! Bump whenever a column is added, removed, renamed or reordered.
inline constexpr int kCsvSchemaVersion = 1;

/// One CSV row. `run` writes one row per engine per block; `bench` writes one row per
/// (workers, zipf_theta) cell with the throughput columns filled.
struct RunMetrics {
    std::string command;  // run | bench
    std::string engine;   // serial | parallel
    uint64_t block_height{0};
    uint32_t workers{0};
    double zipf_theta{0};
    double contract_ratio{0};
    uint64_t block_size{0};
    double wall_clock_ms{0};
    uint64_t committed_tx{0};
    uint64_t aborted_tx{0};
    uint64_t batches{0};
    uint64_t failed_tx{0};
    uint64_t node_db_reads{0};
    uint64_t node_db_writes{0};
    uint64_t direct_db_reads{0};
    uint64_t early_hashed{0};
    uint64_t early_hash_waste{0};
    std::optional<double> throughput_tps;
    std::optional<double> abort_rate;
    std::optional<double> speedup;
    std::string final_root;
};

const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string csv_row(const RunMetrics& m);

//! Parses a data row written by csv_row. Throws std::invalid_argument on schema mismatch.
RunMetrics parse_csv_row(const std::string& line);

//! Appends rows to a CSV file, writing the header first when the file is new or empty.
class CsvWriter {
  public:
    //! Throws std::runtime_error when the file cannot be opened.
    explicit CsvWriter(const std::string& path);
    void write(const RunMetrics& m);

  private:
    std::ofstream out_;
};

}  // namespace pexec::harness
