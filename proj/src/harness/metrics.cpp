// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/harness/metrics.hpp>

#include <filesystem>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace pexec::harness {

namespace {

    std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : std::string{}; }

    std::vector<std::string> split(const std::string& line) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream in{line};
        while (std::getline(in, cell, ',')) {
            out.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            out.emplace_back();
        }
        return out;
    }

    uint64_t u(const std::string& s) { return std::stoull(s); }
    double d(const std::string& s) { return std::stod(s); }
    std::optional<double> od(const std::string& s) { return s.empty() ? std::nullopt : std::optional<double>{std::stod(s)}; }

}  // namespace

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "schema_version", "command",        "engine",        "block_height",   "workers",
        "zipf_theta",     "contract_ratio", "block_size",    "wall_clock_ms",  "committed_tx",
        "aborted_tx",     "batches",        "failed_tx",     "node_db_reads",  "node_db_writes",
        "direct_db_reads", "early_hashed",  "early_hash_waste", "throughput_tps", "abort_rate",
        "speedup",        "final_root",
    };
    return cols;
}

std::string csv_header() {
    std::string out;
    for (const auto& c : csv_columns()) {
        if (!out.empty()) {
            out += ',';
        }
        out += c;
    }
    return out;
}

std::string csv_row(const RunMetrics& m) {
    return fmt::format("{},{},{},{},{},{:.6g},{:.6g},{},{:.3f},{},{},{},{},{},{},{},{},{},{},{},{},{}", kCsvSchemaVersion,
                       m.command, m.engine, m.block_height, m.workers, m.zipf_theta, m.contract_ratio, m.block_size,
                       m.wall_clock_ms, m.committed_tx, m.aborted_tx, m.batches, m.failed_tx, m.node_db_reads,
                       m.node_db_writes, m.direct_db_reads, m.early_hashed, m.early_hash_waste, opt(m.throughput_tps),
                       opt(m.abort_rate), opt(m.speedup), m.final_root);
}

RunMetrics parse_csv_row(const std::string& line) {
    const auto cells = split(line);
    if (cells.size() != csv_columns().size()) {
        throw std::invalid_argument(fmt::format("expected {} columns, got {}", csv_columns().size(), cells.size()));
    }
    if (cells[0] != std::to_string(kCsvSchemaVersion)) {
        throw std::invalid_argument("unknown schema version " + cells[0]);
    }
    try {
        RunMetrics m;
        m.command = cells[1];
        m.engine = cells[2];
        m.block_height = u(cells[3]);
        m.workers = static_cast<uint32_t>(u(cells[4]));
        m.zipf_theta = d(cells[5]);
        m.contract_ratio = d(cells[6]);
        m.block_size = u(cells[7]);
        m.wall_clock_ms = d(cells[8]);
        m.committed_tx = u(cells[9]);
        m.aborted_tx = u(cells[10]);
        m.batches = u(cells[11]);
        m.failed_tx = u(cells[12]);
        m.node_db_reads = u(cells[13]);
        m.node_db_writes = u(cells[14]);
        m.direct_db_reads = u(cells[15]);
        m.early_hashed = u(cells[16]);
        m.early_hash_waste = u(cells[17]);
        m.throughput_tps = od(cells[18]);
        m.abort_rate = od(cells[19]);
        m.speedup = od(cells[20]);
        m.final_root = cells[21];
        return m;
    } catch (const std::logic_error& e) {
        throw std::invalid_argument(std::string{"bad cell: "} + e.what());
    }
}

CsvWriter::CsvWriter(const std::string& path) {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    out_.open(path, std::ios::app);
    if (!out_) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    if (fresh) {
        out_ << csv_header() << '\n';
    }
}

void CsvWriter::write(const RunMetrics& m) {
    out_ << csv_row(m) << '\n';
    out_.flush();
    if (!out_) {
        throw std::runtime_error("write to metrics CSV failed");
    }
}

}  // namespace pexec::harness
