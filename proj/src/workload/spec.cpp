// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/workload/spec.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pexec::workload {

namespace {

    std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            return {};
        }
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    uint64_t to_u64(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        try {
            const unsigned long long out = std::stoull(v, &pos, 0);
            if (pos == v.size() && v.find('-') == std::string::npos) {
                return out;
            }
        } catch (const std::exception&) {
        }
        throw std::invalid_argument("config " + key + ": not an unsigned integer: " + v);
    }

    double to_double(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        try {
            const double out = std::stod(v, &pos);
            if (pos == v.size()) {
                return out;
            }
        } catch (const std::exception&) {
        }
        throw std::invalid_argument("config " + key + ": not a number: " + v);
    }

}  // namespace

void WorkloadSpec::validate() const {
    if (block_size < 1) {
        throw std::invalid_argument("block_size must be at least 1");
    }
    if (num_accounts < 2) {
        throw std::invalid_argument("num_accounts must be at least 2");
    }
    if (!(contract_ratio >= 0.0 && contract_ratio <= 1.0)) {
        throw std::invalid_argument("contract_ratio must be in [0, 1]");
    }
    if (contract_ratio > 0.0 && num_contracts == 0) {
        throw std::invalid_argument("contract_ratio > 0 needs num_contracts > 0");
    }
    if (!(zipf_theta >= 0.0)) {
        throw std::invalid_argument("zipf_theta must be >= 0");
    }
    if (!(mu_target >= 2.0)) {
        throw std::invalid_argument("mu_target must be >= 2 (sender and receiver)");
    }
}

ConfigMap parse_config(const std::string& text) {
    ConfigMap out;
    std::istringstream in{text};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        }
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

ConfigMap load_config(const std::string& path) {
    std::ifstream f{path};
    if (!f) {
        throw std::runtime_error("cannot read config " + path);
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

WorkloadSpec spec_from_config(const ConfigMap& cfg, WorkloadSpec spec) {
    for (const auto& [k, v] : cfg) {
        if (k == "seed") {
            spec.seed = to_u64(k, v);
        } else if (k == "num_accounts") {
            spec.num_accounts = to_u64(k, v);
        } else if (k == "num_contracts") {
            spec.num_contracts = to_u64(k, v);
        } else if (k == "block_size") {
            spec.block_size = to_u64(k, v);
        } else if (k == "contract_ratio") {
            spec.contract_ratio = to_double(k, v);
        } else if (k == "zipf_theta") {
            spec.zipf_theta = to_double(k, v);
        } else if (k == "mu_target") {
            spec.mu_target = to_double(k, v);
        } else if (k == "contract_slots") {
            spec.contract_slots = static_cast<uint32_t>(to_u64(k, v));
        }
    }
    spec.validate();
    return spec;
}

}  // namespace pexec::workload
