// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/workload/zipf.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pexec::workload {

namespace {

    // log1p(x)/x and expm1(x)/x with series fallbacks near zero.
    double helper1(double x) {
        if (std::abs(x) > 1e-8) {
            return std::log1p(x) / x;
        }
        return 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
    }

    double helper2(double x) {
        if (std::abs(x) > 1e-8) {
            return std::expm1(x) / x;
        }
        return 1.0 + x * 0.5 * (1.0 + x / 3.0 * (1.0 + 0.25 * x));
    }

}  // namespace

ZipfSampler::ZipfSampler(uint64_t n, double theta) : n_{n}, theta_{theta} {
    if (n == 0) {
        throw std::invalid_argument("zipf support must be non-empty");
    }
    if (!(theta >= 0.0)) {
        throw std::invalid_argument("zipf theta must be >= 0");
    }
    if (theta > 0.0) {
        h_integral_x1_ = h_integral(1.5) - 1.0;
        h_integral_n_ = h_integral(static_cast<double>(n) + 0.5);
        s_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
    }
}

double ZipfSampler::h(double x) const { return std::exp(-theta_ * std::log(x)); }

double ZipfSampler::h_integral(double x) const {
    const double log_x = std::log(x);
    return helper2((1.0 - theta_) * log_x) * log_x;
}

double ZipfSampler::h_integral_inverse(double x) const {
    double t = x * (1.0 - theta_);
    if (t < -1.0) {
        t = -1.0;
    }
    return std::exp(helper1(t) * x);
}

uint64_t ZipfSampler::operator()(std::mt19937_64& rng) const {
    if (theta_ == 0.0) {
        return std::uniform_int_distribution<uint64_t>{1, n_}(rng);
    }
    std::uniform_real_distribution<double> uniform{0.0, 1.0};
    while (true) {
        const double u = h_integral_n_ + uniform(rng) * (h_integral_x1_ - h_integral_n_);
        const double x = h_integral_inverse(u);
        auto k = static_cast<uint64_t>(std::clamp(x + 0.5, 1.0, static_cast<double>(n_)));
        const auto kd = static_cast<double>(k);
        if (kd - x <= s_ || u >= h_integral(kd + 0.5) - h(kd)) {
            return k;
        }
    }
}

}  // namespace pexec::workload
