// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace pexec::workload {

/// Zipf(theta) over ranks 1..n by rejection-inversion (Hormann and Derflinger 1996).
/// theta == 0 degenerates to the uniform distribution.
class ZipfSampler {
  public:
    ZipfSampler(uint64_t n, double theta);

    //! Rank in [1, n]; rank 1 is the most popular.
    uint64_t operator()(std::mt19937_64& rng) const;

    [[nodiscard]] uint64_t n() const noexcept { return n_; }
    [[nodiscard]] double theta() const noexcept { return theta_; }

  private:
    [[nodiscard]] double h(double x) const;
    [[nodiscard]] double h_integral(double x) const;
    [[nodiscard]] double h_integral_inverse(double x) const;

    uint64_t n_;
    double theta_;
    double h_integral_x1_{0};
    double h_integral_n_{0};
    double s_{0};
};

}  // namespace pexec::workload
