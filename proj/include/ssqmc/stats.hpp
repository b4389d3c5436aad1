#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ssqmc/noise.hpp"

namespace ssqmc {

// Streaming mean/variance of a complex sample, real and imaginary parts
// tracked separately (Welford update, Chan merge). Merging is exact in
// arithmetic and deterministic as long as the merge order is fixed.
struct MomentAccumulator {
    std::int64_t n = 0;
    cplx mean{0.0, 0.0};
    double m2_re = 0.0;
    double m2_im = 0.0;

    void add(cplx x) {
        ++n;
        const cplx d = x - mean;
        mean += d / static_cast<double>(n);
        const cplx d2 = x - mean;
        m2_re += d.real() * d2.real();
        m2_im += d.imag() * d2.imag();
    }

    void merge(const MomentAccumulator& o) {
        if (o.n == 0) return;
        if (n == 0) { *this = o; return; }
        const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
        const cplx d = o.mean - mean;
        const double nab = na + nb;
        mean += d * (nb / nab);
        m2_re += o.m2_re + d.real() * d.real() * na * nb / nab;
        m2_im += o.m2_im + d.imag() * d.imag() * na * nb / nab;
        n += o.n;
    }

    // unbiased sample variances
    double variance_real() const { return n > 1 ? m2_re / static_cast<double>(n - 1) : 0.0; }
    double variance_imag() const { return n > 1 ? m2_im / static_cast<double>(n - 1) : 0.0; }
    double stderr_real() const { return n > 0 ? std::sqrt(variance_real() / static_cast<double>(n)) : 0.0; }
    double stderr_imag() const { return n > 0 ? std::sqrt(variance_imag() / static_cast<double>(n)) : 0.0; }
    // combined standard error of the complex mean
    double stderr_combined() const {
        return n > 0 ? std::sqrt((variance_real() + variance_imag()) / static_cast<double>(n)) : 0.0;
    }
};

// Ensemble moments on a fixed time grid. cell(k, j) is the accumulator for
// observable j at time_grid[k].
struct EnsembleStats {
    std::vector<double> time_grid;
    std::vector<std::string> observable_names;
    std::vector<MomentAccumulator> cells; // row-major: time index major
    std::int64_t n_requested = 0;
    std::int64_t n_divergent = 0;
    std::int64_t n_flagged = 0; // soft invariant violations, still averaged

    std::size_t n_times() const { return time_grid.size(); }
    std::size_t n_observables() const { return observable_names.size(); }

    const MomentAccumulator& cell(std::size_t t, std::size_t obs) const {
        return cells[t * observable_names.size() + obs];
    }
    MomentAccumulator& cell(std::size_t t, std::size_t obs) {
        return cells[t * observable_names.size() + obs];
    }

    std::int64_t n_kept() const { return n_requested - n_divergent; }
};

} // namespace ssqmc
