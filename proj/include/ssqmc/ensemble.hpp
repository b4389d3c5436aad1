#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ssqmc/rng.hpp"
#include "ssqmc/stats.hpp"
#include "ssqmc/trajectory.hpp"

namespace ssqmc {

struct EnsembleOptions {
    std::int64_t n_traj = 1000;
    double dt = 1e-3;
    long n_steps = 1000;
    long sample_stride = 10;     // record observables every this many steps
    std::uint64_t master_seed = 1234;
    int threads = 0;             // 0 = hardware concurrency
    double divergence_cap = 1e12;
    double flag_tol = 1e-3;      // soft invariant tolerance (trace, biorthonormality)
};

inline bool default_divergent(const TrajectoryState& s, double cap) {
    const double cap2 = cap * cap;
    for (const cplx& v : s.vars) {
        const double m = std::norm(v);
        if (!(m <= cap2)) return true; // catches NaN via the negated compare
    }
    return false;
}

namespace detail {

struct BlockPartial {
    std::vector<MomentAccumulator> cells;
    std::int64_t n_divergent = 0;
    std::int64_t n_flagged = 0;
};

} // namespace detail

// Integrates n_traj independent trajectories of `model` and accumulates
// per-observable moments on the sample grid. Trajectories are grouped into
// fixed blocks; workers claim whole blocks and the block partials are merged
// in block order, so the result is bit-identical for any thread count and
// any scheduling. Divergent trajectories (cap exceeded or non-finite state)
// are dropped from the averages entirely and counted; soft invariant
// violations are only counted.
template <class Model>
EnsembleStats run_ensemble(const Model& model, const EnsembleOptions& opt) {
    if (opt.n_traj < 1) throw std::invalid_argument("run_ensemble: n_traj must be >= 1");
    if (!(opt.dt > 0)) throw std::invalid_argument("run_ensemble: dt must be > 0");
    if (opt.n_steps < 0) throw std::invalid_argument("run_ensemble: n_steps must be >= 0");
    if (opt.sample_stride < 1 || opt.n_steps % opt.sample_stride != 0)
        throw std::invalid_argument("run_ensemble: sample_stride must divide n_steps");

    const std::size_t n_samples = static_cast<std::size_t>(opt.n_steps / opt.sample_stride) + 1;
    const std::vector<std::string> names = model.observable_names();
    const std::size_t n_obs = names.size();

    EnsembleStats stats;
    stats.observable_names = names;
    stats.n_requested = opt.n_traj;
    {
        const double t0 = model.initial().time;
        stats.time_grid.resize(n_samples);
        for (std::size_t k = 0; k < n_samples; ++k)
            stats.time_grid[k] = t0 + static_cast<double>(k * opt.sample_stride) * opt.dt;
    }

    constexpr std::int64_t kBlock = 64;
    const std::int64_t n_blocks = (opt.n_traj + kBlock - 1) / kBlock;
    std::vector<detail::BlockPartial> partials(static_cast<std::size_t>(n_blocks));

    std::atomic<std::int64_t> next_block{0};
    auto worker = [&]() {
        auto ws = model.make_workspace();
        std::vector<cplx> row(n_samples * n_obs);
        std::vector<cplx> obs_buf(n_obs);
        for (;;) {
            const std::int64_t b = next_block.fetch_add(1);
            if (b >= n_blocks) return;
            detail::BlockPartial& part = partials[static_cast<std::size_t>(b)];
            part.cells.assign(n_samples * n_obs, MomentAccumulator{});
            const std::int64_t lo = b * kBlock;
            const std::int64_t hi = std::min(opt.n_traj, lo + kBlock);
            for (std::int64_t traj = lo; traj < hi; ++traj) {
                RngStream rng(opt.master_seed, static_cast<std::uint64_t>(traj));
                TrajectoryState state = model.initial();
                bool divergent = false;
                bool flagged = false;
                std::size_t sample = 0;
                auto record = [&]() {
                    model.observe(state, obs_buf);
                    for (std::size_t j = 0; j < n_obs; ++j)
                        row[sample * n_obs + j] = obs_buf[j];
                    if (model.invariant_defect(state) > opt.flag_tol) flagged = true;
                    ++sample;
                };
                record();
                for (long s = 1; s <= opt.n_steps && !divergent; ++s) {
                    model.step(state, opt.dt, rng, ws);
                    if (default_divergent(state, opt.divergence_cap) ||
                        model.divergent(state)) {
                        divergent = true;
                        break;
                    }
                    if (s % opt.sample_stride == 0) record();
                }
                if (divergent) {
                    ++part.n_divergent;
                    continue;
                }
                if (flagged) ++part.n_flagged;
                for (std::size_t c = 0; c < n_samples * n_obs; ++c)
                    part.cells[c].add(row[c]);
            }
        }
    };

    int n_threads = opt.threads > 0
                        ? opt.threads
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n_threads = static_cast<int>(std::min<std::int64_t>(n_threads, n_blocks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    stats.cells.assign(n_samples * n_obs, MomentAccumulator{});
    for (const detail::BlockPartial& part : partials) {
        for (std::size_t c = 0; c < n_samples * n_obs; ++c)
            stats.cells[c].merge(part.cells[c]);
        stats.n_divergent += part.n_divergent;
        stats.n_flagged += part.n_flagged;
    }
    return stats;
}

} // namespace ssqmc
