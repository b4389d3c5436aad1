#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "ssqmc/noise.hpp"

namespace ssqmc {

// Flat complex state vector plus physical time. Models decide what the
// entries mean (Bargmann pair, mode amplitudes, matrix columns, ...).
struct TrajectoryState {
    double time = 0.0;
    std::vector<cplx> vars;
};

struct NoiseTerm {
    std::span<const cplx> coefficient; // how the raw increment enters each variable
    NoiseIncrement increment;
};

// Explicit Euler-Maruyama update:
//   vars += drift * dt + sum_k coefficient_k * increment_k.value,  time += dt.
// Drift and coefficients are evaluated at the incoming state by the caller.
inline void ito_step_inplace(TrajectoryState& state, std::span<const cplx> drift,
                             std::span<const NoiseTerm> noise, double dt) {
    const std::size_t n = state.vars.size();
    if (drift.size() != n)
        throw std::invalid_argument("ito_step: drift dimension mismatch");
    for (const NoiseTerm& term : noise)
        if (term.coefficient.size() != n)
            throw std::invalid_argument("ito_step: noise coefficient dimension mismatch");

    for (std::size_t i = 0; i < n; ++i) {
        cplx dv = drift[i] * dt;
        for (const NoiseTerm& term : noise)
            dv += term.coefficient[i] * term.increment.value;
        state.vars[i] += dv;
    }
    state.time += dt;
}

inline TrajectoryState ito_step(const TrajectoryState& state,
                                std::span<const cplx> drift,
                                std::span<const NoiseTerm> noise, double dt) {
    TrajectoryState out = state;
    ito_step_inplace(out, drift, noise, dt);
    return out;
}

} // namespace ssqmc
