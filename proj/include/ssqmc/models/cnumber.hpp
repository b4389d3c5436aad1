#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ssqmc/fock.hpp"
#include "ssqmc/trajectory.hpp"

namespace ssqmc::models {

enum class ModelFamily { single_mode, boson, fermion };

struct NoiseSpec {
    int order = 2;
    cplx target{0.0, 0.0};
};

inline cplx sample_noise(const NoiseSpec& spec, RngStream& rng) {
    return spec.order == 2 ? sample_second_order(spec.target, rng).value
                           : sample_third_order(spec.target, rng).value;
}

// Position/momentum map of a Bargmann pair and the per-path second moment:
//   X = (alpha + beta*) / sqrt(2 eta),  P = i hbar sqrt(eta/2) (beta* - alpha),
//   Tr(D x^2) = 1/(2 eta) + X^2.
struct XpObservables {
    cplx x, p, x2;
};

inline XpObservables xp_observables(cplx alpha, cplx beta_star, double eta, double hbar) {
    const cplx i{0.0, 1.0};
    XpObservables o;
    o.x = (alpha + beta_star) / std::sqrt(2.0 * eta);
    o.p = i * hbar * std::sqrt(eta / 2.0) * (beta_star - alpha);
    o.x2 = 1.0 / (2.0 * eta) + o.x * o.x;
    return o;
}

namespace detail {

// shared plumbing: state = {alpha, beta*}, a fixed number of noise terms
template <class Derived>
struct SingleModeBase {
    static constexpr ModelFamily family = ModelFamily::single_mode;
    struct Workspace {};
    Workspace make_workspace() const { return {}; }

    bool divergent(const TrajectoryState&) const { return false; }
    double invariant_defect(const TrajectoryState&) const { return 0.0; }

    void step(TrajectoryState& s, double dt, RngStream& rng, Workspace&) const {
        const auto& self = static_cast<const Derived&>(*this);
        std::array<NoiseSpec, Derived::n_noise> specs;
        self.noise_targets(s, dt, specs);
        std::array<cplx, Derived::n_noise> draws;
        for (int k = 0; k < Derived::n_noise; ++k) draws[k] = sample_noise(specs[k], rng);
        self.step_with_draws(s, dt, draws);
    }
};

} // namespace detail

// --- free expansion: dalpha = i hbar {(eta/2m)(beta*-alpha) dt + sqrt(eta/2m) dW1},
//     dW1^2 = dt/(i hbar), dW2^2 = -dt/(i hbar) on the beta* line -------------
struct FreeExpansionModel : detail::SingleModeBase<FreeExpansionModel> {
    double eta = 1.0, mass = 1.0, hbar = 1.0;
    cplx alpha0{0.0, 0.0}, beta_star0{0.0, 0.0};
    static constexpr int n_noise = 2;

    TrajectoryState initial() const { return {0.0, {alpha0, beta_star0}}; }

    void drift(const TrajectoryState& s, std::span<cplx> out) const {
        const cplx i{0.0, 1.0};
        const cplx d = i * hbar * (eta / (2.0 * mass)) * (s.vars[1] - s.vars[0]);
        out[0] = d;
        out[1] = d;
    }

    void noise_targets(const TrajectoryState&, double dt, std::span<NoiseSpec> out) const {
        const cplx ih{0.0, hbar};
        out[0] = {2, dt / ih};
        out[1] = {2, -dt / ih};
    }

    void step_with_draws(TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        std::array<cplx, 2> dr;
        drift(s, dr);
        const cplx coef = cplx{0.0, hbar} * std::sqrt(eta / (2.0 * mass));
        s.vars[0] += dr[0] * dt + coef * draws[0];
        s.vars[1] += dr[1] * dt + coef * draws[1];
        s.time += dt;
    }

    std::vector<std::string> observable_names() const { return {"X", "P", "x2"}; }
    void observe(const TrajectoryState& s, std::span<cplx> out) const {
        const XpObservables o = xp_observables(s.vars[0], s.vars[1], eta, hbar);
        out[0] = o.x;
        out[1] = o.p;
        out[2] = o.x2;
    }

    fock::Matrix hamiltonian(fock::FockTruncation tr) const {
        return fock::free_hamiltonian(tr, eta, mass, hbar);
    }
};

// --- Kerr: dalpha = -i dt {omega + K beta* alpha} alpha + sqrt(K hbar) alpha dW1 ---
struct KerrModel : detail::SingleModeBase<KerrModel> {
    double omega = 1.0, kerr_k = 0.1, hbar = 1.0;
    cplx alpha0{1.0, 0.0}, beta_star0{1.0, 0.0};
    static constexpr int n_noise = 2;

    TrajectoryState initial() const { return {0.0, {alpha0, beta_star0}}; }

    void drift(const TrajectoryState& s, std::span<cplx> out) const {
        const cplx i{0.0, 1.0};
        const cplx theta = omega + kerr_k * s.vars[1] * s.vars[0];
        out[0] = -i * theta * s.vars[0];
        out[1] = i * theta * s.vars[1];
    }

    void noise_targets(const TrajectoryState&, double dt, std::span<NoiseSpec> out) const {
        const cplx ih{0.0, hbar};
        out[0] = {2, dt / ih};
        out[1] = {2, -dt / ih};
    }

    void step_with_draws(TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        std::array<cplx, 2> dr;
        drift(s, dr);
        const double coef = std::sqrt(kerr_k * hbar);
        s.vars[0] += dr[0] * dt + coef * s.vars[0] * draws[0];
        s.vars[1] += dr[1] * dt + coef * s.vars[1] * draws[1];
        s.time += dt;
    }

    std::vector<std::string> observable_names() const { return {"a", "adag", "n"}; }
    void observe(const TrajectoryState& s, std::span<cplx> out) const {
        out[0] = s.vars[0];
        out[1] = s.vars[1];
        out[2] = s.vars[1] * s.vars[0];
    }

    fock::Matrix hamiltonian(fock::FockTruncation tr) const {
        return fock::kerr_hamiltonian(tr, omega, kerr_k, hbar);
    }
};

// --- generalized Kerr with an order-3 noise pair:
//     drift -i {omega + K1 x + K2 x^2 / 2} alpha,  x = beta* alpha;
//     order-2 targets -i dt (K1 + K2 x), order-3 targets -i dt K2 (+i on the
//     beta* line) entering as (dxi2 + dxi3) alpha -------------------------------
struct GenKerrModel : detail::SingleModeBase<GenKerrModel> {
    double omega = 1.0, k1 = 0.1, k2 = 0.05, hbar = 1.0;
    cplx alpha0{0.5, 0.0}, beta_star0{0.5, 0.0};
    static constexpr int n_noise = 4;

    TrajectoryState initial() const { return {0.0, {alpha0, beta_star0}}; }

    void drift(const TrajectoryState& s, std::span<cplx> out) const {
        const cplx i{0.0, 1.0};
        const cplx x = s.vars[1] * s.vars[0];
        const cplx theta = omega + k1 * x + 0.5 * k2 * x * x;
        out[0] = -i * theta * s.vars[0];
        out[1] = i * theta * s.vars[1];
    }

    void noise_targets(const TrajectoryState& s, double dt, std::span<NoiseSpec> out) const {
        const cplx i{0.0, 1.0};
        const cplx x = s.vars[1] * s.vars[0];
        out[0] = {2, -i * dt * (k1 + k2 * x)};
        out[1] = {3, -i * dt * k2};
        out[2] = {2, i * dt * (k1 + k2 * x)};
        out[3] = {3, i * dt * k2};
    }

    void step_with_draws(TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        std::array<cplx, 2> dr;
        drift(s, dr);
        s.vars[0] += dr[0] * dt + (draws[0] + draws[1]) * s.vars[0];
        s.vars[1] += dr[1] * dt + (draws[2] + draws[3]) * s.vars[1];
        s.time += dt;
    }

    std::vector<std::string> observable_names() const { return {"a", "adag", "n"}; }
    void observe(const TrajectoryState& s, std::span<cplx> out) const {
        out[0] = s.vars[0];
        out[1] = s.vars[1];
        out[2] = s.vars[1] * s.vars[0];
    }

    fock::Matrix hamiltonian(fock::FockTruncation tr) const {
        return fock::genkerr_hamiltonian(tr, omega, k1, k2, hbar);
    }
};

// single-step convenience wrappers around the model types
inline void free_expansion_step(TrajectoryState& s, const FreeExpansionModel& m, double dt,
                                RngStream& rng) {
    FreeExpansionModel::Workspace ws;
    m.step(s, dt, rng, ws);
}
inline void kerr_step(TrajectoryState& s, const KerrModel& m, double dt, RngStream& rng) {
    KerrModel::Workspace ws;
    m.step(s, dt, rng, ws);
}
inline void genkerr_step(TrajectoryState& s, const GenKerrModel& m, double dt, RngStream& rng) {
    GenKerrModel::Workspace ws;
    m.step(s, dt, rng, ws);
}

} // namespace ssqmc::models
