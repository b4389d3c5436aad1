#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssqmc/fock.hpp"
#include "ssqmc/models/cnumber.hpp"
#include "ssqmc/models/manybody.hpp"
#include "ssqmc/noise.hpp"
#include "ssqmc/rng.hpp"
#include "ssqmc/trajectory.hpp"

namespace ssqmc::verify {

using models::InteractionSpec;
using models::NoiseSpec;

// Gauss-Hermite rule for E[f(g)], g standard normal, exact for polynomials of
// degree <= 2n-1. Golub-Welsch on the Jacobi matrix with offdiagonals sqrt(k).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = v0 * v0;
    }
    return rule;
}

// one deterministic atom of a noise draw: value and its probability weight
struct QuadAtom {
    cplx value;
    double weight;
};

// exact discretization of one noise draw's law: Gauss-Hermite nodes along the
// principal square root for variance-engineered draws, the three cube-root
// atoms for third-moment-engineered draws
inline std::vector<QuadAtom> noise_atoms(const NoiseSpec& spec, const GaussHermiteRule& gh) {
    std::vector<QuadAtom> atoms;
    if (spec.order == 2) {
        const cplx root = std::sqrt(spec.target);
        atoms.reserve(gh.nodes.size());
        for (std::size_t i = 0; i < gh.nodes.size(); ++i)
            atoms.push_back({root * gh.nodes[i], gh.weights[i]});
    } else if (spec.order == 3) {
        const double mag = std::cbrt(std::abs(spec.target));
        const double arg = std::arg(spec.target) / 3.0;
        const cplx root = mag * cplx{std::cos(arg), std::sin(arg)};
        atoms = {{root, 1.0 / 3.0},
                 {root * cube_omega, 1.0 / 3.0},
                 {root * cube_omega * cube_omega, 1.0 / 3.0}};
    } else {
        throw std::invalid_argument("noise_atoms: unsupported noise order");
    }
    return atoms;
}

struct MomentSpec {
    std::string name;
    int order = 1;
};

struct MomentCheck {
    std::string name;
    int order = 1;
    cplx measured{};
    cplx expected{};
    double abs_err = 0.0;
    double rel_err = 0.0;
    bool pass = false;
};

struct MatchReport {
    std::vector<MomentCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return !checks.empty();
    }
    double worst_rel_err() const {
        double w = 0.0;
        for (const auto& c : checks) w = std::max(w, c.rel_err);
        return w;
    }
    std::size_t n_failed() const {
        std::size_t n = 0;
        for (const auto& c : checks) n += c.pass ? 0 : 1;
        return n;
    }
    void append(const MatchReport& other, const std::string& prefix) {
        for (auto c : other.checks) {
            c.name = prefix + c.name;
            checks.push_back(std::move(c));
        }
    }
};

struct VerifyOptions {
    double dt_probe = 1e-5;
    double tolerance = 1e-8;
    int max_order = 3;
    int gauss_nodes = 4;               // exact through per-draw degree 7
    std::vector<double> target_scale;  // per-draw multiplier, empty = no mutation
};

namespace detail {

// expected one-step increment of every moment, evaluated by exact enumeration
// over the product law of all noise draws
template <class Adapter>
void expected_moments(const Adapter& ad, const TrajectoryState& state, double dt,
                      const VerifyOptions& opt, const GaussHermiteRule& gh,
                      std::vector<cplx>& out) {
    const int nd = ad.n_draws();
    std::vector<NoiseSpec> specs(static_cast<std::size_t>(nd));
    ad.noise_targets(state, dt, specs);
    if (!opt.target_scale.empty()) {
        if (opt.target_scale.size() != specs.size())
            throw std::invalid_argument("verify: target_scale size must match the draw count");
        for (std::size_t k = 0; k < specs.size(); ++k) specs[k].target *= opt.target_scale[k];
    }
    std::vector<std::vector<QuadAtom>> atoms;
    atoms.reserve(specs.size());
    for (const auto& s : specs) atoms.push_back(noise_atoms(s, gh));

    const std::size_t n_moments = ad.moments().size();
    out.assign(n_moments, cplx{0.0, 0.0});
    std::vector<cplx> draws(static_cast<std::size_t>(nd));
    std::vector<cplx> values(n_moments);

    std::function<void(std::size_t, double)> recurse = [&](std::size_t k, double weight) {
        if (k == atoms.size()) {
            const TrajectoryState stepped = ad.stepped(state, dt, draws);
            for (std::size_t m = 0; m < n_moments; ++m)
                out[m] += weight * ad.moment_value(m, stepped);
            return;
        }
        for (const auto& atom : atoms[k]) {
            draws[k] = atom.value;
            recurse(k + 1, weight * atom.weight);
        }
    };
    recurse(0, 1.0);
}

} // namespace detail

// Checks that the expected per-step change of every registered moment matches
// the exact evolution rate. The expectation is enumerated exactly over the
// noise law; a two-point Richardson step removes the O(dt) Euler bias.
template <class Adapter>
MatchReport verify_state(const Adapter& ad, const TrajectoryState& state,
                         const VerifyOptions& opt = {}) {
    const GaussHermiteRule gh = gauss_hermite(opt.gauss_nodes);
    const auto& moments = ad.moments();
    const std::size_t n_moments = moments.size();

    std::vector<cplx> base(n_moments);
    for (std::size_t m = 0; m < n_moments; ++m) base[m] = ad.moment_value(m, state);

    std::vector<cplx> ef_full, ef_half;
    detail::expected_moments(ad, state, opt.dt_probe, opt, gh, ef_full);
    detail::expected_moments(ad, state, opt.dt_probe / 2.0, opt, gh, ef_half);

    std::vector<cplx> exact(n_moments);
    ad.exact_rates(state, exact);

    MatchReport report;
    for (std::size_t m = 0; m < n_moments; ++m) {
        if (moments[m].order > opt.max_order) continue;
        const cplx rate_full = (ef_full[m] - base[m]) / opt.dt_probe;
        const cplx rate_half = (ef_half[m] - base[m]) / (opt.dt_probe / 2.0);
        const cplx richardson = 2.0 * rate_half - rate_full;
        MomentCheck c;
        c.name = moments[m].name;
        c.order = moments[m].order;
        c.measured = richardson;
        c.expected = exact[m];
        c.abs_err = std::abs(richardson - exact[m]);
        c.rel_err = c.abs_err / std::max(1.0, std::abs(exact[m]));
        c.pass = c.rel_err <= opt.tolerance;
        report.checks.push_back(std::move(c));
    }
    return report;
}

// ---------------------------------------------------------------------------
// adapter for the single-mode models (state = alpha, beta*)
// ---------------------------------------------------------------------------

template <class Model>
class SingleModeVerifier {
  public:
    explicit SingleModeVerifier(const Model& model, fock::FockTruncation trunc = {40})
        : model_(model), trunc_(trunc), hamiltonian_(model.hamiltonian(trunc)) {
        const fock::Matrix a = fock::annihilation(trunc_);
        const fock::Matrix ad = fock::creation(trunc_);
        add_moment("a", 1, a, [](cplx al, cplx) { return al; });
        add_moment("adag", 1, ad, [](cplx, cplx bs) { return bs; });
        add_moment("a2", 2, a * a, [](cplx al, cplx) { return al * al; });
        add_moment("adag2", 2, ad * ad, [](cplx, cplx bs) { return bs * bs; });
        add_moment("adaga", 2, ad * a, [](cplx al, cplx bs) { return bs * al; });
        add_moment("a3", 3, a * a * a, [](cplx al, cplx) { return al * al * al; });
        add_moment("adag3", 3, ad * ad * ad, [](cplx, cplx bs) { return bs * bs * bs; });
        add_moment("adaga2", 3, ad * a * a, [](cplx al, cplx bs) { return bs * al * al; });
        add_moment("adag2a", 3, ad * ad * a, [](cplx al, cplx bs) { return bs * bs * al; });
        if constexpr (requires(const Model& m) { m.eta; m.mass; }) {
            const double eta = model.eta, hb = model.hbar;
            const fock::Matrix x_op = (a + ad) / std::sqrt(2.0 * eta);
            const fock::Matrix p_op = cplx{0.0, hb} * std::sqrt(eta / 2.0) * (ad - a);
            add_moment("X", 1, x_op, [eta](cplx al, cplx bs) { return (al + bs) / std::sqrt(2.0 * eta); });
            add_moment("P", 1, p_op, [eta, hb](cplx al, cplx bs) {
                return cplx{0.0, hb} * std::sqrt(eta / 2.0) * (bs - al);
            });
            add_moment("x2", 2, x_op * x_op, [eta](cplx al, cplx bs) {
                const cplx xm = (al + bs) / std::sqrt(2.0 * eta);
                return 1.0 / (2.0 * eta) + xm * xm;
            });
        }
    }

    int n_draws() const { return Model::n_noise; }
    void noise_targets(const TrajectoryState& s, double dt, std::span<NoiseSpec> out) const {
        model_.noise_targets(s, dt, out);
    }
    TrajectoryState stepped(const TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        TrajectoryState next = s;
        model_.step_with_draws(next, dt, draws);
        return next;
    }
    const std::vector<MomentSpec>& moments() const { return specs_; }
    cplx moment_value(std::size_t idx, const TrajectoryState& s) const {
        return evals_[idx](s.vars[0], s.vars[1]);
    }
    void exact_rates(const TrajectoryState& s, std::span<cplx> out) const {
        const fock::Matrix density = fock::bargmann_density(s.vars[0], s.vars[1], trunc_);
        for (std::size_t m = 0; m < ops_.size(); ++m)
            out[m] = fock::ehrenfest_rhs(ops_[m], hamiltonian_, density, model_.hbar);
    }

  private:
    void add_moment(std::string name, int order, fock::Matrix op,
                    std::function<cplx(cplx, cplx)> eval) {
        specs_.push_back({std::move(name), order});
        ops_.push_back(std::move(op));
        evals_.push_back(std::move(eval));
    }

    Model model_;
    fock::FockTruncation trunc_;
    fock::Matrix hamiltonian_;
    std::vector<MomentSpec> specs_;
    std::vector<fock::Matrix> ops_;
    std::vector<std::function<cplx(cplx, cplx)>> evals_;
};

// random dyadic label pair with both amplitudes inside |z| <= radius
inline TrajectoryState random_single_mode_state(RngStream& rng, double radius = 1.5) {
    auto draw = [&] {
        const double r = radius * std::sqrt(rng.uniform());
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        return cplx{r * std::cos(phi), r * std::sin(phi)};
    };
    return {0.0, {draw(), draw()}};
}

template <class Model>
MatchReport verify_random_states(const Model& model, int n_states, std::uint64_t seed,
                                 const VerifyOptions& opt = {}, double radius = 1.5) {
    SingleModeVerifier<Model> ad(model);
    RngStream rng(seed, 0);
    MatchReport combined;
    for (int s = 0; s < n_states; ++s) {
        const TrajectoryState state = random_single_mode_state(rng, radius);
        combined.append(verify_state(ad, state, opt), "s" + std::to_string(s) + ":");
    }
    return combined;
}

// ---------------------------------------------------------------------------
// adapter for the many-body models: one-body matrix elements at first order,
// two-body matrix elements at second order, compared against the coupled
// reduced equations of motion
// ---------------------------------------------------------------------------

template <class Model>
class ManyBodyVerifier {
  public:
    explicit ManyBodyVerifier(const Model& model) : model_(model) {
        model_.renormalize = false; // probe the raw polynomial update
        const int m = model_.interaction().dim();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                specs_.push_back({"rho1_" + std::to_string(i) + "_" + std::to_string(j), 1});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l)
                        specs_.push_back({"rho12_" + std::to_string(i) + std::to_string(j) + "_" +
                                              std::to_string(k) + std::to_string(l),
                                          2});
    }

    int n_draws() const { return model_.n_noise_terms(); }
    void noise_targets(const TrajectoryState& s, double dt, std::span<NoiseSpec> out) const {
        model_.noise_targets(s, dt, out);
    }
    TrajectoryState stepped(const TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        TrajectoryState next = s;
        model_.step_with_draws(next, dt, draws);
        return next;
    }
    const std::vector<MomentSpec>& moments() const { return specs_; }

    cplx moment_value(std::size_t idx, const TrajectoryState& s) const {
        const int m = model_.interaction().dim();
        const models::Matrix rho = one_body(s);
        const std::size_t m2 = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
        if (idx < m2) return rho(static_cast<int>(idx) / m, static_cast<int>(idx) % m);
        std::size_t r = idx - m2;
        const int l = static_cast<int>(r % static_cast<std::size_t>(m));
        r /= static_cast<std::size_t>(m);
        const int k = static_cast<int>(r % static_cast<std::size_t>(m));
        r /= static_cast<std::size_t>(m);
        const int j = static_cast<int>(r % static_cast<std::size_t>(m));
        const int i = static_cast<int>(r / static_cast<std::size_t>(m));
        if constexpr (Model::family == models::ModelFamily::fermion) {
            return rho(i, k) * rho(j, l) - rho(j, k) * rho(i, l);
        } else {
            const double n = model_.n_particles;
            // rho holds N P_phi; rho12 = N(N-1) P x P
            return (n - 1.0) / n * rho(i, k) * rho(j, l);
        }
    }

    void exact_rates(const TrajectoryState& s, std::span<cplx> out) const {
        const int m = model_.interaction().dim();
        models::PairRhs rhs;
        if constexpr (Model::family == models::ModelFamily::fermion) {
            rhs = models::bbgky_pair_rhs_fermion(model_.rho(s), model_.interaction());
        } else {
            rhs = models::bbgky_pair_rhs_boson(model_.p_phi(s), model_.interaction(),
                                               model_.n_particles);
        }
        std::size_t idx = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) out[idx++] = rhs.drho1_dt(i, j);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l) out[idx++] = rhs.drho12_dt(i * m + j, k * m + l);
    }

  private:
    models::Matrix one_body(const TrajectoryState& s) const {
        if constexpr (Model::family == models::ModelFamily::fermion) {
            return model_.rho(s);
        } else {
            return static_cast<double>(model_.n_particles) * model_.p_phi(s);
        }
    }

    Model model_;
    std::vector<MomentSpec> specs_;
};

// random biorthonormal boson pair (b.a = 1)
inline TrajectoryState random_boson_state(RngStream& rng, int m) {
    TrajectoryState s;
    s.vars.resize(static_cast<std::size_t>(2 * m));
    while (true) {
        for (auto& v : s.vars) v = cplx{rng.normal(), rng.normal()} * 0.7;
        cplx tr{0.0, 0.0};
        for (int i = 0; i < m; ++i) tr += s.vars[static_cast<std::size_t>(m + i)] * s.vars[static_cast<std::size_t>(i)];
        if (std::abs(tr) < 0.2) continue;
        for (int i = 0; i < m; ++i) s.vars[static_cast<std::size_t>(m + i)] /= tr;
        return s;
    }
}

// random biorthonormal fermion pair (B = (A^dag A)^-1 A^dag, so B A = 1)
inline TrajectoryState random_fermion_state(RngStream& rng, int m, int n) {
    models::Matrix a(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) a(i, j) = cplx{rng.normal(), rng.normal()};
    const models::Matrix b = (a.adjoint() * a).partialPivLu().solve(a.adjoint());
    TrajectoryState s;
    s.vars.resize(static_cast<std::size_t>(2 * m * n));
    Eigen::Map<models::Matrix>(s.vars.data(), m, n) = a;
    Eigen::Map<models::Matrix>(s.vars.data() + m * n, n, m) = b;
    return s;
}

template <class Model>
MatchReport verify_many_body_random_states(const Model& model, int n_states, std::uint64_t seed,
                                           const VerifyOptions& opt = {}) {
    ManyBodyVerifier<Model> ad(model);
    RngStream rng(seed, 0);
    MatchReport combined;
    const int m = model.interaction().dim();
    for (int s = 0; s < n_states; ++s) {
        TrajectoryState state;
        if constexpr (Model::family == models::ModelFamily::fermion) {
            state = random_fermion_state(rng, m, model.n_particles);
        } else {
            state = random_boson_state(rng, m);
        }
        combined.append(verify_state(ad, state, opt), "s" + std::to_string(s) + ":");
    }
    return combined;
}

} // namespace ssqmc::verify
