#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssqmc/models/cnumber.hpp"
#include "ssqmc/trajectory.hpp"

namespace ssqmc::models {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Separable two-body interaction v12 = sum_l s_l O_l x O_l with hermitian
// single-particle operators O_l and signs s_l = +-1, plus the one-body part.
struct InteractionSpec {
    Matrix kinetic;
    std::vector<Matrix> ops;
    std::vector<double> signs; // empty means all +1
    double hbar = 1.0;

    int dim() const { return static_cast<int>(kinetic.rows()); }
    int n_ops() const { return static_cast<int>(ops.size()); }
    double sign(int l) const { return signs.empty() ? 1.0 : signs[static_cast<std::size_t>(l)]; }
};

inline Matrix kron(const Matrix& x, const Matrix& y) {
    Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index k = 0; k < x.cols(); ++k)
            out.block(i * y.rows(), k * y.cols(), y.rows(), y.cols()) = x(i, k) * y;
    return out;
}

// Eigendecomposition of a generic hermitian two-body tensor
// v[(i*M+j),(k*M+l)] = <ij|v|kl> into signed separable terms. Negative
// eigenvalues keep hermitian O_l; their sign is carried into the noise
// targets through InteractionSpec::signs.
inline void decompose_separable(const Matrix& v, std::vector<Matrix>& ops,
                                std::vector<double>& signs, double tol = 1e-12) {
    const int m2 = static_cast<int>(v.rows());
    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m2))));
    if (m * m != m2 || v.cols() != m2)
        throw std::invalid_argument("decompose_separable: tensor must be M^2 x M^2");
    // reshuffle to the hermitian form B[(i,k),(l,j)] = v[(i,j),(k,l)]
    Matrix b(m2, m2);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l)
                    b(i * m + k, l * m + j) = v(i * m + j, k * m + l);
    if ((b - b.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("decompose_separable: tensor lacks the required hermiticity");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(b);
    ops.clear();
    signs.clear();
    const double scale = solver.eigenvalues().cwiseAbs().maxCoeff();
    for (int mu = 0; mu < m2; ++mu) {
        const double w = solver.eigenvalues()[mu];
        if (std::abs(w) <= tol * std::max(1.0, scale)) continue;
        Matrix o(m, m);
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) o(i, k) = solver.eigenvectors()(i * m + k, mu);
        o *= std::sqrt(std::abs(w));
        if ((o - o.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, o.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("decompose_separable: non-hermitian separable factor");
        o = 0.5 * (o + Matrix(o.adjoint())); // symmetrize roundoff
        ops.push_back(std::move(o));
        signs.push_back(w >= 0 ? 1.0 : -1.0);
    }
}

inline Matrix assemble_v12(const InteractionSpec& inter) {
    const int m = inter.dim();
    Matrix v = Matrix::Zero(m * m, m * m);
    for (int l = 0; l < inter.n_ops(); ++l) v += inter.sign(l) * kron(inter.ops[l], inter.ops[l]);
    return v;
}

// ---------------------------------------------------------------------------
// bosons: state is the pair (|phi_a>, <phi_b|) with <phi_b|phi_a> = 1,
// P_phi = |phi_a><phi_b|. b holds the row coefficients of <phi_b|.
// ---------------------------------------------------------------------------

inline Matrix boson_mean_field(const Matrix& p_phi, const InteractionSpec& inter,
                               int n_particles) {
    Matrix h = inter.kinetic;
    for (int l = 0; l < inter.n_ops(); ++l) {
        const cplx x = (inter.ops[l] * p_phi).trace();
        h += (n_particles - 1.0) * inter.sign(l) * x * inter.ops[l];
    }
    return h;
}

struct BosonWorkspace {
    Vector oa, ob, da, db;
    Matrix h;
    std::vector<cplx> targets_buf;
};

inline BosonWorkspace make_boson_workspace(int m) {
    BosonWorkspace ws;
    ws.oa.resize(m);
    ws.ob.resize(m);
    ws.da.resize(m);
    ws.db.resize(m);
    ws.h.resize(m, m);
    return ws;
}

// d|phi_a> = (dt/(i hbar) h_MF + sum_l dxi_l (1-P) O_l) |phi_a>
// d<phi_b| = <phi_b| (-dt/(i hbar) h_MF + sum_l deta_l O_l (1-P))
// draws = (xi_1..xi_L, eta_1..eta_L); targets s_l dt/(i hbar) and -s_l dt/(i hbar).
inline void boson_sse_step(Eigen::Ref<Vector> a, Eigen::Ref<Vector> b,
                           const InteractionSpec& inter, int n_particles, double dt,
                           std::span<const cplx> draws, BosonWorkspace& ws) {
    const int nl = inter.n_ops();
    const cplx idt_h = dt / (cplx{0.0, inter.hbar});

    ws.h = inter.kinetic;
    for (int l = 0; l < nl; ++l) {
        ws.oa.noalias() = inter.ops[l] * a;
        const cplx x = b.cwiseProduct(ws.oa).sum();
        ws.h += (n_particles - 1.0) * inter.sign(l) * x * inter.ops[l];
    }
    ws.da.noalias() = idt_h * (ws.h * a);
    ws.db.noalias() = -idt_h * (ws.h.transpose() * b);

    for (int l = 0; l < nl; ++l) {
        ws.oa.noalias() = inter.ops[l] * a;
        ws.ob.noalias() = inter.ops[l].transpose() * b; // row <phi_b| O_l
        const cplx x = b.cwiseProduct(ws.oa).sum();
        ws.da += draws[static_cast<std::size_t>(l)] * (ws.oa - x * a);
        ws.db += draws[static_cast<std::size_t>(nl + l)] * (ws.ob - x * b);
    }
    a += ws.da;
    b += ws.db;
}

inline void boson_noise_targets(const InteractionSpec& inter, double dt,
                                std::span<NoiseSpec> out) {
    const cplx base = dt / (cplx{0.0, inter.hbar});
    const int nl = inter.n_ops();
    for (int l = 0; l < nl; ++l) {
        out[static_cast<std::size_t>(l)] = {2, inter.sign(l) * base};
        out[static_cast<std::size_t>(nl + l)] = {2, -inter.sign(l) * base};
    }
}

// ---------------------------------------------------------------------------
// fermions: A holds the kets |alpha_i> as columns, B the bras <beta_i| as
// rows, with B A = 1 and rho1 = A B.
// ---------------------------------------------------------------------------

inline Matrix fermion_mean_field(const Matrix& rho, const InteractionSpec& inter) {
    Matrix h = inter.kinetic;
    for (int l = 0; l < inter.n_ops(); ++l) {
        const Matrix& o = inter.ops[l];
        const cplx x = (o * rho).trace();
        h += inter.sign(l) * (x * o - o * rho * o); // direct minus exchange
    }
    return h;
}

struct FermionWorkspace {
    Matrix rho, h, oa, bo, da, db, tmp_mm, tmp_nn, tmp_nm;
    Eigen::PartialPivLU<Matrix> lu;
    std::vector<cplx> targets_buf;
};

inline FermionWorkspace make_fermion_workspace(int m, int n) {
    FermionWorkspace ws;
    ws.rho.resize(m, m);
    ws.h.resize(m, m);
    ws.oa.resize(m, n);
    ws.bo.resize(n, m);
    ws.da.resize(m, n);
    ws.db.resize(n, m);
    ws.tmp_mm.resize(m, m);
    ws.tmp_nn.resize(n, n);
    ws.tmp_nm.resize(n, m);
    ws.lu = Eigen::PartialPivLU<Matrix>(n);
    return ws;
}

// dA = (dt/(i hbar) h_MF + sum_l dxi_l (1-rho) O_l) A
// dB = B (-dt/(i hbar) h_MF + sum_l deta_l O_l (1-rho))
inline void fermion_sse_step(Eigen::Ref<Matrix> a_cols, Eigen::Ref<Matrix> b_rows,
                             const InteractionSpec& inter, double dt,
                             std::span<const cplx> draws, FermionWorkspace& ws) {
    const int nl = inter.n_ops();
    const cplx idt_h = dt / (cplx{0.0, inter.hbar});

    ws.rho.noalias() = a_cols * b_rows;
    ws.h = inter.kinetic;
    for (int l = 0; l < nl; ++l) {
        const Matrix& o = inter.ops[l];
        const cplx x = (o * ws.rho).trace();
        ws.tmp_mm.noalias() = o * ws.rho;
        ws.h += inter.sign(l) * (x * o);
        ws.h.noalias() -= inter.sign(l) * (ws.tmp_mm * o);
    }
    ws.da.noalias() = idt_h * (ws.h * a_cols);
    ws.db.noalias() = -idt_h * (b_rows * ws.h);

    for (int l = 0; l < nl; ++l) {
        const Matrix& o = inter.ops[l];
        ws.oa.noalias() = o * a_cols;                    // O_l A
        ws.tmp_nn.noalias() = b_rows * ws.oa;            // B O_l A
        ws.da += draws[static_cast<std::size_t>(l)] * (ws.oa - a_cols * ws.tmp_nn);
        ws.bo.noalias() = b_rows * o;                    // B O_l
        ws.db += draws[static_cast<std::size_t>(nl + l)] * (ws.bo - ws.tmp_nn * b_rows);
    }
    a_cols += ws.da;
    b_rows += ws.db;
}

inline void fermion_noise_targets(const InteractionSpec& inter, double dt,
                                  std::span<NoiseSpec> out) {
    boson_noise_targets(inter, dt, out); // same targets: +-s_l dt/(i hbar)
}

// restore B A = 1 exactly: B <- (B A)^-1 B
inline void rebiorthonormalize(const Matrix& a_cols, Matrix& b_rows, FermionWorkspace& ws) {
    ws.tmp_nn.noalias() = b_rows * a_cols;
    ws.lu.compute(ws.tmp_nn);
    ws.tmp_nm = ws.lu.solve(b_rows);
    b_rows.swap(ws.tmp_nm);
}

// ---------------------------------------------------------------------------
// coupled one- and two-body reduced dynamics implied by the noise targets
// ---------------------------------------------------------------------------

struct PairRhs {
    Matrix drho1_dt;  // M x M
    Matrix drho12_dt; // M^2 x M^2, index (i*M+j, k*M+l)
};

// fermions: rho12 = (1 - P12) rho x rho and
// i hbar d rho12/dt = [h1+h2, rho12]
//   + (1-rho1)(1-rho2) vAS rho1 rho2 - rho1 rho2 vAS (1-rho1)(1-rho2),
// with vAS = (1 - P12) vbar the antisymmetrized separable interaction.
inline PairRhs bbgky_pair_rhs_fermion(const Matrix& rho, const InteractionSpec& inter) {
    const int m = inter.dim();
    const cplx ih{0.0, inter.hbar};
    const Matrix h = fermion_mean_field(rho, inter);
    const Matrix eye = Matrix::Identity(m, m);

    Matrix p12 = Matrix::Zero(m * m, m * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) p12(i * m + j, j * m + i) = 1.0;

    const Matrix vbar = assemble_v12(inter);
    const Matrix vas = vbar - p12 * vbar;
    const Matrix rr = kron(rho, rho);
    const Matrix qq = kron(eye - rho, eye - rho);
    const Matrix rho12 = rr - p12 * rr;
    const Matrix hh = kron(h, eye) + kron(eye, h);

    PairRhs out;
    out.drho1_dt = (h * rho - rho * h) / ih;
    out.drho12_dt = (hh * rho12 - rho12 * hh + qq * vas * rr - rr * vas * qq) / ih;
    return out;
}

// bosons: rho1 = N P_phi, rho12 = N(N-1) P_phi x P_phi and the same structure
// with the plain separable vbar.
inline PairRhs bbgky_pair_rhs_boson(const Matrix& p_phi, const InteractionSpec& inter,
                                    int n_particles) {
    const int m = inter.dim();
    const cplx ih{0.0, inter.hbar};
    const Matrix h = boson_mean_field(p_phi, inter, n_particles);
    const Matrix eye = Matrix::Identity(m, m);

    const Matrix vbar = assemble_v12(inter);
    const Matrix rho12 = n_particles * (n_particles - 1.0) * kron(p_phi, p_phi);
    const Matrix qq = kron(eye - p_phi, eye - p_phi);
    const Matrix hh = kron(h, eye) + kron(eye, h);

    PairRhs out;
    out.drho1_dt = static_cast<double>(n_particles) * (h * p_phi - p_phi * h) / ih;
    out.drho12_dt = (hh * rho12 - rho12 * hh + qq * vbar * rho12 - rho12 * vbar * qq) / ih;
    return out;
}

// ---------------------------------------------------------------------------
// runnable models
// ---------------------------------------------------------------------------

// Two interacting condensate modes:
//   H = (hbar Omega/2)(c1^dag c2 + h.c.) + hbar K [(c1^dag)^2 c1^2 + (2)],
//   O_1 = sqrt(2 hbar K) c1^dag c1, O_2 = sqrt(2 hbar K) c2^dag c2.
// The stepping below is the generic boson SSE specialized to M = 2 (checked
// against boson_sse_step in the tests), which keeps the hot loop scalar.
struct TwoModeModel {
    static constexpr ModelFamily family = ModelFamily::boson;
    int n_particles = 17;
    double omega_rabi = 1.0;
    double kerr_k = 0.1;
    double hbar = 1.0;
    bool renormalize = false;
    double product_cap = 1e6;

    struct Workspace {};
    Workspace make_workspace() const { return {}; }
    int n_noise_terms() const { return 4; }

    InteractionSpec interaction() const {
        if (kerr_k < 0) throw std::invalid_argument("two_mode: kerr_k must be >= 0");
        InteractionSpec inter;
        inter.kinetic = Matrix::Zero(2, 2);
        inter.kinetic(0, 1) = inter.kinetic(1, 0) = hbar * omega_rabi / 2.0;
        const double g = std::sqrt(2.0 * hbar * kerr_k);
        Matrix o1 = Matrix::Zero(2, 2), o2 = Matrix::Zero(2, 2);
        o1(0, 0) = g;
        o2(1, 1) = g;
        inter.ops = {o1, o2};
        inter.hbar = hbar;
        return inter;
    }

    // all particles start in mode 2
    TrajectoryState initial() const { return {0.0, {cplx{0, 0}, cplx{1, 0}, cplx{0, 0}, cplx{1, 0}}}; }

    void noise_targets(const TrajectoryState&, double dt, std::span<NoiseSpec> out) const {
        const cplx base = dt / cplx{0.0, hbar};
        out[0] = {2, base};
        out[1] = {2, base};
        out[2] = {2, -base};
        out[3] = {2, -base};
    }

    void step_with_draws(TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        const cplx i{0.0, 1.0};
        cplx a0 = s.vars[0], a1 = s.vars[1], b0 = s.vars[2], b1 = s.vars[3];
        const cplx x = b0 * a0, y = b1 * a1;
        const double km = 2.0 * kerr_k * (n_particles - 1.0);
        const double g = std::sqrt(2.0 * hbar * kerr_k);
        const cplx dwa = draws[0] * x + draws[1] * y;
        const cplx dwb = draws[2] * x + draws[3] * y;

        const cplx na0 = -i * dt * (0.5 * omega_rabi * a1 + km * x * a0) + g * (draws[0] - dwa) * a0;
        const cplx na1 = -i * dt * (0.5 * omega_rabi * a0 + km * y * a1) + g * (draws[1] - dwa) * a1;
        const cplx nb0 = i * dt * (0.5 * omega_rabi * b1 + km * x * b0) + g * (draws[2] - dwb) * b0;
        const cplx nb1 = i * dt * (0.5 * omega_rabi * b0 + km * y * b1) + g * (draws[3] - dwb) * b1;

        s.vars[0] = a0 + na0;
        s.vars[1] = a1 + na1;
        s.vars[2] = b0 + nb0;
        s.vars[3] = b1 + nb1;
        if (renormalize) {
            const cplx tr = s.vars[2] * s.vars[0] + s.vars[3] * s.vars[1];
            s.vars[2] /= tr;
            s.vars[3] /= tr;
        }
        s.time += dt;
    }

    void step(TrajectoryState& s, double dt, RngStream& rng, Workspace&) const {
        std::array<NoiseSpec, 4> specs;
        noise_targets(s, dt, specs);
        std::array<cplx, 4> draws;
        for (int k = 0; k < 4; ++k) draws[static_cast<std::size_t>(k)] = sample_noise(specs[static_cast<std::size_t>(k)], rng);
        step_with_draws(s, dt, draws);
    }

    std::vector<std::string> observable_names() const { return {"p1", "trace"}; }
    void observe(const TrajectoryState& s, std::span<cplx> out) const {
        const cplx x = s.vars[2] * s.vars[0];
        const cplx y = s.vars[3] * s.vars[1];
        out[0] = static_cast<double>(n_particles) * x;
        out[1] = x + y;
    }

    bool divergent(const TrajectoryState& s) const {
        const double x = std::abs(s.vars[2] * s.vars[0]);
        const double y = std::abs(s.vars[3] * s.vars[1]);
        return !(x <= product_cap && y <= product_cap);
    }
    double invariant_defect(const TrajectoryState& s) const {
        return std::abs(s.vars[2] * s.vars[0] + s.vars[3] * s.vars[1] - 1.0);
    }

    Matrix p_phi(const TrajectoryState& s) const {
        Matrix p(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) p(i, j) = s.vars[static_cast<std::size_t>(i)] * s.vars[static_cast<std::size_t>(2 + j)];
        return p;
    }
};

inline void two_mode_step(TrajectoryState& s, const TwoModeModel& m, double dt, RngStream& rng) {
    TwoModeModel::Workspace ws;
    m.step(s, dt, rng, ws);
}

// generic boson condensate pair with an arbitrary separable interaction
struct BosonGenericModel {
    static constexpr ModelFamily family = ModelFamily::boson;
    InteractionSpec inter;
    int n_particles = 10;
    Vector phi0; // normalized initial orbital
    bool renormalize = false;

    using Workspace = BosonWorkspace;
    Workspace make_workspace() const {
        auto ws = make_boson_workspace(inter.dim());
        ws.targets_buf.resize(static_cast<std::size_t>(2 * inter.n_ops()));
        return ws;
    }
    int n_noise_terms() const { return 2 * inter.n_ops(); }

    const InteractionSpec& interaction() const { return inter; }

    TrajectoryState initial() const {
        const int m = inter.dim();
        TrajectoryState s;
        s.vars.resize(static_cast<std::size_t>(2 * m));
        for (int i = 0; i < m; ++i) {
            s.vars[static_cast<std::size_t>(i)] = phi0[i];
            s.vars[static_cast<std::size_t>(m + i)] = std::conj(phi0[i]);
        }
        return s;
    }

    void noise_targets(const TrajectoryState&, double dt, std::span<NoiseSpec> out) const {
        boson_noise_targets(inter, dt, out);
    }

    void step_with_draws(TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        auto ws = make_boson_workspace(inter.dim());
        step_with_draws_ws(s, dt, draws, ws);
    }
    void step_with_draws_ws(TrajectoryState& s, double dt, std::span<const cplx> draws,
                            BosonWorkspace& ws) const {
        const int m = inter.dim();
        Eigen::Map<Vector> a(s.vars.data(), m);
        Eigen::Map<Vector> b(s.vars.data() + m, m);
        Vector av = a, bv = b;
        boson_sse_step(av, bv, inter, n_particles, dt, draws, ws);
        if (renormalize) bv /= bv.cwiseProduct(av).sum();
        a = av;
        b = bv;
        s.time += dt;
    }

    void step(TrajectoryState& s, double dt, RngStream& rng, Workspace& ws) const {
        const std::size_t nt = static_cast<std::size_t>(n_noise_terms());
        std::vector<NoiseSpec> specs(nt);
        noise_targets(s, dt, specs);
        std::vector<cplx>& draws = ws.targets_buf;
        draws.resize(nt);
        for (std::size_t k = 0; k < nt; ++k) draws[k] = sample_noise(specs[k], rng);
        step_with_draws_ws(s, dt, draws, ws);
    }

    std::vector<std::string> observable_names() const {
        std::vector<std::string> names{"trace"};
        const int m = inter.dim();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                names.push_back("rho1_" + std::to_string(i) + "_" + std::to_string(j));
        return names;
    }
    void observe(const TrajectoryState& s, std::span<cplx> out) const {
        const int m = inter.dim();
        cplx tr{0.0, 0.0};
        for (int i = 0; i < m; ++i)
            tr += s.vars[static_cast<std::size_t>(m + i)] * s.vars[static_cast<std::size_t>(i)];
        out[0] = tr;
        std::size_t k = 1;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                out[k++] = static_cast<double>(n_particles) * s.vars[static_cast<std::size_t>(i)] *
                           s.vars[static_cast<std::size_t>(m + j)];
    }

    bool divergent(const TrajectoryState&) const { return false; }
    double invariant_defect(const TrajectoryState& s) const {
        const int m = inter.dim();
        cplx tr{0.0, 0.0};
        for (int i = 0; i < m; ++i)
            tr += s.vars[static_cast<std::size_t>(m + i)] * s.vars[static_cast<std::size_t>(i)];
        return std::abs(tr - 1.0);
    }

    Matrix p_phi(const TrajectoryState& s) const {
        const int m = inter.dim();
        Matrix p(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                p(i, j) = s.vars[static_cast<std::size_t>(i)] * s.vars[static_cast<std::size_t>(m + j)];
        return p;
    }
};

// fermionic dyadic pair; state stores A (M x N, column major) then B (N x M)
struct FermionModel {
    static constexpr ModelFamily family = ModelFamily::fermion;
    InteractionSpec inter;
    int n_particles = 2;
    Matrix a0; // initial kets; B starts as a0^dag
    bool renormalize = false;

    using Workspace = FermionWorkspace;
    Workspace make_workspace() const {
        auto ws = make_fermion_workspace(inter.dim(), n_particles);
        ws.targets_buf.resize(static_cast<std::size_t>(2 * inter.n_ops()));
        return ws;
    }
    int n_noise_terms() const { return 2 * inter.n_ops(); }

    const InteractionSpec& interaction() const { return inter; }

    TrajectoryState initial() const {
        const int m = inter.dim(), n = n_particles;
        TrajectoryState s;
        s.vars.resize(static_cast<std::size_t>(2 * m * n));
        Eigen::Map<Matrix> a(s.vars.data(), m, n);
        Eigen::Map<Matrix> b(s.vars.data() + m * n, n, m);
        a = a0;
        b = a0.adjoint();
        return s;
    }

    void noise_targets(const TrajectoryState&, double dt, std::span<NoiseSpec> out) const {
        fermion_noise_targets(inter, dt, out);
    }

    void step_with_draws(TrajectoryState& s, double dt, std::span<const cplx> draws) const {
        auto ws = make_fermion_workspace(inter.dim(), n_particles);
        step_with_draws_ws(s, dt, draws, ws);
    }
    void step_with_draws_ws(TrajectoryState& s, double dt, std::span<const cplx> draws,
                            FermionWorkspace& ws) const {
        const int m = inter.dim(), n = n_particles;
        Eigen::Map<Matrix> a(s.vars.data(), m, n);
        Eigen::Map<Matrix> b(s.vars.data() + m * n, n, m);
        Matrix av = a, bv = b;
        fermion_sse_step(av, bv, inter, dt, draws, ws);
        if (renormalize) rebiorthonormalize(av, bv, ws);
        a = av;
        b = bv;
        s.time += dt;
    }

    void step(TrajectoryState& s, double dt, RngStream& rng, Workspace& ws) const {
        const std::size_t nt = static_cast<std::size_t>(n_noise_terms());
        std::vector<NoiseSpec> specs(nt);
        noise_targets(s, dt, specs);
        std::vector<cplx>& draws = ws.targets_buf;
        draws.resize(nt);
        for (std::size_t k = 0; k < nt; ++k) draws[k] = sample_noise(specs[k], rng);
        step_with_draws_ws(s, dt, draws, ws);
    }

    std::vector<std::string> observable_names() const {
        std::vector<std::string> names;
        const int m = inter.dim();
        for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q)
                names.push_back("rho1_" + std::to_string(p) + "_" + std::to_string(q));
        return names;
    }
    void observe(const TrajectoryState& s, std::span<cplx> out) const {
        const int m = inter.dim(), n = n_particles;
        Eigen::Map<const Matrix> a(s.vars.data(), m, n);
        Eigen::Map<const Matrix> b(s.vars.data() + m * n, n, m);
        const Matrix rho = a * b;
        std::size_t k = 0;
        for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q) out[k++] = rho(p, q);
    }

    bool divergent(const TrajectoryState&) const { return false; }
    double invariant_defect(const TrajectoryState& s) const {
        const int m = inter.dim(), n = n_particles;
        Eigen::Map<const Matrix> a(s.vars.data(), m, n);
        Eigen::Map<const Matrix> b(s.vars.data() + m * n, n, m);
        return (b * a - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    }

    Matrix rho(const TrajectoryState& s) const {
        const int m = inter.dim(), n = n_particles;
        Eigen::Map<const Matrix> a(s.vars.data(), m, n);
        Eigen::Map<const Matrix> b(s.vars.data() + m * n, n, m);
        return a * b;
    }
};

} // namespace ssqmc::models
