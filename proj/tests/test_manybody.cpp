#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "ssqmc/models/manybody.hpp"

using namespace ssqmc::models;
using ssqmc::cplx;
using ssqmc::TrajectoryState;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937& gen, double scale = 1.0) {
    std::normal_distribution<double> n;
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = scale * cplx{n(gen), n(gen)};
    return m;
}

Matrix random_hermitian(int dim, std::mt19937& gen, double scale = 1.0) {
    const Matrix m = random_matrix(dim, dim, gen, scale);
    return 0.5 * (m + Matrix(m.adjoint()));
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("kron follows the mixed-product rule") {
    std::mt19937 gen(5);
    const Matrix a = random_matrix(2, 2, gen), b = random_matrix(3, 3, gen);
    const Matrix c = random_matrix(2, 2, gen), d = random_matrix(3, 3, gen);
    const Matrix lhs = kron(a, b) * kron(c, d);
    const Matrix rhs = kron(Matrix(a * c), Matrix(b * d));
    REQUIRE(max_abs(lhs - rhs) < 1e-12);
    REQUIRE(kron(a, b)(1 * 3 + 2, 0 * 3 + 1) == a(1, 0) * b(2, 1));
}

TEST_CASE("boson mean field hand cases") {
    std::mt19937 gen(7);
    InteractionSpec inter;
    inter.kinetic = random_hermitian(2, gen);

    SECTION("no interaction terms") {
        const Matrix p = random_matrix(2, 2, gen);
        REQUIRE(max_abs(boson_mean_field(p, inter, 9) - inter.kinetic) == 0.0);
    }

    SECTION("single particle sees no mean field") {
        inter.ops = {random_hermitian(2, gen)};
        const Matrix p = random_matrix(2, 2, gen);
        REQUIRE(max_abs(boson_mean_field(p, inter, 1) - inter.kinetic) < 1e-15);
    }

    SECTION("occupation-operator pair gives the diagonal density shift") {
        const double k = 0.25, hbar = 1.0;
        const int n = 5;
        const double g = std::sqrt(hbar * k);
        Matrix o1 = Matrix::Zero(2, 2), o2 = Matrix::Zero(2, 2);
        o1(0, 0) = g;
        o2(1, 1) = g;
        inter.ops = {o1, o2};
        Matrix p = Matrix::Zero(2, 2);
        p(0, 0) = 0.3;
        p(1, 1) = 0.7;
        Matrix expected = inter.kinetic;
        expected(0, 0) += (n - 1.0) * hbar * k * 0.3;
        expected(1, 1) += (n - 1.0) * hbar * k * 0.7;
        REQUIRE(max_abs(boson_mean_field(p, inter, n) - expected) < 1e-14);
    }
}

TEST_CASE("fermion mean field matches the brute-force antisymmetrized contraction") {
    std::mt19937 gen(11);
    const int m = 4;
    InteractionSpec inter;
    inter.kinetic = random_hermitian(m, gen);
    inter.ops = {random_hermitian(m, gen), random_hermitian(m, gen)};
    inter.signs = {1.0, -1.0};
    const Matrix rho = random_matrix(m, m, gen);

    // independent route: h_pr = T_pr + sum_{qs} (v - v P12)[(pq),(rs)] rho_sq
    const Matrix vbar = assemble_v12(inter);
    Matrix h = inter.kinetic;
    for (int p = 0; p < m; ++p)
        for (int r = 0; r < m; ++r)
            for (int q = 0; q < m; ++q)
                for (int s = 0; s < m; ++s)
                    h(p, r) += (vbar(p * m + q, r * m + s) - vbar(p * m + q, s * m + r)) * rho(s, q);

    REQUIRE(max_abs(fermion_mean_field(rho, inter) - h) < 1e-12);
}

TEST_CASE("fermion mean field is hermitian on a hermitian density") {
    std::mt19937 gen(13);
    const int m = 3;
    InteractionSpec inter;
    inter.kinetic = random_hermitian(m, gen);
    inter.ops = {random_hermitian(m, gen)};
    const Matrix a = random_matrix(m, 2, gen);
    const Matrix rho = a * a.adjoint();
    const Matrix h = fermion_mean_field(rho, inter);
    REQUIRE(max_abs(h - Matrix(h.adjoint())) < 1e-12);
}

TEST_CASE("two-mode scalar step matches the generic boson step") {
    TwoModeModel model;
    model.n_particles = 17;
    model.omega_rabi = 1.0;
    model.kerr_k = 0.1;
    const InteractionSpec inter = model.interaction();

    std::mt19937 gen(17);
    std::normal_distribution<double> n;
    TrajectoryState s{0.0, {}};
    s.vars.resize(4);
    for (auto& v : s.vars) v = cplx{n(gen), n(gen)};
    // normalize the pair overlap, the model evolves states with trace one
    const cplx tr = s.vars[2] * s.vars[0] + s.vars[3] * s.vars[1];
    s.vars[2] /= tr;
    s.vars[3] /= tr;

    std::vector<cplx> draws(4);
    for (auto& d : draws) d = 0.01 * cplx{n(gen), n(gen)};
    const double dt = 1e-3;

    TrajectoryState scalar = s;
    model.step_with_draws(scalar, dt, draws);

    BosonGenericModel generic;
    generic.inter = inter;
    generic.n_particles = model.n_particles;
    TrajectoryState vectorized = s;
    generic.step_with_draws(vectorized, dt, draws);

    for (int k = 0; k < 4; ++k)
        REQUIRE(std::abs(scalar.vars[static_cast<std::size_t>(k)] -
                         vectorized.vars[static_cast<std::size_t>(k)]) < 1e-14);
    REQUIRE(scalar.time == vectorized.time);

    // the two models also advertise the same noise law
    std::vector<NoiseSpec> st(4), sg(4);
    model.noise_targets(s, dt, st);
    generic.noise_targets(s, dt, sg);
    for (int k = 0; k < 4; ++k) {
        REQUIRE(st[static_cast<std::size_t>(k)].order == sg[static_cast<std::size_t>(k)].order);
        REQUIRE(st[static_cast<std::size_t>(k)].target ==
                sg[static_cast<std::size_t>(k)].target);
    }
}

TEST_CASE("boson noise leaves the pair overlap unchanged at linear order") {
    std::mt19937 gen(19);
    const int m = 3;
    InteractionSpec inter;
    inter.kinetic = random_hermitian(m, gen);
    inter.ops = {random_hermitian(m, gen), random_hermitian(m, gen)};
    inter.signs = {1.0, -1.0};

    Vector a = Vector(random_matrix(m, 1, gen));
    Vector b = Vector(random_matrix(m, 1, gen));
    b /= b.cwiseProduct(a).sum(); // overlap one

    std::normal_distribution<double> n;
    std::vector<cplx> draws(4);
    for (auto& d : draws) d = 0.05 * cplx{n(gen), n(gen)};
    const std::vector<cplx> zeros(4, cplx{0.0, 0.0});
    const double dt = 1e-3;

    auto ws = make_boson_workspace(m);
    Vector a_full = a, b_full = b, a_drift = a, b_drift = b;
    boson_sse_step(a_full, b_full, inter, 7, dt, draws, ws);
    boson_sse_step(a_drift, b_drift, inter, 7, dt, zeros, ws);

    const Vector na = a_full - a_drift, nb = b_full - b_drift;
    const cplx leak = b.cwiseProduct(na).sum() + nb.cwiseProduct(a).sum();
    REQUIRE(std::abs(leak) < 1e-14);

    // and the drift alone conserves the overlap identically
    const cplx drift_leak = b.cwiseProduct(a_drift - a).sum() +
                            (b_drift - b).cwiseProduct(a).sum();
    REQUIRE(std::abs(drift_leak) < 1e-14);
}

TEST_CASE("drift-only boson step is the mean-field flow") {
    std::mt19937 gen(23);
    const int m = 3, n_part = 6;
    InteractionSpec inter;
    inter.kinetic = random_hermitian(m, gen);
    inter.ops = {random_hermitian(m, gen)};
    inter.hbar = 0.7;

    Vector a = Vector(random_matrix(m, 1, gen));
    Vector b = Vector(random_matrix(m, 1, gen));
    b /= b.cwiseProduct(a).sum();

    const double dt = 2e-3;
    const std::vector<cplx> zeros(2, cplx{0.0, 0.0});
    auto ws = make_boson_workspace(m);
    Vector a1 = a, b1 = b;
    boson_sse_step(a1, b1, inter, n_part, dt, zeros, ws);

    const Matrix p_phi = a * b.transpose();
    const Matrix h = boson_mean_field(p_phi, inter, n_part);
    const cplx idt_h = dt / cplx{0.0, inter.hbar};
    REQUIRE((a1 - (a + idt_h * (h * a))).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((b1 - (b - idt_h * (h.transpose() * b))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("fermion noise leaves the biorthonormality unchanged at linear order") {
    std::mt19937 gen(29);
    const int m = 4, n = 2;
    InteractionSpec inter;
    inter.kinetic = random_hermitian(m, gen);
    inter.ops = {random_hermitian(m, gen)};

    const Matrix a = random_matrix(m, n, gen);
    const Matrix b = (a.adjoint() * a).inverse() * a.adjoint(); // B A = 1
    REQUIRE(max_abs(b * a - Matrix::Identity(n, n)) < 1e-12);

    std::normal_distribution<double> nd;
    std::vector<cplx> draws(2);
    for (auto& d : draws) d = 0.05 * cplx{nd(gen), nd(gen)};
    const std::vector<cplx> zeros(2, cplx{0.0, 0.0});
    const double dt = 1e-3;

    auto ws = make_fermion_workspace(m, n);
    Matrix a_full = a, b_full = b, a_drift = a, b_drift = b;
    fermion_sse_step(a_full, b_full, inter, dt, draws, ws);
    fermion_sse_step(a_drift, b_drift, inter, dt, zeros, ws);

    const Matrix na = a_full - a_drift, nb = b_full - b_drift;
    REQUIRE(max_abs(b * na + nb * a) < 1e-13);
}

TEST_CASE("rebiorthonormalize restores the pair identity and keeps the density") {
    std::mt19937 gen(31);
    const int m = 5, n = 3;
    const Matrix a = random_matrix(m, n, gen);
    Matrix b = (a.adjoint() * a).inverse() * a.adjoint() + 0.1 * random_matrix(n, m, gen);

    const Matrix rho_eff = a * (b * a).inverse() * b;
    auto ws = make_fermion_workspace(m, n);
    rebiorthonormalize(a, b, ws);
    REQUIRE(max_abs(b * a - Matrix::Identity(n, n)) < 1e-12);
    const Matrix rho = a * b;
    REQUIRE(max_abs(rho - rho_eff) < 1e-11);
    REQUIRE(max_abs(rho * rho - rho) < 1e-11); // idempotent once B A = 1
}

TEST_CASE("interaction decomposition round-trips") {
    std::mt19937 gen(37);
    const int m = 3;
    InteractionSpec inter;
    inter.kinetic = Matrix::Zero(m, m);
    inter.ops = {random_hermitian(m, gen), random_hermitian(m, gen)};
    inter.signs = {1.0, -1.0};
    const Matrix v = assemble_v12(inter);

    std::vector<Matrix> ops;
    std::vector<double> signs;
    decompose_separable(v, ops, signs);
    REQUIRE(!ops.empty());
    for (const Matrix& o : ops) REQUIRE(max_abs(o - Matrix(o.adjoint())) < 1e-10);

    InteractionSpec back;
    back.kinetic = inter.kinetic;
    back.ops = ops;
    back.signs = signs;
    REQUIRE(max_abs(assemble_v12(back) - v) < 1e-10);

    // the signature of the separable form is recovered
    REQUIRE(std::count(signs.begin(), signs.end(), -1.0) == 1);
    REQUIRE(std::count(signs.begin(), signs.end(), 1.0) ==
            static_cast<long>(signs.size()) - 1);
}

TEST_CASE("decompose_separable rejects malformed tensors") {
    std::mt19937 gen(41);
    std::vector<Matrix> ops;
    std::vector<double> signs;
    REQUIRE_THROWS_AS(decompose_separable(Matrix::Zero(3, 3), ops, signs),
                      std::invalid_argument);
    // product of two different hermitian factors is not symmetric under the
    // required reshuffle
    const Matrix bad = kron(random_hermitian(2, gen), random_hermitian(2, gen));
    REQUIRE_THROWS_AS(decompose_separable(bad, ops, signs), std::invalid_argument);
}

TEST_CASE("pair rhs without interaction is the free commutator flow") {
    std::mt19937 gen(43);
    const int m = 3;
    InteractionSpec inter;
    inter.kinetic = random_hermitian(m, gen);
    inter.hbar = 1.3;
    const cplx ih{0.0, inter.hbar};

    SECTION("fermions") {
        const Matrix a = random_matrix(m, 2, gen);
        const Matrix rho = a * ((a.adjoint() * a).inverse() * a.adjoint());
        const PairRhs rhs = bbgky_pair_rhs_fermion(rho, inter);
        const Matrix& t = inter.kinetic;
        REQUIRE(max_abs(rhs.drho1_dt - Matrix((t * rho - rho * t) / ih)) < 1e-12);

        // rho12[(ij),(kl)] = rho_ik rho_jl - rho_jk rho_il, evolved by T1+T2
        Matrix rho12(m * m, m * m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l)
                        rho12(i * m + j, k * m + l) =
                            rho(i, k) * rho(j, l) - rho(j, k) * rho(i, l);
        const Matrix eye = Matrix::Identity(m, m);
        const Matrix hh = kron(t, eye) + kron(eye, t);
        REQUIRE(max_abs(rhs.drho12_dt - Matrix((hh * rho12 - rho12 * hh) / ih)) < 1e-12);
    }

    SECTION("stationary fermion state") {
        Matrix t = Matrix::Zero(m, m);
        t(0, 0) = 1.0;
        t(1, 1) = 2.0;
        t(2, 2) = 3.0;
        inter.kinetic = t;
        Matrix rho = Matrix::Zero(m, m);
        rho(0, 0) = rho(1, 1) = 1.0; // commutes with t, idempotent
        const PairRhs rhs = bbgky_pair_rhs_fermion(rho, inter);
        REQUIRE(max_abs(rhs.drho1_dt) < 1e-14);
        REQUIRE(max_abs(rhs.drho12_dt) < 1e-14);
    }

    SECTION("bosons") {
        const int n_part = 8;
        Vector a = Vector(random_matrix(m, 1, gen));
        Vector b = Vector(random_matrix(m, 1, gen));
        b /= b.cwiseProduct(a).sum();
        const Matrix p = a * b.transpose();
        const PairRhs rhs = bbgky_pair_rhs_boson(p, inter, n_part);
        const Matrix& t = inter.kinetic;
        REQUIRE(max_abs(rhs.drho1_dt -
                        Matrix(static_cast<double>(n_part) * (t * p - p * t) / ih)) < 1e-12);

        const Matrix rho12 = n_part * (n_part - 1.0) * kron(p, p);
        const Matrix eye = Matrix::Identity(m, m);
        const Matrix hh = kron(t, eye) + kron(eye, t);
        REQUIRE(max_abs(rhs.drho12_dt - Matrix((hh * rho12 - rho12 * hh) / ih)) < 1e-12);
    }
}

TEST_CASE("model states expose consistent densities and invariants") {
    SECTION("two-mode") {
        TwoModeModel model;
        const TrajectoryState s = model.initial();
        REQUIRE(model.invariant_defect(s) < 1e-15);
        REQUIRE_FALSE(model.divergent(s));
        const Matrix p = model.p_phi(s);
        REQUIRE(std::abs(p.trace() - cplx{1.0, 0.0}) < 1e-15);
        REQUIRE(std::abs(p(1, 1) - cplx{1.0, 0.0}) < 1e-15); // starts in mode 2
        std::vector<cplx> obs(2);
        model.observe(s, obs);
        REQUIRE(std::abs(obs[0]) < 1e-15);                    // p1 = N x
        REQUIRE(std::abs(obs[1] - cplx{1.0, 0.0}) < 1e-15);   // trace
    }

    SECTION("fermion pair") {
        std::mt19937 gen(47);
        FermionModel model;
        model.inter.kinetic = random_hermitian(4, gen);
        model.inter.ops = {random_hermitian(4, gen)};
        model.n_particles = 2;
        Matrix a0 = random_matrix(4, 2, gen);
        // orthonormal columns so B = A^dag gives B A = 1
        const Eigen::HouseholderQR<Matrix> qr(a0);
        model.a0 = qr.householderQ() * Matrix::Identity(4, 2);
        const TrajectoryState s = model.initial();
        REQUIRE(model.invariant_defect(s) < 1e-12);
        const Matrix rho = model.rho(s);
        REQUIRE(std::abs(rho.trace() - cplx{2.0, 0.0}) < 1e-12);
        REQUIRE(max_abs(rho * rho - rho) < 1e-12);
        std::vector<cplx> obs(16);
        model.observe(s, obs);
        REQUIRE(std::abs(obs[0] - rho(0, 0)) < 1e-15);
        REQUIRE(std::abs(obs[1] - rho(0, 1)) < 1e-15);
    }
}
