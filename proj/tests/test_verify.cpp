#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ssqmc/models/manybody.hpp"
#include "ssqmc/verify.hpp"

using namespace ssqmc;
using namespace ssqmc::verify;

namespace {

bool has_failed_check_named(const MatchReport& report, const std::string& needle) {
    return std::any_of(report.checks.begin(), report.checks.end(), [&](const MomentCheck& c) {
        return !c.pass && c.name.find(needle) != std::string::npos;
    });
}

bool has_check_named(const MatchReport& report, const std::string& needle) {
    return std::any_of(report.checks.begin(), report.checks.end(), [&](const MomentCheck& c) {
        return c.name.find(needle) != std::string::npos;
    });
}

models::Matrix random_hermitian(int dim, std::mt19937& gen, double scale = 1.0) {
    std::normal_distribution<double> n;
    models::Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = scale * cplx{n(gen), n(gen)};
    return models::Matrix(0.5 * (m + models::Matrix(m.adjoint())));
}

} // namespace

TEST_CASE("gauss_hermite reproduces standard normal moments") {
    const GaussHermiteRule one = gauss_hermite(1);
    REQUIRE(one.nodes == std::vector<double>{0.0});
    REQUIRE(one.weights == std::vector<double>{1.0});

    const GaussHermiteRule two = gauss_hermite(2);
    REQUIRE(std::abs(two.nodes[0] + 1.0) < 1e-14);
    REQUIRE(std::abs(two.nodes[1] - 1.0) < 1e-14);
    REQUIRE(std::abs(two.weights[0] - 0.5) < 1e-14);
    REQUIRE(std::abs(two.weights[1] - 0.5) < 1e-14);

    // four nodes integrate polynomials through degree 7 exactly;
    // standard normal moments are 1, 0, 1, 0, 3, 0, 15, 0
    const GaussHermiteRule four = gauss_hermite(4);
    const std::vector<double> expected{1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0};
    for (int p = 0; p <= 7; ++p) {
        double s = 0.0;
        for (std::size_t i = 0; i < four.nodes.size(); ++i)
            s += four.weights[i] * std::pow(four.nodes[i], p);
        REQUIRE(std::abs(s - expected[static_cast<std::size_t>(p)]) < 1e-12);
    }
}

TEST_CASE("noise atoms reproduce the advertised moment laws") {
    const GaussHermiteRule gh = gauss_hermite(4);
    const cplx target{3e-4, -2e-4};

    SECTION("second order") {
        const auto atoms = noise_atoms(NoiseSpec{2, target}, gh);
        REQUIRE(atoms.size() == 4);
        cplx m1{}, m2{}, m4{};
        double w = 0.0;
        for (const auto& at : atoms) {
            w += at.weight;
            m1 += at.weight * at.value;
            m2 += at.weight * at.value * at.value;
            m4 += at.weight * at.value * at.value * at.value * at.value;
        }
        REQUIRE(std::abs(w - 1.0) < 1e-14);
        REQUIRE(std::abs(m1) < 1e-14);
        REQUIRE(std::abs(m2 - target) < 1e-14);
        REQUIRE(std::abs(m4 - 3.0 * target * target) < 1e-14);
    }

    SECTION("third order") {
        const auto atoms = noise_atoms(NoiseSpec{3, target}, gh);
        REQUIRE(atoms.size() == 3);
        cplx m1{}, m2{}, m3{}, m4{};
        for (const auto& at : atoms) {
            REQUIRE(std::abs(at.weight - 1.0 / 3.0) < 1e-15);
            REQUIRE(std::abs(at.value * at.value * at.value - target) < 1e-15);
            m1 += at.weight * at.value;
            m2 += at.weight * at.value * at.value;
            m3 += at.weight * at.value * at.value * at.value;
            m4 += at.weight * at.value * at.value * at.value * at.value;
        }
        REQUIRE(std::abs(m1) < 1e-15);
        REQUIRE(std::abs(m2) < 1e-15);
        REQUIRE(std::abs(m3 - target) < 1e-15);
        REQUIRE(std::abs(m4) < 1e-15);
    }
}

TEST_CASE("free expansion scheme matches the exact hierarchy, quadratics included") {
    models::FreeExpansionModel model;
    model.eta = 2.0;
    model.mass = 0.5;
    const MatchReport report = verify_random_states(model, 3, 7);
    INFO("worst rel err " << report.worst_rel_err());
    REQUIRE(report.all_pass());
    REQUIRE(has_check_named(report, "s0:x2")); // position spread is probed
    REQUIRE(has_check_named(report, "s2:a3"));
}

TEST_CASE("kerr scheme matches the exact hierarchy through third order") {
    models::KerrModel model;
    const MatchReport report = verify_random_states(model, 5, 11);
    INFO("worst rel err " << report.worst_rel_err());
    REQUIRE(report.all_pass());
    REQUIRE(has_check_named(report, "a3"));
    REQUIRE_FALSE(has_check_named(report, "x2")); // no quadrature pair here
}

TEST_CASE("generalized kerr matches through third order on many random states") {
    models::GenKerrModel model;
    const MatchReport report = verify_random_states(model, 20, 99);
    INFO("worst rel err " << report.worst_rel_err());
    REQUIRE(report.all_pass());
    REQUIRE(report.n_failed() == 0);
}

TEST_CASE("one percent bias on any noise target is detected") {
    models::GenKerrModel model;
    for (int term = 0; term < 4; ++term) {
        VerifyOptions opt;
        opt.target_scale.assign(4, 1.0);
        opt.target_scale[static_cast<std::size_t>(term)] = 1.01;
        const MatchReport report = verify_random_states(model, 3, 21, opt);
        INFO("term " << term);
        REQUIRE_FALSE(report.all_pass());
    }
}

TEST_CASE("disabling the third-order draws breaks exactly the cubic moments") {
    models::GenKerrModel model;
    VerifyOptions opt;
    opt.target_scale = {1.0, 0.0, 1.0, 0.0}; // kill both cubic-law draws
    const MatchReport report = verify_random_states(model, 2, 33, opt);
    REQUIRE_FALSE(report.all_pass());
    REQUIRE(has_failed_check_named(report, "a3"));
    // first and second moments survive: those laws do not involve the cubes
    for (const auto& c : report.checks)
        if (c.order <= 2) REQUIRE(c.pass);
}

TEST_CASE("target scale must cover every draw") {
    models::GenKerrModel model;
    VerifyOptions opt;
    opt.target_scale = {1.0}; // model uses four draws
    REQUIRE_THROWS_AS(verify_random_states(model, 1, 5, opt), std::invalid_argument);
}

TEST_CASE("empty report does not pass") {
    MatchReport report;
    REQUIRE_FALSE(report.all_pass());
}

TEST_CASE("two-mode pair scheme matches the coupled pair hierarchy") {
    models::TwoModeModel model;
    VerifyOptions opt;
    opt.tolerance = 1e-6;
    const MatchReport report = verify_many_body_random_states(model, 3, 17, opt);
    INFO("worst rel err " << report.worst_rel_err());
    REQUIRE(report.all_pass());
    REQUIRE(has_check_named(report, "rho12_"));
}

TEST_CASE("generic boson pair scheme matches the coupled pair hierarchy") {
    std::mt19937 gen(51);
    models::BosonGenericModel model;
    model.inter.kinetic = random_hermitian(2, gen);
    model.inter.ops = {random_hermitian(2, gen, 0.5), random_hermitian(2, gen, 0.5)};
    model.inter.signs = {1.0, -1.0};
    model.n_particles = 7;
    model.phi0 = models::Vector::Zero(2);
    model.phi0[0] = 1.0;
    VerifyOptions opt;
    opt.tolerance = 1e-6;
    const MatchReport report = verify_many_body_random_states(model, 3, 19, opt);
    INFO("worst rel err " << report.worst_rel_err());
    REQUIRE(report.all_pass());
}

TEST_CASE("fermion pair scheme matches the coupled pair hierarchy") {
    std::mt19937 gen(53);
    models::FermionModel model;
    model.inter.kinetic = random_hermitian(4, gen);
    model.inter.ops = {random_hermitian(4, gen, 0.5)};
    model.n_particles = 2;
    model.a0 = models::Matrix::Identity(4, 2);
    VerifyOptions opt;
    opt.tolerance = 1e-6;
    const MatchReport report = verify_many_body_random_states(model, 3, 23, opt);
    INFO("worst rel err " << report.worst_rel_err());
    REQUIRE(report.all_pass());

    // biased targets must fail here too
    VerifyOptions bad = opt;
    bad.target_scale = {1.0, 1.01};
    REQUIRE_FALSE(verify_many_body_random_states(model, 2, 23, bad).all_pass());
}
