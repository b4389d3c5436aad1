#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ssqmc/noise.hpp"

namespace ssqmc::fock {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct FockTruncation {
    int n_max = 30;
    int dim() const { return n_max + 1; }
};

inline Matrix annihilation(FockTruncation tr) {
    Matrix a = Matrix::Zero(tr.dim(), tr.dim());
    for (int n = 1; n <= tr.n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Matrix creation(FockTruncation tr) { return annihilation(tr).adjoint(); }

inline Matrix number_op(FockTruncation tr) {
    Matrix n = Matrix::Zero(tr.dim(), tr.dim());
    for (int k = 0; k <= tr.n_max; ++k) n(k, k) = k;
    return n;
}

// H = hbar*omega*n + (hbar*K/2) n(n-1)
inline Matrix kerr_hamiltonian(FockTruncation tr, double omega, double kerr_k, double hbar = 1.0) {
    Matrix h = Matrix::Zero(tr.dim(), tr.dim());
    for (int n = 0; n <= tr.n_max; ++n)
        h(n, n) = hbar * omega * n + hbar * kerr_k * 0.5 * n * (n - 1.0);
    return h;
}

// adds (hbar*K2/6) n(n-1)(n-2)
inline Matrix genkerr_hamiltonian(FockTruncation tr, double omega, double k1, double k2,
                                  double hbar = 1.0) {
    Matrix h = kerr_hamiltonian(tr, omega, k1, hbar);
    for (int n = 0; n <= tr.n_max; ++n)
        h(n, n) += hbar * k2 / 6.0 * n * (n - 1.0) * (n - 2.0);
    return h;
}

// free particle p^2/2m in oscillator variables: -(hbar*w/4)(a^dag - a)^2, w = hbar*eta/m
inline Matrix free_hamiltonian(FockTruncation tr, double eta, double mass, double hbar = 1.0) {
    const double w = hbar * eta / mass;
    const Matrix a = annihilation(tr);
    const Matrix d = a.adjoint() - a;
    return -(hbar * w / 4.0) * (d * d);
}

// Two-mode condensate sector, basis |n, N-n> with n = mode-1 occupation:
// H = (hbar*Omega/2)(c1^dag c2 + c2^dag c1) + hbar*K [n1(n1-1) + n2(n2-1)]
inline Matrix two_mode_hamiltonian(int n_particles, double omega_rabi, double kerr_k,
                                   double hbar = 1.0) {
    if (n_particles < 1) throw std::invalid_argument("two_mode_hamiltonian: n_particles must be >= 1");
    const int dim = n_particles + 1;
    Matrix h = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) {
        const double n2 = n_particles - n;
        h(n, n) = hbar * kerr_k * (n * (n - 1.0) + n2 * (n2 - 1.0));
        if (n + 1 < dim) {
            // <n+1|c1^dag c2|n> = sqrt((n+1)(N-n))
            const double t = hbar * omega_rabi / 2.0 * std::sqrt((n + 1.0) * (n_particles - n));
            h(n + 1, n) += t;
            h(n, n + 1) += t;
        }
    }
    return h;
}

inline void require_hermitian(const Matrix& h, double tol = 1e-10) {
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
        throw std::invalid_argument("propagate_exact: Hamiltonian is not hermitian");
}

// Cached eigendecomposition; evolves kets and dyadic densities exactly.
class SpectralPropagator {
public:
    SpectralPropagator(const Matrix& h, double hbar = 1.0) : hbar_(hbar) {
        require_hermitian(h);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("SpectralPropagator: eigendecomposition failed");
        energies_ = solver.eigenvalues();
        vectors_ = solver.eigenvectors();
    }

    Vector evolve(const Vector& psi0, double t) const {
        Vector phase = phases(t);
        return vectors_ * (phase.asDiagonal() * (vectors_.adjoint() * psi0));
    }

    // U D U^dag with U = exp(-i H t / hbar)
    Matrix evolve_density(const Matrix& d0, double t) const {
        Vector phase = phases(t);
        Matrix m = phase.asDiagonal() * (vectors_.adjoint() * d0 * vectors_);
        m = m * phase.conjugate().asDiagonal();
        return vectors_ * m * vectors_.adjoint();
    }

private:
    Vector phases(double t) const {
        Vector p(energies_.size());
        for (Eigen::Index k = 0; k < energies_.size(); ++k) {
            const double arg = -energies_[k] * t / hbar_;
            p[k] = cplx{std::cos(arg), std::sin(arg)};
        }
        return p;
    }

    double hbar_;
    Eigen::VectorXd energies_;
    Matrix vectors_;
};

inline Vector propagate_exact(const Matrix& h, const Vector& psi0, double t, double hbar = 1.0) {
    return SpectralPropagator(h, hbar).evolve(psi0, t);
}

// Dyadic density |alpha><beta| / <beta|alpha> of a Bargmann pair:
// D_mn = alpha^m beta*^n / sqrt(m! n!) * exp(-beta* alpha). Unit trace up to
// truncation tail.
inline Matrix bargmann_density(cplx alpha, cplx beta_star, FockTruncation tr) {
    if (std::abs(beta_star * alpha) > 500.0)
        throw std::invalid_argument("bargmann_density: |beta* alpha| too large, exp overflow");
    const int dim = tr.dim();
    Vector v(dim), w(dim);
    v[0] = 1.0;
    w[0] = 1.0;
    for (int m = 1; m < dim; ++m) {
        v[m] = v[m - 1] * alpha / std::sqrt(static_cast<double>(m));
        w[m] = w[m - 1] * beta_star / std::sqrt(static_cast<double>(m));
    }
    return std::exp(-beta_star * alpha) * (v * w.transpose());
}

inline cplx expectation(const Matrix& op, const Matrix& density) {
    return (op * density).trace();
}

// d<A>/dt from the exact commutator: Tr([A,H] D) / (i hbar)
inline cplx ehrenfest_rhs(const Matrix& op, const Matrix& h, const Matrix& density,
                          double hbar = 1.0) {
    const cplx num = ((op * h - h * op) * density).trace();
    return num / (cplx{0.0, 1.0} * hbar);
}

} // namespace ssqmc::fock
