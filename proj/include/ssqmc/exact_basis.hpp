#pragma once

#include <array>
#include <bit>
#include <stdexcept>
#include <vector>

#include "ssqmc/fock.hpp"

namespace ssqmc::exact {

using fock::Matrix;
using fock::Vector;

// ---------------------------------------------------------------------------
// N bosons on two modes, basis |n, N-n> with n = mode-1 occupation.
// Everything is assembled from the four generators G[i][j] = c_i^dag c_j.
// ---------------------------------------------------------------------------
class TwoModeBosons {
public:
    explicit TwoModeBosons(int n_particles) : n_(n_particles) {
        if (n_particles < 1)
            throw std::invalid_argument("TwoModeBosons: n_particles must be >= 1");
        const int dim = n_particles + 1;
        for (auto& row : gen_)
            for (auto& g : row) g = Matrix::Zero(dim, dim);
        for (int n = 0; n < dim; ++n) {
            gen_[0][0](n, n) = n;
            gen_[1][1](n, n) = n_particles - n;
            if (n + 1 < dim) {
                const double amp = std::sqrt((n + 1.0) * (n_particles - n));
                gen_[0][1](n + 1, n) = amp; // c1^dag c2
                gen_[1][0](n, n + 1) = amp; // c2^dag c1
            }
        }
    }

    int n_particles() const { return n_; }
    int dim() const { return n_ + 1; }
    const Matrix& generator(int i, int j) const { return gen_[i][j]; }

    Matrix one_body(const Eigen::Matrix2cd& t) const {
        Matrix out = Matrix::Zero(dim(), dim());
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out += t(i, j) * gen_[i][j];
        return out;
    }

    // H = Gamma[T] + (1/2) sum_l s_l (Ohat_l^2 - Gamma[O_l^2]) for the
    // separable interaction v12 = sum_l s_l O_l x O_l.
    Matrix hamiltonian(const Eigen::Matrix2cd& t, const std::vector<Eigen::Matrix2cd>& ops,
                       const std::vector<double>& signs) const {
        Matrix h = one_body(t);
        for (std::size_t l = 0; l < ops.size(); ++l) {
            const Matrix ohat = one_body(ops[l]);
            const Eigen::Matrix2cd osq = ops[l] * ops[l];
            h += 0.5 * signs[l] * (ohat * ohat - one_body(osq));
        }
        return h;
    }

    // condensate (sum_i phi_i c_i^dag)^N / sqrt(N!) |0> for normalized phi
    Vector condensate(const Eigen::Vector2cd& phi) const {
        Vector psi(dim());
        double log_binom = 0.0;
        for (int n = 0; n < dim(); ++n) {
            if (n > 0) log_binom += std::log((n_ - n + 1.0) / n);
            psi[n] = std::sqrt(std::exp(log_binom)) * std::pow(phi[0], n) *
                     std::pow(phi[1], n_ - n);
        }
        return psi;
    }

private:
    int n_;
    std::array<std::array<Matrix, 2>, 2> gen_;
};

// ---------------------------------------------------------------------------
// Fermions on M levels in the full 2^M Fock space (Jordan-Wigner ladder
// matrices). Small M only; used as the exact reference for the toy models.
// ---------------------------------------------------------------------------
class FermionFock {
public:
    explicit FermionFock(int levels) : m_(levels) {
        if (levels < 1 || levels > 14)
            throw std::invalid_argument("FermionFock: levels must be in [1,14]");
        const int dim = 1 << levels;
        ops_.reserve(levels);
        for (int p = 0; p < levels; ++p) {
            Matrix a = Matrix::Zero(dim, dim);
            for (int s = 0; s < dim; ++s) {
                if (!(s & (1 << p))) continue;
                // sign from levels below p that are occupied
                const int below = s & ((1 << p) - 1);
                const double sign = (std::popcount(static_cast<unsigned>(below)) % 2) ? -1.0 : 1.0;
                a(s ^ (1 << p), s) = sign;
            }
            ops_.push_back(std::move(a));
        }
    }

    int levels() const { return m_; }
    int dim() const { return 1 << m_; }
    const Matrix& a(int p) const { return ops_[static_cast<std::size_t>(p)]; }

    Matrix one_body(const Matrix& t) const {
        const int d = dim();
        Matrix out = Matrix::Zero(d, d);
        for (int p = 0; p < m_; ++p)
            for (int q = 0; q < m_; ++q)
                if (t(p, q) != cplx{0.0, 0.0}) out += t(p, q) * (ops_[p].adjoint() * ops_[q]);
        return out;
    }

    Matrix hamiltonian(const Matrix& t, const std::vector<Matrix>& ops,
                       const std::vector<double>& signs) const {
        Matrix h = one_body(t);
        for (std::size_t l = 0; l < ops.size(); ++l) {
            const Matrix ohat = one_body(ops[l]);
            h += 0.5 * signs[l] * (ohat * ohat - one_body(ops[l] * ops[l]));
        }
        return h;
    }

    // Slater determinant prod_i (sum_p A(p,i) a_p^dag) |0>
    Vector slater(const Matrix& a_cols) const {
        Vector psi = Vector::Zero(dim());
        psi[0] = 1.0;
        for (Eigen::Index i = 0; i < a_cols.cols(); ++i) {
            Matrix cr = Matrix::Zero(dim(), dim());
            for (int p = 0; p < m_; ++p) cr += a_cols(p, i) * ops_[p].adjoint();
            psi = cr * psi;
        }
        return psi;
    }

    // rho(p,q) = <psi| a_q^dag a_p |psi> / <psi|psi>
    Matrix one_body_density(const Vector& psi) const {
        Matrix rho(m_, m_);
        const double nrm = psi.squaredNorm();
        for (int p = 0; p < m_; ++p)
            for (int q = 0; q < m_; ++q)
                rho(p, q) = psi.dot(ops_[q].adjoint() * (ops_[p] * psi)) / nrm;
        return rho;
    }

private:
    int m_;
    std::vector<Matrix> ops_;
};

} // namespace ssqmc::exact
