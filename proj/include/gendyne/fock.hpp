// Truncated-Fock-space engine: dense operators and states used as the
// brute-force oracle for the analytic constructions.
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "gendyne/common.hpp"

namespace gendyne {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct FockOperator {
    int dim = 0;
    CMat m;
};

struct FockDensity {
    int dim = 0;
    CMat m;

    void hermitize() { m = 0.5 * (m + m.adjoint()).eval(); }

    void normalize() {
        const double tr = m.trace().real();
        if (!(tr > 0.0)) throw NumericalError("FockDensity::normalize: trace " + std::to_string(tr));
        m /= tr;
    }

    /// Hermiticity, unit trace and positivity checks.
    void validate(double herm_tol = 1e-12, double trace_tol = 1e-10, double eig_tol = 1e-9) const {
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
            throw std::invalid_argument("FockDensity: not Hermitian");
        if (std::abs(m.trace().real() - 1.0) > trace_tol || std::abs(m.trace().imag()) > trace_tol)
            throw std::invalid_argument("FockDensity: trace != 1");
        Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -eig_tol)
            throw std::invalid_argument("FockDensity: negative eigenvalue " +
                                        std::to_string(es.eigenvalues().minCoeff()));
    }
};

inline FockOperator annihilation(int dim) {
    if (dim < 2) throw std::invalid_argument("annihilation: dim must be >= 2");
    FockOperator op{dim, CMat::Zero(dim, dim)};
    for (int n = 1; n < dim; ++n) op.m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return op;
}

inline FockOperator creation(int dim) {
    FockOperator op = annihilation(dim);
    op.m = op.m.adjoint().eval();
    return op;
}

inline FockOperator number_operator(int dim) {
    FockOperator op{dim, CMat::Zero(dim, dim)};
    for (int n = 0; n < dim; ++n) op.m(n, n) = static_cast<double>(n);
    return op;
}

inline FockOperator position_operator(int dim) {  // q = a + a^dag
    FockOperator a = annihilation(dim);
    return {dim, a.m + a.m.adjoint()};
}

inline FockOperator momentum_operator(int dim) {  // p = -i(a - a^dag)
    FockOperator a = annihilation(dim);
    return {dim, Complex(0, -1) * (a.m - a.m.adjoint())};
}

inline FockOperator identity_operator(int dim) {
    return {dim, CMat::Identity(dim, dim)};
}

inline CMat matrix_exponential(const CMat& m) { return m.exp(); }

inline CVec basis_vector(int n, int dim) {
    CVec v = CVec::Zero(dim);
    v(n) = 1.0;
    return v;
}

inline CVec coherent_vector(Complex alpha, int dim) {
    CVec v(dim);
    v(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return v;
}

namespace detail {
// Weight of a displaced vacuum (Poisson) beyond the truncation.
inline double coherent_tail(double nbar, int dim) {
    double term = std::exp(-nbar), cum = term;
    for (int n = 1; n < dim; ++n) {
        term *= nbar / n;
        cum += term;
    }
    return std::max(0.0, 1.0 - cum);
}

// Weight of a squeezed vacuum beyond the truncation.
inline double squeezed_tail(double r, int dim) {
    const double t2 = std::tanh(std::abs(r)) * std::tanh(std::abs(r));
    double term = 1.0 / std::cosh(std::abs(r));  // |c_0|^2
    double cum = 0.0;
    for (int m = 0; 2 * m < dim; ++m) {
        cum += term;
        term *= t2 * (2.0 * m + 1.0) / (2.0 * m + 2.0);
    }
    return std::max(0.0, 1.0 - cum);
}
}  // namespace detail

/// D(z) = exp{z a^dag - z* a}. Guarded so that the displaced vacuum keeps its
/// weight inside the truncation.
inline FockOperator displacement(Complex z, int dim, double tail_tol = 1e-8) {
    const double tail = detail::coherent_tail(std::norm(z), dim);
    if (tail > tail_tol)
        throw TruncationError("displacement: tail weight " + std::to_string(tail) +
                              " at dim " + std::to_string(dim) + "; increase dim");
    const CMat a = annihilation(dim).m;
    return {dim, matrix_exponential(z * a.adjoint() - std::conj(z) * a)};
}

/// S(r) = exp{(r/2)(a^2 - a^dag^2)}. With this sign S^dag a S = a cosh r - a^dag sinh r,
/// so S(r)|0> has <q^2> = e^{-2r} (q squeezed for r > 0); tests pin this down.
inline FockOperator squeeze(double r, int dim, double tail_tol = 1e-8) {
    const double tail = detail::squeezed_tail(r, dim);
    if (tail > tail_tol)
        throw TruncationError("squeeze: tail weight " + std::to_string(tail) +
                              " at dim " + std::to_string(dim) + "; increase dim");
    const CMat a = annihilation(dim).m;
    const CMat a2 = a * a;
    return {dim, matrix_exponential(0.5 * r * (a2 - a2.adjoint()))};
}

inline CVec displaced_squeezed_vector(Complex beta, double r, int dim) {
    CVec v = squeeze(r, dim).m.col(0);
    return displacement(beta, dim).m * v;
}

/// Thermal state, p_n = N^n/(N+1)^{n+1}, renormalised on the truncated space.
inline FockDensity thermal_density(double n_photons, int dim, double tail_tol = 1e-10) {
    if (!(n_photons >= 0.0)) throw std::invalid_argument("thermal_density: n_photons must be >= 0");
    if (n_photons > 0.0) {
        const double ratio = n_photons / (n_photons + 1.0);
        const double tail = std::pow(ratio, dim);
        if (tail > tail_tol) {
            const int needed = static_cast<int>(std::ceil(std::log(tail_tol) / std::log(ratio)));
            throw TruncationError("thermal_density: tail weight " + std::to_string(tail) +
                                  " at dim " + std::to_string(dim) + "; need dim >= " +
                                  std::to_string(needed));
        }
    }
    FockDensity rho{dim, CMat::Zero(dim, dim)};
    double w = 1.0 / (n_photons + 1.0), sum = 0.0;
    for (int n = 0; n < dim; ++n) {
        rho.m(n, n) = w;
        sum += w;
        w *= n_photons / (n_photons + 1.0);
    }
    rho.m /= sum;
    return rho;
}

inline Complex trace_product(const CMat& a, const CMat& b) {
    return (a * b).trace();
}

/// <O> for Hermitian O (real part of the trace).
inline double expectation(const FockOperator& op, const FockDensity& rho) {
    if (op.dim != rho.dim) throw std::invalid_argument("expectation: dimension mismatch");
    return trace_product(op.m, rho.m).real();
}

inline double husimi_q(const FockDensity& rho, Complex alpha) {
    const CVec v = coherent_vector(alpha, rho.dim);
    return (v.adjoint() * rho.m * v)(0).real() / M_PI;
}

namespace detail {
inline CMat pad_to(const CMat& m, int dim) {
    if (m.rows() == dim) return m;
    CMat out = CMat::Zero(dim, dim);
    out.topLeftCorner(m.rows(), m.cols()) = m;
    return out;
}
}  // namespace detail

/// Half trace norm of the difference; states of different dim are compared by
/// zero-padding to the larger space.
inline double trace_distance(const FockDensity& a, const FockDensity& b) {
    const int dim = std::max(a.dim, b.dim);
    const CMat diff = detail::pad_to(a.m, dim) - detail::pad_to(b.m, dim);
    Eigen::SelfAdjointEigenSolver<CMat> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; reduces to
/// |<psi|phi>|^2 for pure states.
inline double fidelity(const FockDensity& a, const FockDensity& b) {
    const int dim = std::max(a.dim, b.dim);
    const CMat am = detail::pad_to(a.m, dim), bm = detail::pad_to(b.m, dim);
    Eigen::SelfAdjointEigenSolver<CMat> es(am);
    CVec clipped = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<Complex>();
    const CMat sqrt_a = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> es2(sqrt_a * bm * sqrt_a);
    const double tr = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return tr * tr;
}

inline double purity(const FockDensity& rho) {
    return trace_product(rho.m, rho.m).real();
}

inline FockDensity pure_density(const CVec& psi) {
    CVec v = psi / psi.norm();
    return {static_cast<int>(v.size()), v * v.adjoint()};
}

// ---------------------------------------------------------------------------
// Two-mode pure states, stored as a D x D coefficient matrix psi(i,j) with i
// the system index and j the ancilla index. Entangling unitaries act
// matrix-free (index shifts + scaled Taylor), so no D^2 x D^2 matrix is built.
// ---------------------------------------------------------------------------
namespace twomode {

/// exp{s(a^dag v^dag - a v)}|00>: amplitudes tanh^n(s)/cosh(s) on |n,n>.
/// Same state family as make_two_mode_squeezed (covariance cosh/sinh of 2s).
inline CMat squeezed_vacuum(double s, int dim) {
    CMat psi = CMat::Zero(dim, dim);
    double amp = 1.0 / std::cosh(s);
    for (int n = 0; n < dim; ++n) {
        psi(n, n) = amp;
        amp *= std::tanh(s);
    }
    return psi;
}

namespace detail {
// K psi with K = a^dag v - a v^dag.
inline CMat bs_generator_apply(const CMat& psi) {
    const int dim = static_cast<int>(psi.rows());
    CMat out = CMat::Zero(dim, dim);
    for (int i = 1; i < dim; ++i)
        for (int j = 0; j + 1 < dim; ++j)
            out(i, j) += std::sqrt(static_cast<double>(i) * (j + 1)) * psi(i - 1, j + 1);
    for (int i = 0; i + 1 < dim; ++i)
        for (int j = 1; j < dim; ++j)
            out(i, j) -= std::sqrt(static_cast<double>(i + 1) * j) * psi(i + 1, j - 1);
    return out;
}
}  // namespace detail

/// Applies exp{phi (a^dag v - a v^dag)} by scaled Taylor series.
inline CMat apply_beam_splitter(const CMat& psi, double phi) {
    const int dim = static_cast<int>(psi.rows());
    const int n_sub = std::max(1, static_cast<int>(std::ceil(std::abs(phi) * dim / 4.0)));
    const double step = phi / n_sub;
    CMat state = psi;
    for (int s = 0; s < n_sub; ++s) {
        CMat term = state, acc = state;
        for (int k = 1; k < 80; ++k) {
            term = (step / k) * detail::bs_generator_apply(term);
            acc += term;
            if (term.cwiseAbs().maxCoeff() < 1e-18 * std::max(1.0, acc.cwiseAbs().maxCoeff())) break;
        }
        state = acc;
    }
    return state;
}

/// Applies a single-mode operator to the system (mode 0) or ancilla (mode 1).
inline CMat apply_local(const CMat& psi, const CMat& op, int mode) {
    if (mode == 0) return op * psi;
    return psi * op.transpose();
}

/// <0_v|psi>, unnormalised.
inline CVec project_ancilla_vacuum(const CMat& psi) { return psi.col(0); }

}  // namespace twomode

}  // namespace gendyne
