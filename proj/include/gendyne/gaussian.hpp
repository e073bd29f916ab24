// Phase-space representation of Gaussian states and the symplectic /
// conditioning algebra.
//
// Conventions used across the whole library:
//   q = a + a^dag,  p = -i(a - a^dag),  [q,p] = 2i.
//   mean  = (<q_1>,<p_1>,...),  cov_ij = <{dr_i, dr_j}>/2.
//   Vacuum covariance = identity; thermal(N) covariance = (2N+1) I.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include "gendyne/common.hpp"

namespace gendyne {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symplectic form matching [q,p] = 2i: blocks [[0,2],[-2,0]] per mode.
inline Mat symplectic_form(int n_modes) {
    Mat omega = Mat::Zero(2 * n_modes, 2 * n_modes);
    for (int m = 0; m < n_modes; ++m) {
        omega(2 * m, 2 * m + 1) = 2.0;
        omega(2 * m + 1, 2 * m) = -2.0;
    }
    return omega;
}

struct GaussianState {
    Vec mean;  // length 2n, order q1,p1,q2,p2,...
    Mat cov;   // 2n x 2n symmetric

    int n_modes() const { return static_cast<int>(mean.size()) / 2; }

    /// Checks symmetry of cov and the uncertainty relation cov + i*Omega/2 >= 0
    /// (saturated by the vacuum in this convention). Tolerances are relative to
    /// the covariance scale so that strongly squeezed states remain checkable.
    void validate(double sym_tol = 1e-12, double psd_tol = 1e-9) const {
        if (cov.rows() != mean.size() || cov.cols() != mean.size() || mean.size() % 2 != 0)
            throw std::invalid_argument("GaussianState: inconsistent mean/cov dimensions");
        const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
            throw std::invalid_argument("GaussianState: covariance not symmetric");
        Eigen::MatrixXcd m = cov.cast<Complex>() +
                             Complex(0, 0.5) * symplectic_form(n_modes()).cast<Complex>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -psd_tol * scale)
            throw std::invalid_argument("GaussianState: cov + i*Omega/2 has eigenvalue " +
                                        std::to_string(es.eigenvalues().minCoeff()));
    }
};

struct SymplecticMap {
    Mat matrix;        // 2n x 2n
    Vec displacement;  // length 2n

    int n_modes() const { return static_cast<int>(displacement.size()) / 2; }

    /// || S Omega S^T - Omega ||_max
    double symplectic_defect() const {
        const Mat omega = symplectic_form(n_modes());
        return (matrix * omega * matrix.transpose() - omega).cwiseAbs().maxCoeff();
    }
};

inline GaussianState make_vacuum(int n_modes = 1) {
    return {Vec::Zero(2 * n_modes), Mat::Identity(2 * n_modes, 2 * n_modes)};
}

inline GaussianState make_thermal(double n_photons) {
    if (!(n_photons >= 0.0))
        throw std::invalid_argument("make_thermal: n_photons must be >= 0");
    GaussianState st = make_vacuum(1);
    st.cov *= (2.0 * n_photons + 1.0);
    return st;
}

inline GaussianState make_coherent(Complex alpha) {
    GaussianState st = make_vacuum(1);
    st.mean(0) = 2.0 * alpha.real();
    st.mean(1) = 2.0 * alpha.imag();
    return st;
}

/// Two-mode squeezed vacuum: diagonal blocks cosh(2s) I, off-diagonal
/// sinh(2s) sigma_z. Equals exp{s(a^dag v^dag - a v)} applied to two vacua.
inline GaussianState make_two_mode_squeezed(double s) {
    if (!std::isfinite(s)) throw std::invalid_argument("make_two_mode_squeezed: s not finite");
    GaussianState st = make_vacuum(2);
    const double c = std::cosh(2.0 * s), sn = std::sinh(2.0 * s);
    st.cov.diagonal().setConstant(c);
    st.cov(0, 2) = st.cov(2, 0) = sn;
    st.cov(1, 3) = st.cov(3, 1) = -sn;
    return st;
}

inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
    const int na = static_cast<int>(a.mean.size()), nb = static_cast<int>(b.mean.size());
    GaussianState out;
    out.mean = Vec::Zero(na + nb);
    out.mean.head(na) = a.mean;
    out.mean.tail(nb) = b.mean;
    out.cov = Mat::Zero(na + nb, na + nb);
    out.cov.topLeftCorner(na, na) = a.cov;
    out.cov.bottomRightCorner(nb, nb) = b.cov;
    return out;
}

/// Beam-splitter symplectic S_phi = [[cos phi I2, -sin phi I2],[sin phi I2, cos phi I2]].
inline SymplecticMap beam_splitter(double phi) {
    SymplecticMap map{Mat::Zero(4, 4), Vec::Zero(4)};
    const double c = std::cos(phi), s = std::sin(phi);
    map.matrix.topLeftCorner(2, 2) = c * Mat::Identity(2, 2);
    map.matrix.topRightCorner(2, 2) = -s * Mat::Identity(2, 2);
    map.matrix.bottomLeftCorner(2, 2) = s * Mat::Identity(2, 2);
    map.matrix.bottomRightCorner(2, 2) = c * Mat::Identity(2, 2);
    return map;
}

/// Single-mode phase rotation.
inline SymplecticMap phase_rotation(double phi) {
    SymplecticMap map{Mat(2, 2), Vec::Zero(2)};
    map.matrix << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return map;
}

/// Single-mode squeeze S(r) = exp{(r/2)(a^2 - a^dag^2)}: q -> e^{-r} q, p -> e^{r} p.
inline SymplecticMap squeeze_map(double r) {
    SymplecticMap map{Mat::Zero(2, 2), Vec::Zero(2)};
    map.matrix(0, 0) = std::exp(-r);
    map.matrix(1, 1) = std::exp(r);
    return map;
}

/// Displacement D(z): mean shift (2 Re z, 2 Im z) in this convention.
inline SymplecticMap displacement_map(Complex z) {
    SymplecticMap map{Mat::Identity(2, 2), Vec::Zero(2)};
    map.displacement(0) = 2.0 * z.real();
    map.displacement(1) = 2.0 * z.imag();
    return map;
}

/// Two-mode squeezer exp{s(a^dag v^dag - a v)} as a state map.
inline SymplecticMap two_mode_squeeze_map(double s) {
    SymplecticMap map{Mat::Zero(4, 4), Vec::Zero(4)};
    const double ch = std::cosh(s), sh = std::sinh(s);
    Mat z = Mat::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    map.matrix.topLeftCorner(2, 2) = ch * Mat::Identity(2, 2);
    map.matrix.bottomRightCorner(2, 2) = ch * Mat::Identity(2, 2);
    map.matrix.topRightCorner(2, 2) = sh * z;
    map.matrix.bottomLeftCorner(2, 2) = sh * z;
    return map;
}

inline GaussianState apply(const SymplecticMap& map, const GaussianState& state) {
    if (map.matrix.rows() != state.mean.size())
        throw std::invalid_argument("apply: map acts on " + std::to_string(map.matrix.rows() / 2) +
                                    " modes, state has " + std::to_string(state.n_modes()));
    return {map.matrix * state.mean + map.displacement,
            map.matrix * state.cov * map.matrix.transpose()};
}

/// Projects one mode of a two-mode Gaussian state onto the vacuum and returns
/// the conditioned single-mode state:
///   X_out = X_keep - C (B + I)^{-1} X_proj,  sigma_out = A - C (B + I)^{-1} C^T,
/// where A is the kept block, B the projected block, C the cross block.
inline GaussianState condition_on_vacuum_projection(const GaussianState& state, int projected_mode) {
    if (state.n_modes() != 2)
        throw std::invalid_argument("condition_on_vacuum_projection: need a two-mode state");
    if (projected_mode != 0 && projected_mode != 1)
        throw std::invalid_argument("condition_on_vacuum_projection: projected_mode must be 0 or 1");
    const int keep = 1 - projected_mode;
    const Mat a = state.cov.block(2 * keep, 2 * keep, 2, 2);
    const Mat b = state.cov.block(2 * projected_mode, 2 * projected_mode, 2, 2);
    const Mat c = state.cov.block(2 * keep, 2 * projected_mode, 2, 2);
    const Vec x_keep = state.mean.segment(2 * keep, 2);
    const Vec x_proj = state.mean.segment(2 * projected_mode, 2);

    const Mat bp = b + Mat::Identity(2, 2);
    Eigen::JacobiSVD<Mat> svd(bp, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12) {
        std::ostringstream msg;
        msg << "condition_on_vacuum_projection: B + I near-singular, condition number "
            << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity());
        throw NumericalError(msg.str());
    }
    const Mat binv = svd.solve(Mat::Identity(2, 2));
    GaussianState out;
    out.mean = x_keep - c * (binv * x_proj);
    out.cov = a - c * binv * c.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

enum class Quad { q, p };

/// Samples the marginal of one quadrature: mean entry + sqrt(diag cov) * N(0,1).
inline double sample_gaussian_outcome(const GaussianState& state, int mode, Quad which, RngStream& rng) {
    const int idx = 2 * mode + (which == Quad::q ? 0 : 1);
    if (idx < 0 || idx >= state.mean.size())
        throw std::invalid_argument("sample_gaussian_outcome: mode out of range");
    return state.mean(idx) + std::sqrt(state.cov(idx, idx)) * rng.gaussian();
}

/// Symplectic eigenvalues (Williamson spectrum), one per mode, ascending.
/// Computed as the paired singular values of the antisymmetric matrix
/// sqrt(cov) Omega0 sqrt(cov), Omega0 = Omega/2; this stays accurate for
/// strongly squeezed covariances where eig(i Omega0 cov) does not.
/// Pure states have all values equal to 1; physical states have values >= 1.
namespace detail {
inline Vec paired_singular_values(const Mat& k) {
    const int n = static_cast<int>(k.rows()) / 2;
    Eigen::JacobiSVD<Mat> svd(k);
    Vec all = svd.singularValues();
    std::sort(all.data(), all.data() + all.size());
    Vec out(n);
    for (int m = 0; m < n; ++m) out(m) = 0.5 * (all(2 * m) + all(2 * m + 1));
    return out;
}
}  // namespace detail

inline Vec symplectic_eigenvalues(const Mat& cov) {
    const int n = static_cast<int>(cov.rows()) / 2;
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw NumericalError("symplectic_eigenvalues: covariance not positive semidefinite");
    const Mat sqrt_cov = es.eigenvectors() *
                         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                         es.eigenvectors().transpose();
    return detail::paired_singular_values(sqrt_cov * (0.5 * symplectic_form(n)) * sqrt_cov);
}

/// Symplectic eigenvalues of cov = F F^T given the factor F. For covariances
/// assembled from exact symplectic factors this avoids the precision loss of
/// eigendecomposing an exponentially ill-conditioned matrix.
inline Vec symplectic_eigenvalues_from_factor(const Mat& factor) {
    const int n = static_cast<int>(factor.rows()) / 2;
    return detail::paired_singular_values(factor.transpose() * (0.5 * symplectic_form(n)) * factor);
}

inline double purity(const GaussianState& state) {
    return 1.0 / std::sqrt(state.cov.determinant());
}

/// |<psi1|psi2>|^2 for two pure Gaussian states (also Tr[rho1 rho2] in general).
inline double gaussian_overlap(const GaussianState& a, const GaussianState& b) {
    if (a.mean.size() != b.mean.size())
        throw std::invalid_argument("gaussian_overlap: dimension mismatch");
    const Mat sum = a.cov + b.cov;
    const Vec d = a.mean - b.mean;
    const double n = static_cast<double>(a.n_modes());
    Eigen::LLT<Mat> llt(sum);
    if (llt.info() != Eigen::Success)
        throw NumericalError("gaussian_overlap: covariance sum not positive definite");
    const Vec y = llt.solve(d);
    return std::pow(2.0, n) / std::sqrt(sum.determinant()) * std::exp(-0.5 * d.dot(y));
}

}  // namespace gendyne
