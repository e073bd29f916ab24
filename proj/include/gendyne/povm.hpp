// General-dyne observable Theta = a + Upsilon a^dag: eigenfunctions, POVM
// elements in a truncated Fock basis, and outcome statistics.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "gendyne/common.hpp"
#include "gendyne/fock.hpp"
#include "gendyne/gaussian.hpp"

namespace gendyne {

inline constexpr double kHomodyneEps = 1e-6;

/// The unravelling parameter pair (Upsilon, N) and its derived quantities.
/// L_{1/2} = (1 +/- Upsilon)(1 + N(1 +/- Upsilon))/2 are the outcome variances
/// for a thermal bath; T = (1+Upsilon)/2 is the beam-splitter transmissivity
/// realising the measurement.
struct Unravelling {
    double upsilon = 0.0;
    double n_bath = 0.0;

    Unravelling(double upsilon_, double n_bath_) : upsilon(upsilon_), n_bath(n_bath_) {
        if (!(upsilon >= -1.0 && upsilon <= 1.0))
            throw std::invalid_argument("Unravelling: upsilon must lie in [-1,1]");
        if (!(n_bath >= 0.0))
            throw std::invalid_argument("Unravelling: n_bath must be >= 0");
    }

    double l1() const { return 0.5 * (1.0 + upsilon) * (1.0 + n_bath * (1.0 + upsilon)); }
    double l2() const { return 0.5 * (1.0 - upsilon) * (1.0 + n_bath * (1.0 - upsilon)); }
    double transmissivity() const { return 0.5 * (1.0 + upsilon); }

    // Channel j carries weight (1 +/- Upsilon)/2; a channel with zero weight is
    // skipped entirely (homodyne limits).
    bool channel1_active() const { return upsilon > -1.0; }
    bool channel2_active() const { return upsilon < 1.0; }
};

struct GendyneOutcome {
    double theta1 = 0.0;
    double theta2 = 0.0;
    Complex value() const { return {theta1, theta2}; }
};

namespace detail {
inline void require_admissible(double upsilon, const char* who) {
    if (std::abs(upsilon) > 1.0 - kHomodyneEps)
        throw HomodyneLimitError(std::string(who) +
                                 ": |upsilon| too close to 1, use the homodyne branch");
}
}  // namespace detail

/// psi(x) = <x|theta>: the normalised solution of
///   (1/2)[(1+U)x + 2(1-U) d/dx] psi = theta psi,
/// a Gaussian of variance (1-U)/(1+U) centred at 2 theta1/(1+U) carrying a
/// plane-wave phase theta2 x/(1-U).
inline Complex eigen_wavefunction(double x, const GendyneOutcome& theta, double upsilon) {
    detail::require_admissible(upsilon, "eigen_wavefunction");
    const double u = upsilon;
    const double pref = std::pow((1.0 + u) / (2.0 * M_PI * (1.0 - u)), 0.25);
    const double g = std::sqrt((1.0 + u) / (2.0 * (1.0 - u))) * x -
                     std::sqrt(2.0 / (1.0 - u * u)) * theta.theta1;
    const double phase = theta.theta2 * x / (1.0 - u);
    return pref * std::exp(Complex(-0.5 * g * g, phase));
}

/// Harmonic-oscillator eigenfunctions in the [q,p]=2i convention:
/// phi_n(x) = (2 pi)^{-1/4} H_n(x/sqrt 2) e^{-x^2/4} / sqrt(2^n n!).
/// Fills phi_0..phi_{nmax-1} at one point via the stable recurrence
/// phi_{n+1} = x phi_n / sqrt(n+1) - sqrt(n/(n+1)) phi_{n-1}.
inline void oscillator_eigenfunctions(double x, int nmax, double* out) {
    out[0] = std::pow(2.0 * M_PI, -0.25) * std::exp(-0.25 * x * x);
    if (nmax > 1) out[1] = x * out[0];
    for (int n = 1; n + 1 < nmax; ++n)
        out[n + 1] = (x * out[n] - std::sqrt(static_cast<double>(n)) * out[n - 1]) /
                     std::sqrt(static_cast<double>(n + 1));
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration, cached per order.
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int order) {
    static std::mutex mtx;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    std::vector<double> x(order), w(order);
    for (int i = 0; i < (order + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        w[i] = w[order - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return cache.emplace(order, std::make_pair(std::move(x), std::move(w))).first->second;
}

inline CVec eigenvector_quadrature(const GendyneOutcome& theta, double upsilon, int dim, int order) {
    const double sigma = std::sqrt((1.0 - upsilon) / (1.0 + upsilon));
    const double center = 2.0 * theta.theta1 / (1.0 + upsilon);
    const double half_width = 14.0 * sigma + 2.0;
    const auto& [nodes, weights] = gauss_legendre(order);
    CVec amps = CVec::Zero(dim);
    std::vector<double> phi(dim);
    for (int k = 0; k < order; ++k) {
        const double x = center + half_width * nodes[k];
        const Complex psi = eigen_wavefunction(x, theta, upsilon) * (half_width * weights[k]);
        oscillator_eigenfunctions(x, dim, phi.data());
        for (int n = 0; n < dim; ++n) amps(n) += phi[n] * psi;
    }
    return amps;
}

}  // namespace detail

/// ||(a + U a^dag - theta) v|| / ||v|| on the truncated space.
inline double eigen_residual(const CVec& v, Complex theta, double upsilon) {
    const int dim = static_cast<int>(v.size());
    CVec r = CVec::Zero(dim);
    for (int n = 0; n < dim; ++n) {
        Complex acc = -theta * v(n);
        if (n + 1 < dim) acc += std::sqrt(static_cast<double>(n + 1)) * v(n + 1);
        if (n >= 1) acc += upsilon * std::sqrt(static_cast<double>(n)) * v(n - 1);
        r(n) = acc;
    }
    return r.norm() / v.norm();
}

/// Fock amplitudes <n|theta> of the unit-norm eigenfunction, obtained by
/// quadrature of psi(x) against the oscillator eigenfunctions. The quadrature
/// order is doubled until the amplitudes stabilise. The returned vector is the
/// truncation of a unit vector (its norm approaches 1 from below).
inline CVec povm_eigenvector(const GendyneOutcome& theta, double upsilon, int dim) {
    detail::require_admissible(upsilon, "povm_eigenvector");
    CVec prev;
    for (int order = 128; order <= 8192; order *= 2) {
        CVec cur = detail::eigenvector_quadrature(theta, upsilon, dim, order);
        if (prev.size() > 0 && (cur - prev).cwiseAbs().maxCoeff() < 1e-13) return cur;
        prev = std::move(cur);
    }
    throw NumericalError("povm_eigenvector: quadrature did not converge");
}

/// POVM element dPi(theta) = weight |theta><theta| d theta1 d theta2.
struct PovmElement {
    CVec amplitudes;  // truncated <n|theta>, unit-norm eigenfunction
    double weight = 0.0;

    CMat projector() const { return amplitudes * amplitudes.adjoint(); }
    CVec normalized() const { return amplitudes / amplitudes.norm(); }
};

inline PovmElement povm_element(const GendyneOutcome& theta, double upsilon, int dim) {
    detail::require_admissible(upsilon, "povm_element");
    return {povm_eigenvector(theta, upsilon, dim), 1.0 / (M_PI * (1.0 - upsilon * upsilon))};
}

/// Outcome density p(theta) = weight <theta|rho|theta> for an arbitrary bath
/// state on the truncated space.
class GendyneDistribution {
public:
    GendyneDistribution(FockDensity rho, double upsilon) : rho_(std::move(rho)), upsilon_(upsilon) {
        detail::require_admissible(upsilon, "outcome_distribution");
    }

    double operator()(double theta1, double theta2) const {
        const PovmElement el = povm_element({theta1, theta2}, upsilon_, rho_.dim);
        const Complex v = el.amplitudes.adjoint() * rho_.m * el.amplitudes;
        return el.weight * v.real();
    }

    double upsilon() const { return upsilon_; }

private:
    FockDensity rho_;
    double upsilon_;
};

inline GendyneDistribution outcome_distribution(const FockDensity& rho_bath, double upsilon) {
    return GendyneDistribution(rho_bath, upsilon);
}

/// The pure Gaussian state |theta>: covariance diag((1-U)/(1+U), (1+U)/(1-U)),
/// mean (2 theta1/(1+U), 2 theta2/(1-U)). Read off psi(x).
inline GaussianState eigenstate_gaussian(const GendyneOutcome& theta, double upsilon) {
    detail::require_admissible(upsilon, "eigenstate_gaussian");
    GaussianState st = make_vacuum(1);
    st.cov(0, 0) = (1.0 - upsilon) / (1.0 + upsilon);
    st.cov(1, 1) = (1.0 + upsilon) / (1.0 - upsilon);
    st.mean(0) = 2.0 * theta.theta1 / (1.0 + upsilon);
    st.mean(1) = 2.0 * theta.theta2 / (1.0 - upsilon);
    return st;
}

/// Covariance of p(theta) for a thermal bath, computed through Gaussian
/// overlap algebra (independent of the closed-form L expressions): the
/// exponent of weight * Tr[rho_N |theta><theta|] is -(1/2) (M t)^T S^{-1} (M t)
/// with S = cov_N + cov_eig and M = d(mean_eig)/d(theta), so Cov = M^{-1} S M^{-T}.
inline Eigen::Matrix2d thermal_outcome_covariance(const Unravelling& unr) {
    detail::require_admissible(unr.upsilon, "thermal_outcome_covariance");
    const GaussianState eig0 = eigenstate_gaussian({0.0, 0.0}, unr.upsilon);
    const Eigen::Matrix2d sum = make_thermal(unr.n_bath).cov + eig0.cov;
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    m(0, 0) = 2.0 / (1.0 + unr.upsilon);
    m(1, 1) = 2.0 / (1.0 - unr.upsilon);
    const Eigen::Matrix2d minv = m.inverse();
    return minv * sum * minv.transpose();
}

/// Upsilon = +/-1 limit: 1-D Gaussian law for the measured quadrature of a
/// thermal state (variance 1+2N), with the conjugate outcome degenerate.
struct HomodyneLimitLaw {
    double variance = 1.0;
    bool theta2_degenerate = true;

    double operator()(double theta1) const {
        return std::exp(-0.5 * theta1 * theta1 / variance) / std::sqrt(2.0 * M_PI * variance);
    }
};

inline HomodyneLimitLaw homodyne_limit_distribution(double n_bath) {
    if (!(n_bath >= 0.0)) throw std::invalid_argument("homodyne_limit_distribution: n_bath >= 0");
    return {1.0 + 2.0 * n_bath, true};
}

/// Numeric check of int dPi(theta) = 1 on a truncated space: tensor
/// Gauss-Legendre grid over [-radius, radius]^2. Returns the max deviation
/// from the identity and the integrated matrix.
struct CompletenessAudit {
    double max_deviation = 0.0;
    CMat integral;
};

inline CompletenessAudit povm_completeness(double upsilon, int dim, double radius, int points_per_axis) {
    detail::require_admissible(upsilon, "povm_completeness");
    const auto& [nodes, weights] = detail::gauss_legendre(points_per_axis);
    CMat acc = CMat::Zero(dim, dim);
    const double weight = 1.0 / (M_PI * (1.0 - upsilon * upsilon));
    for (int i = 0; i < points_per_axis; ++i) {
        for (int j = 0; j < points_per_axis; ++j) {
            const GendyneOutcome th{radius * nodes[i], radius * nodes[j]};
            const CVec v = povm_eigenvector(th, upsilon, dim);
            acc.noalias() += (weight * radius * radius * weights[i] * weights[j]) * (v * v.adjoint());
        }
    }
    const double dev = (acc - CMat::Identity(dim, dim)).cwiseAbs().maxCoeff();
    return {dev, std::move(acc)};
}

}  // namespace gendyne
