// Physical realisation of general-dyne detection: an unbalanced beam splitter
// of transmissivity T = (1+Upsilon)/2 followed by homodyne detection of q on
// the transmitted arm and p on the reflected arm. Raw outcomes z are rescaled
// by sqrt(1 +/- Upsilon) into the general-dyne outcome theta.
//
// Sign conventions fixed by the eigen-residual on the Fock oracle (see the
// convention tests): the eigenstate is D(beta) S(r)|0> with
// r = log sqrt(T/(1-T)), i.e. tanh r = Upsilon; the finite-squeezing pipeline
// uses the beam-splitter map S_{-phit} and ancilla displacement D(-z sin phit).
#pragma once

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "gendyne/common.hpp"
#include "gendyne/fock.hpp"
#include "gendyne/gaussian.hpp"
#include "gendyne/povm.hpp"

namespace gendyne {

/// T_Upsilon = cos^2 phi_Upsilon = (1+Upsilon)/2.
inline double transmissivity_for(double upsilon) {
    if (!(upsilon >= -1.0 && upsilon <= 1.0))
        throw std::invalid_argument("transmissivity_for: upsilon must lie in [-1,1]");
    return 0.5 * (1.0 + upsilon);
}

/// Displaced-squeezed parameterisation of the scheme eigenstate.
struct SchemeEigenstate {
    Complex beta;
    double r = 0.0;
    double upsilon = 0.0;
    Complex z;

    Complex theta() const { return beta + upsilon * std::conj(beta); }
};

/// For raw outcomes z = (z1, z2) at transmissivity T:
///   beta = z1/sqrt(2T) + i z2/sqrt(2(1-T)),  r = log sqrt(T/(1-T)),
///   theta = beta + U beta* = z1 sqrt(1+U) + i z2 sqrt(1-U).
inline SchemeEigenstate eigenstate_params(Complex z, double transmissivity) {
    const double t = transmissivity;
    if (!(t > 0.0 && t < 1.0))
        throw HomodyneLimitError("eigenstate_params: T in {0,1} is the homodyne limit");
    SchemeEigenstate st;
    st.upsilon = 2.0 * t - 1.0;
    st.z = z;
    st.beta = Complex(z.real() / std::sqrt(2.0 * t), z.imag() / std::sqrt(2.0 * (1.0 - t)));
    st.r = std::log(std::sqrt(t / (1.0 - t)));
    return st;
}

inline Complex outcome_to_raw(Complex theta, double upsilon) {
    return {theta.real() / std::sqrt(1.0 + upsilon), theta.imag() / std::sqrt(1.0 - upsilon)};
}

/// Analytic (infinite-squeezing) eigenstate as a Gaussian state:
/// mean (sqrt2 z1/sqrt T, sqrt2 z2/sqrt(1-T)), cov diag((1-T)/T, T/(1-T)).
inline GaussianState scheme_eigenstate_gaussian(Complex z, double transmissivity) {
    const double t = transmissivity;
    if (!(t > 0.0 && t < 1.0))
        throw HomodyneLimitError("scheme_eigenstate_gaussian: T in {0,1}");
    GaussianState st = make_vacuum(1);
    st.mean(0) = std::sqrt(2.0) * z.real() / std::sqrt(t);
    st.mean(1) = std::sqrt(2.0) * z.imag() / std::sqrt(1.0 - t);
    st.cov(0, 0) = (1.0 - t) / t;
    st.cov(1, 1) = t / (1.0 - t);
    return st;
}

/// Finite-squeezing verification pipeline: two-mode squeezed vacuum ->
/// beam splitter -> displacements -> vacuum conditioning of the ancilla.
inline GaussianState pipeline_conditioned_gaussian(Complex z, double transmissivity, double s) {
    const double t = transmissivity;
    if (!(t > 0.0 && t < 1.0))
        throw HomodyneLimitError("pipeline_conditioned_gaussian: T in {0,1}");
    const double phi = std::acos(std::sqrt(t));
    const double phit = phi - M_PI / 4.0;
    GaussianState st = make_two_mode_squeezed(s);
    st = apply(beam_splitter(-phit), st);
    const Complex da = z * std::cos(phit);
    const Complex dv = -z * std::sin(phit);
    st.mean(0) += 2.0 * da.real();
    st.mean(1) += 2.0 * da.imag();
    st.mean(2) += 2.0 * dv.real();
    st.mean(3) += 2.0 * dv.imag();
    return condition_on_vacuum_projection(st, 1);
}

/// Samples one general-dyne outcome from the double-homodyne scheme: input
/// tensored with vacuum, beam splitter applied, the commuting pair
/// (q_{a'}, p_{v'}) sampled jointly, outcomes rescaled by sqrt(1 +/- Upsilon).
/// Raw homodyne samples are in z-units (quadrature/sqrt 2), so a thermal input
/// yields covariance diag(L1, L2).
inline GendyneOutcome scheme_outcome_sample(const GaussianState& input, double upsilon,
                                            RngStream& rng) {
    if (input.n_modes() != 1)
        throw std::invalid_argument("scheme_outcome_sample: input must be single-mode");
    if (!(upsilon >= -1.0 && upsilon <= 1.0))
        throw std::invalid_argument("scheme_outcome_sample: upsilon must lie in [-1,1]");
    const double t = transmissivity_for(upsilon);
    const double phi = std::acos(std::sqrt(t));
    GaussianState joint = apply(beam_splitter(phi), tensor(input, make_vacuum(1)));

    // Joint classical Gaussian of (q of mode a', p of mode v') in z-units.
    const double m1 = joint.mean(0) / std::sqrt(2.0);
    const double m2 = joint.mean(3) / std::sqrt(2.0);
    const double v11 = joint.cov(0, 0) / 2.0;
    const double v22 = joint.cov(3, 3) / 2.0;
    const double v12 = joint.cov(0, 3) / 2.0;
    const double l11 = std::sqrt(v11);
    const double l21 = v12 / l11;
    const double l22 = std::sqrt(std::max(0.0, v22 - l21 * l21));
    const double g1 = rng.gaussian(), g2 = rng.gaussian();
    const double z1 = m1 + l11 * g1;
    const double z2 = m2 + l21 * g1 + l22 * g2;
    return {std::sqrt(1.0 + upsilon) * z1, std::sqrt(1.0 - upsilon) * z2};
}

/// Cross-check of the three eigenstate constructions: the finite-s pipeline
/// (extrapolated in s), the direct D(beta)S(r)|0> vector, and the POVM
/// quadrature eigenvector. Overlaps are |<.|.>|^2 between unit vectors.
struct SchemeCrosscheck {
    std::vector<double> s_grid;
    std::vector<double> pipeline_overlaps;   // vs D(beta)S(r)|0>, per s
    double overlap_pipeline_direct = 0.0;    // at the largest s
    double overlap_direct_povm = 0.0;
    double overlap_pipeline_povm = 0.0;

    double min_overlap() const {
        return std::min({overlap_pipeline_direct, overlap_direct_povm, overlap_pipeline_povm});
    }
};

namespace detail {
/// Fock vector of a pure single-mode Gaussian state with diagonal covariance.
/// The purity tolerance accommodates the roundoff floor of conditioning
/// pipelines built from cosh(2s)-sized covariances.
inline CVec gaussian_to_fock(const GaussianState& st, int dim) {
    const double det = st.cov.determinant();
    if (std::abs(det - 1.0) > 1e-4)
        throw NumericalError("gaussian_to_fock: state not pure, det cov = " + std::to_string(det));
    if (std::abs(st.cov(0, 1)) > 1e-10)
        throw NumericalError("gaussian_to_fock: need diagonal covariance");
    const double r = -0.5 * std::log(st.cov(0, 0));
    const Complex beta(0.5 * st.mean(0), 0.5 * st.mean(1));
    return displaced_squeezed_vector(beta, r, dim);
}
}  // namespace detail

inline SchemeCrosscheck scheme_povm_crosscheck(double upsilon, Complex theta, int dim,
                                               std::vector<double> s_grid = {2.0, 4.0, 8.0, 12.0}) {
    detail::require_admissible(upsilon, "scheme_povm_crosscheck");
    const double t = transmissivity_for(upsilon);
    const Complex z = outcome_to_raw(theta, upsilon);

    const SchemeEigenstate params = eigenstate_params(z, t);
    CVec direct = displaced_squeezed_vector(params.beta, params.r, dim);
    direct /= direct.norm();

    const CVec povm = povm_eigenvector({theta.real(), theta.imag()}, upsilon, dim).normalized();

    SchemeCrosscheck out;
    out.s_grid = s_grid;
    CVec pipeline;
    for (double s : s_grid) {
        const GaussianState cond = pipeline_conditioned_gaussian(z, t, s);
        pipeline = detail::gaussian_to_fock(cond, dim);
        pipeline /= pipeline.norm();
        out.pipeline_overlaps.push_back(std::norm(Complex((direct.adjoint() * pipeline)(0))));
    }
    const size_t last = out.pipeline_overlaps.size() - 1;
    if (out.pipeline_overlaps.size() >= 2) {
        const double delta = std::abs(out.pipeline_overlaps[last] - out.pipeline_overlaps[last - 1]);
        if (delta > 1e-6) {
            std::ostringstream msg;
            msg << "scheme_povm_crosscheck: pipeline not converged in s; overlaps:";
            for (size_t i = 0; i < s_grid.size(); ++i)
                msg << " s=" << s_grid[i] << " -> " << out.pipeline_overlaps[i];
            throw NumericalError(msg.str());
        }
    }
    out.overlap_pipeline_direct = out.pipeline_overlaps[last];
    out.overlap_direct_povm = std::norm(Complex((direct.adjoint() * povm)(0)));
    out.overlap_pipeline_povm = std::norm(Complex((pipeline.adjoint() * povm)(0)));
    return out;
}

}  // namespace gendyne
