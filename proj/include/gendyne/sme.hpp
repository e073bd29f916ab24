// Time evolution: unconditional Lindblad dynamics and the conditional
// general-dyne stochastic master equation
//
//   d rho = dt L rho + (1+U)/2 dw1/sqrt(L1) H[(N+1)c - N c^dag] rho
//                    + (1-U)/2 dw2/sqrt(L2) H[-i((N+1)c + N c^dag)] rho,
//
// with H[O] rho = O rho + rho O^dag - Tr[(O+O^dag) rho] rho, integrated by two
// engines: Euler-Maruyama on the truncated Fock space, and a Gaussian-moment
// fast path (linear SDE for the means, deterministic Riccati flow for the
// covariance) obtained from the same equation by Ito moment expansion.
// Damping rate is fixed to 1; time is in units of the inverse damping rate.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <thread>
#include <vector>

#include "gendyne/common.hpp"
#include "gendyne/fock.hpp"
#include "gendyne/gaussian.hpp"
#include "gendyne/povm.hpp"

namespace gendyne {

enum class Engine { fock, gaussian, both };

inline const char* engine_name(Engine e) {
    switch (e) {
        case Engine::fock: return "fock";
        case Engine::gaussian: return "gaussian";
        default: return "both";
    }
}

struct InitialState {
    enum class Kind { vacuum, coherent, thermal, fock, gaussian } kind = Kind::vacuum;
    Complex alpha;        // coherent amplitude
    double n_thermal = 0; // thermal occupation
    int n_fock = 0;       // Fock level
    Eigen::Vector2d g_mean = Eigen::Vector2d::Zero();  // general Gaussian
    Eigen::Matrix2d g_cov = Eigen::Matrix2d::Identity();

    static InitialState vacuum() { return {}; }
    static InitialState coherent(Complex a) { return {Kind::coherent, a, 0.0, 0}; }
    static InitialState thermal(double n) { return {Kind::thermal, {}, n, 0}; }
    static InitialState fock(int n) { return {Kind::fock, {}, 0.0, n}; }
    static InitialState gaussian(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
        InitialState st{Kind::gaussian, {}, 0.0, 0};
        st.g_mean = mean;
        st.g_cov = cov;
        return st;
    }

    FockDensity to_fock(int dim) const {
        switch (kind) {
            case Kind::vacuum: return pure_density(basis_vector(0, dim));
            case Kind::coherent: return pure_density(coherent_vector(alpha, dim));
            case Kind::thermal: return thermal_density(n_thermal, dim);
            case Kind::fock:
                if (n_fock >= dim) throw std::invalid_argument("InitialState: Fock level >= dim");
                return pure_density(basis_vector(n_fock, dim));
            case Kind::gaussian: {
                // displaced squeezed thermal: cov = diag(nu e^{-2r}, nu e^{2r})
                if (std::abs(g_cov(0, 1)) > 1e-12)
                    throw std::invalid_argument("InitialState: need diagonal Gaussian covariance");
                const double nu = std::sqrt(g_cov(0, 0) * g_cov(1, 1));
                if (nu < 1.0 - 1e-9) throw std::invalid_argument("InitialState: unphysical covariance");
                const double r = 0.5 * std::log(nu / g_cov(0, 0));
                const Complex beta(0.5 * g_mean(0), 0.5 * g_mean(1));
                const CMat u = displacement(beta, dim).m * squeeze(r, dim).m;
                const double n_eff = std::max(0.0, 0.5 * (nu - 1.0));
                FockDensity rho{dim, u * thermal_density(n_eff, dim).m * u.adjoint()};
                rho.hermitize();
                rho.normalize();
                return rho;
            }
        }
        throw std::invalid_argument("InitialState: bad kind");
    }

    GaussianState to_gaussian() const {
        switch (kind) {
            case Kind::vacuum: return make_vacuum(1);
            case Kind::coherent: return make_coherent(alpha);
            case Kind::thermal: return make_thermal(n_thermal);
            case Kind::fock:
                if (n_fock == 0) return make_vacuum(1);
                throw std::invalid_argument("InitialState: Fock state is not Gaussian");
            case Kind::gaussian: {
                GaussianState st = make_vacuum(1);
                st.mean = g_mean;
                st.cov = g_cov;
                st.validate();
                return st;
            }
        }
        throw std::invalid_argument("InitialState: bad kind");
    }
};

struct SmeConfig {
    Unravelling unravelling{0.0, 0.0};
    double dt = 1e-3;
    int n_steps = 1000;
    int dim = 40;
    std::uint64_t seed = 0;
    Engine engine = Engine::fock;
    InitialState init = InitialState::vacuum();
    int negativity_check_stride = 50;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SmeConfig: dt must be > 0");
        if (dt > 1e-2) throw std::invalid_argument("SmeConfig: dt above the 1e-2 policy cap");
        if (n_steps < 1) throw std::invalid_argument("SmeConfig: n_steps must be >= 1");
        if (dim < 2) throw std::invalid_argument("SmeConfig: dim must be >= 2");
    }
};

// ---------------------------------------------------------------------------
// Ladder-structured products: c and c^dag are single shifted diagonals, so all
// superoperator applications are O(dim^2).
// ---------------------------------------------------------------------------
namespace detail {

inline CMat ladder_left(const CMat& rho, Complex alpha, Complex beta) {  // (alpha c + beta c^dag) rho
    const int d = static_cast<int>(rho.rows());
    CMat out = CMat::Zero(d, d);
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            Complex acc = 0.0;
            if (m + 1 < d) acc += alpha * std::sqrt(static_cast<double>(m + 1)) * rho(m + 1, n);
            if (m >= 1) acc += beta * std::sqrt(static_cast<double>(m)) * rho(m - 1, n);
            out(m, n) = acc;
        }
    }
    return out;
}

inline CMat ladder_right(const CMat& rho, Complex alpha, Complex beta) {  // rho (alpha c + beta c^dag)
    const int d = static_cast<int>(rho.rows());
    CMat out = CMat::Zero(d, d);
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            Complex acc = 0.0;
            if (n >= 1) acc += alpha * std::sqrt(static_cast<double>(n)) * rho(m, n - 1);
            if (n + 1 < d) acc += beta * std::sqrt(static_cast<double>(n + 1)) * rho(m, n + 1);
            out(m, n) = acc;
        }
    }
    return out;
}

inline CMat sandwich_c(const CMat& rho) {  // c rho c^dag
    const int d = static_cast<int>(rho.rows());
    CMat out = CMat::Zero(d, d);
    for (int n = 0; n + 1 < d; ++n)
        for (int m = 0; m + 1 < d; ++m)
            out(m, n) = std::sqrt(static_cast<double>((m + 1) * (n + 1))) * rho(m + 1, n + 1);
    return out;
}

inline CMat sandwich_cdag(const CMat& rho) {  // c^dag rho c
    const int d = static_cast<int>(rho.rows());
    CMat out = CMat::Zero(d, d);
    for (int n = 1; n < d; ++n)
        for (int m = 1; m < d; ++m)
            out(m, n) = std::sqrt(static_cast<double>(m * n)) * rho(m - 1, n - 1);
    return out;
}

inline Complex trace_a(const CMat& rho) {  // Tr[a rho]
    const int d = static_cast<int>(rho.rows());
    Complex acc = 0.0;
    for (int m = 0; m + 1 < d; ++m) acc += std::sqrt(static_cast<double>(m + 1)) * rho(m + 1, m);
    return acc;
}

inline Complex trace_a2(const CMat& rho) {  // Tr[a^2 rho]
    const int d = static_cast<int>(rho.rows());
    Complex acc = 0.0;
    for (int m = 0; m + 2 < d; ++m)
        acc += std::sqrt(static_cast<double>((m + 1) * (m + 2))) * rho(m + 2, m);
    return acc;
}

inline double trace_n(const CMat& rho) {
    double acc = 0.0;
    for (int m = 0; m < rho.rows(); ++m) acc += m * rho(m, m).real();
    return acc;
}

}  // namespace detail

/// Conditional first and second moments of a Fock-space state.
struct FockMoments {
    double mean_q = 0, mean_p = 0, var_q = 0, var_p = 0, cov_qp = 0, mean_n = 0;
};

inline FockMoments fock_moments(const FockDensity& rho) {
    const Complex ta = detail::trace_a(rho.m);
    const Complex ta2 = detail::trace_a2(rho.m);
    const double n = detail::trace_n(rho.m);
    FockMoments mom;
    mom.mean_q = 2.0 * ta.real();
    mom.mean_p = 2.0 * ta.imag();
    mom.mean_n = n;
    const double q2 = 2.0 * ta2.real() + 2.0 * n + 1.0;
    const double p2 = -2.0 * ta2.real() + 2.0 * n + 1.0;
    const double qp = 2.0 * ta2.imag();
    mom.var_q = q2 - mom.mean_q * mom.mean_q;
    mom.var_p = p2 - mom.mean_p * mom.mean_p;
    mom.cov_qp = qp - mom.mean_q * mom.mean_p;
    return mom;
}

/// Lindblad generator (N+1) D[c] rho + N D[c^dag] rho with
/// D[O] rho = O rho O^dag - (O^dag O rho + rho O^dag O)/2.
inline CMat lindblad_rhs(const FockDensity& rho, double n_bath) {
    const int d = rho.dim;
    CMat out = (n_bath + 1.0) * detail::sandwich_c(rho.m) + n_bath * detail::sandwich_cdag(rho.m);
    // anticommutator weights of the truncated c^dag c = diag(m) and
    // c c^dag = diag(m+1, ..., 0 at the edge); with these the generator is
    // trace-free exactly, not just up to the truncation edge
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            const double ccd = (m < d - 1 ? m + 1 : 0) + (n < d - 1 ? n + 1 : 0);
            const double w = (n_bath + 1.0) * 0.5 * (m + n) + n_bath * 0.5 * ccd;
            out(m, n) -= w * rho.m(m, n);
        }
    }
    return out;
}

/// Innovation superoperator H[O] rho = O rho + rho O^dag - Tr[(O+O^dag) rho] rho.
/// Trace-free by construction for unit-trace rho.
inline CMat h_superop(const FockOperator& op, const FockDensity& rho) {
    if (op.dim != rho.dim) throw std::invalid_argument("h_superop: dimension mismatch");
    CMat g = op.m * rho.m + rho.m * op.m.adjoint();
    return g - g.trace() * rho.m;
}

struct StepRecord {
    double dw1 = 0, dw2 = 0, theta1 = 0, theta2 = 0;
    double trace_err = 0;  // |Tr rho' - 1| before renormalisation
};

/// One Euler-Maruyama step of the general-dyne SME on the truncated Fock
/// space, with the Wiener increments supplied by the caller (used for
/// common-random-number studies). Outcomes are synthesised from the records
///   sqrt(dt) theta1 = (1+U)/2 <q> dt + sqrt(L1) dw1,
///   sqrt(dt) theta2 = (1-U)/2 <p> dt + sqrt(L2) dw2.
/// A degenerate channel (U = +/-1) ignores its increment and reports theta = 0.
inline StepRecord fock_sme_step(FockDensity& rho, const Unravelling& unr, double dt, double dw1,
                                double dw2) {
    const double sqdt = std::sqrt(dt);
    const Complex ta = detail::trace_a(rho.m);
    const double mean_q = 2.0 * ta.real();
    const double mean_p = 2.0 * ta.imag();
    const double np1 = unr.n_bath + 1.0;

    StepRecord rec;
    CMat next = rho.m + dt * lindblad_rhs(rho, unr.n_bath);
    if (unr.channel1_active()) {
        rec.dw1 = dw1;
        // H[(N+1) c - N c^dag]
        CMat g = detail::ladder_left(rho.m, np1, -unr.n_bath) +
                 detail::ladder_right(rho.m, -unr.n_bath, np1);
        g -= g.trace() * rho.m;
        const double coeff = 0.5 * (1.0 + unr.upsilon) / std::sqrt(unr.l1());
        next += (coeff * rec.dw1) * g;
        rec.theta1 = (0.5 * (1.0 + unr.upsilon) * mean_q * dt + std::sqrt(unr.l1()) * rec.dw1) / sqdt;
    }
    if (unr.channel2_active()) {
        rec.dw2 = dw2;
        // H[-i((N+1) c + N c^dag)]; the adjoint is +i((N+1) c^dag + N c).
        const Complex mi(0.0, -1.0), pi(0.0, 1.0);
        CMat g = detail::ladder_left(rho.m, mi * np1, mi * unr.n_bath) +
                 detail::ladder_right(rho.m, pi * unr.n_bath, pi * np1);
        g -= g.trace() * rho.m;
        const double coeff = 0.5 * (1.0 - unr.upsilon) / std::sqrt(unr.l2());
        next += (coeff * rec.dw2) * g;
        rec.theta2 = (0.5 * (1.0 - unr.upsilon) * mean_p * dt + std::sqrt(unr.l2()) * rec.dw2) / sqdt;
    }

    const double tr = next.trace().real();
    rec.trace_err = std::abs(tr - 1.0);
    if (rec.trace_err > 1e-3)
        throw NumericalError("fock_sme_step: trace drift " + std::to_string(rec.trace_err) +
                             " in one step; reduce dt");
    rho.m = 0.5 * (next + next.adjoint()).eval();
    rho.m /= rho.m.trace().real();
    return rec;
}

inline StepRecord fock_sme_step(FockDensity& rho, const Unravelling& unr, double dt,
                                RngStream& rng) {
    const double sqdt = std::sqrt(dt);
    const double dw1 = unr.channel1_active() ? sqdt * rng.gaussian() : 0.0;
    const double dw2 = unr.channel2_active() ? sqdt * rng.gaussian() : 0.0;
    return fock_sme_step(rho, unr, dt, dw1, dw2);
}

/// Gaussian-moment engine state.
struct GaussianMoments {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();   // (<q>, <p>)
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

    double mean_n() const {
        return 0.25 * (cov(0, 0) + cov(1, 1) + mean.squaredNorm() - 2.0);
    }
};

/// One step of the Gaussian engine with the same record conventions as
/// fock_sme_step. First moments follow the linear SDE
///   d<q> = -<q>/2 dt + k1 (Vqq - W) dw1 + k2 Vqp dw2,
///   d<p> = -<p>/2 dt + k1 Vqp dw1 + k2 (Vpp - W) dw2,
/// with W = 2N+1, k1 = (1+U)/(2 sqrt L1), k2 = (1-U)/(2 sqrt L2); the
/// covariance follows the deterministic Riccati flow
///   dVqq = [-Vqq + W - k1^2 (Vqq-W)^2 - k2^2 Vqp^2] dt   (and q<->p swapped),
///   dVqp = [-1 - k1^2 (Vqq-W) - k2^2 (Vpp-W)] Vqp dt,
/// whose innovation terms vanish at the thermal fixed point V = W I.
inline StepRecord gaussian_sme_step(GaussianMoments& st, const Unravelling& unr, double dt,
                                    double dw1, double dw2) {
    const double sqdt = std::sqrt(dt);
    const double w = 2.0 * unr.n_bath + 1.0;
    const double k1 = unr.channel1_active() ? 0.5 * (1.0 + unr.upsilon) / std::sqrt(unr.l1()) : 0.0;
    const double k2 = unr.channel2_active() ? 0.5 * (1.0 - unr.upsilon) / std::sqrt(unr.l2()) : 0.0;
    const double vqq = st.cov(0, 0), vpp = st.cov(1, 1), vqp = st.cov(0, 1);

    StepRecord rec;
    if (unr.channel1_active()) {
        rec.dw1 = dw1;
        rec.theta1 =
            (0.5 * (1.0 + unr.upsilon) * st.mean(0) * dt + std::sqrt(unr.l1()) * rec.dw1) / sqdt;
    }
    if (unr.channel2_active()) {
        rec.dw2 = dw2;
        rec.theta2 =
            (0.5 * (1.0 - unr.upsilon) * st.mean(1) * dt + std::sqrt(unr.l2()) * rec.dw2) / sqdt;
    }

    Eigen::Vector2d dm;
    dm(0) = -0.5 * st.mean(0) * dt + k1 * (vqq - w) * rec.dw1 + k2 * vqp * rec.dw2;
    dm(1) = -0.5 * st.mean(1) * dt + k1 * vqp * rec.dw1 + k2 * (vpp - w) * rec.dw2;
    const double dvqq = (-vqq + w - k1 * k1 * (vqq - w) * (vqq - w) - k2 * k2 * vqp * vqp) * dt;
    const double dvpp = (-vpp + w - k2 * k2 * (vpp - w) * (vpp - w) - k1 * k1 * vqp * vqp) * dt;
    const double dvqp = (-1.0 - k1 * k1 * (vqq - w) - k2 * k2 * (vpp - w)) * vqp * dt;

    st.mean += dm;
    st.cov(0, 0) += dvqq;
    st.cov(1, 1) += dvpp;
    st.cov(0, 1) += dvqp;
    st.cov(1, 0) = st.cov(0, 1);
    if (!(st.cov(0, 0) > 0.0) || !(st.cov(1, 1) > 0.0) || st.cov.determinant() < -1e-12)
        throw NumericalError("gaussian_sme_step: covariance lost positivity");
    return rec;
}

inline StepRecord gaussian_sme_step(GaussianMoments& st, const Unravelling& unr, double dt,
                                    RngStream& rng) {
    const double sqdt = std::sqrt(dt);
    const double dw1 = unr.channel1_active() ? sqdt * rng.gaussian() : 0.0;
    const double dw2 = unr.channel2_active() ? sqdt * rng.gaussian() : 0.0;
    return gaussian_sme_step(st, unr, dt, dw1, dw2);
}

/// Per-step records of one conditional trajectory.
struct TrajectoryRecord {
    Engine engine = Engine::fock;
    bool theta1_degenerate = false;
    bool theta2_degenerate = false;
    std::vector<double> times;  // (k+1) dt
    std::vector<double> dw1, dw2, theta1, theta2;
    std::vector<double> mean_q, mean_p, var_q, var_p, cov_qp, mean_n, trace_err;

    void reserve(int n) {
        for (auto* v : {&times, &dw1, &dw2, &theta1, &theta2, &mean_q, &mean_p, &var_q, &var_p,
                        &cov_qp, &mean_n, &trace_err})
            v->reserve(n);
    }
};

inline TrajectoryRecord run_trajectory(const SmeConfig& cfg) {
    cfg.validate();
    if (cfg.engine == Engine::both)
        throw std::invalid_argument("run_trajectory: engine must be fock or gaussian");
    RngStream rng = RngStream::substream(cfg.seed, 0);
    TrajectoryRecord rec;
    rec.engine = cfg.engine;
    rec.theta1_degenerate = !cfg.unravelling.channel1_active();
    rec.theta2_degenerate = !cfg.unravelling.channel2_active();
    rec.reserve(cfg.n_steps);

    if (cfg.engine == Engine::fock) {
        FockDensity rho = cfg.init.to_fock(cfg.dim);
        for (int k = 0; k < cfg.n_steps; ++k) {
            const StepRecord sr = fock_sme_step(rho, cfg.unravelling, cfg.dt, rng);
            const FockMoments mom = fock_moments(rho);
            rec.times.push_back((k + 1) * cfg.dt);
            rec.dw1.push_back(sr.dw1);
            rec.dw2.push_back(sr.dw2);
            rec.theta1.push_back(sr.theta1);
            rec.theta2.push_back(sr.theta2);
            rec.mean_q.push_back(mom.mean_q);
            rec.mean_p.push_back(mom.mean_p);
            rec.var_q.push_back(mom.var_q);
            rec.var_p.push_back(mom.var_p);
            rec.cov_qp.push_back(mom.cov_qp);
            rec.mean_n.push_back(mom.mean_n);
            rec.trace_err.push_back(sr.trace_err);
            if (cfg.negativity_check_stride > 0 && (k + 1) % cfg.negativity_check_stride == 0) {
                Eigen::SelfAdjointEigenSolver<CMat> es(rho.m, Eigen::EigenvaluesOnly);
                const double lam = es.eigenvalues().minCoeff();
                if (lam < -1e-6)
                    throw NumericalError("run_trajectory: negative eigenvalue " +
                                         std::to_string(lam) + " at step " + std::to_string(k + 1));
            }
        }
    } else {
        GaussianMoments st;
        const GaussianState init = cfg.init.to_gaussian();
        st.mean = init.mean;
        st.cov = init.cov;
        for (int k = 0; k < cfg.n_steps; ++k) {
            const StepRecord sr = gaussian_sme_step(st, cfg.unravelling, cfg.dt, rng);
            rec.times.push_back((k + 1) * cfg.dt);
            rec.dw1.push_back(sr.dw1);
            rec.dw2.push_back(sr.dw2);
            rec.theta1.push_back(sr.theta1);
            rec.theta2.push_back(sr.theta2);
            rec.mean_q.push_back(st.mean(0));
            rec.mean_p.push_back(st.mean(1));
            rec.var_q.push_back(st.cov(0, 0));
            rec.var_p.push_back(st.cov(1, 1));
            rec.cov_qp.push_back(st.cov(0, 1));
            rec.mean_n.push_back(st.mean_n());
            rec.trace_err.push_back(0.0);
        }
    }
    return rec;
}

/// Ensemble statistics at checkpoint times. Per-trajectory values are written
/// into preallocated slots and reduced in a fixed order, so the result is
/// bit-identical for any thread count.
struct EnsembleStats {
    std::vector<double> times;
    std::vector<double> mean_n, se_n;
    std::vector<double> mean_q, se_q;
    std::vector<double> mean_p, se_p;
    std::vector<double> mean_var_q, mean_var_p, mean_cov_qp;
    std::vector<double> steady_var_q;  // per trajectory, tail time-average
    std::vector<double> steady_var_p;
    int n_traj = 0;
};

inline EnsembleStats run_ensemble(const SmeConfig& cfg, int n_traj, int checkpoint_stride = 10,
                                  int n_threads = 0) {
    cfg.validate();
    if (cfg.engine == Engine::both)
        throw std::invalid_argument("run_ensemble: engine must be fock or gaussian");
    if (n_traj < 1) throw std::invalid_argument("run_ensemble: n_traj must be >= 1");
    if (checkpoint_stride < 1) checkpoint_stride = 1;
    const int n_checks = cfg.n_steps / checkpoint_stride;
    if (n_threads <= 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, n_traj);

    // Row-per-trajectory storage, filled independently.
    Eigen::MatrixXd obs_n(n_traj, n_checks), obs_q(n_traj, n_checks), obs_p(n_traj, n_checks);
    Eigen::MatrixXd obs_vq(n_traj, n_checks), obs_vp(n_traj, n_checks), obs_cqp(n_traj, n_checks);
    std::vector<double> steady_q(n_traj), steady_p(n_traj);
    std::vector<std::exception_ptr> errors(n_threads, nullptr);

    auto worker = [&](int tid) {
        try {
            for (int i = tid; i < n_traj; i += n_threads) {
                // the stream index distinguishes trajectories
                RngStream rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(i) + 1);

                // inline trajectory loop (avoids storing full per-step records)
                int check = 0;
                double tail_q = 0.0, tail_p = 0.0;
                int tail_count = 0;
                const int tail_start = cfg.n_steps / 2;
                auto record = [&](int k, const FockMoments& mom) {
                    if ((k + 1) % checkpoint_stride == 0 && check < n_checks) {
                        obs_n(i, check) = mom.mean_n;
                        obs_q(i, check) = mom.mean_q;
                        obs_p(i, check) = mom.mean_p;
                        obs_vq(i, check) = mom.var_q;
                        obs_vp(i, check) = mom.var_p;
                        obs_cqp(i, check) = mom.cov_qp;
                        ++check;
                    }
                    if (k >= tail_start) {
                        tail_q += mom.var_q;
                        tail_p += mom.var_p;
                        ++tail_count;
                    }
                };
                if (cfg.engine == Engine::fock) {
                    FockDensity rho = cfg.init.to_fock(cfg.dim);
                    for (int k = 0; k < cfg.n_steps; ++k) {
                        fock_sme_step(rho, cfg.unravelling, cfg.dt, rng);
                        record(k, fock_moments(rho));
                    }
                } else {
                    GaussianMoments st;
                    const GaussianState init = cfg.init.to_gaussian();
                    st.mean = init.mean;
                    st.cov = init.cov;
                    for (int k = 0; k < cfg.n_steps; ++k) {
                        gaussian_sme_step(st, cfg.unravelling, cfg.dt, rng);
                        FockMoments mom;
                        mom.mean_q = st.mean(0);
                        mom.mean_p = st.mean(1);
                        mom.var_q = st.cov(0, 0);
                        mom.var_p = st.cov(1, 1);
                        mom.cov_qp = st.cov(0, 1);
                        mom.mean_n = st.mean_n();
                        record(k, mom);
                    }
                }
                steady_q[i] = tail_q / std::max(1, tail_count);
                steady_p[i] = tail_p / std::max(1, tail_count);
            }
        } catch (...) {
            errors[tid] = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker, t);
    worker(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    EnsembleStats stats;
    stats.n_traj = n_traj;
    stats.steady_var_q = std::move(steady_q);
    stats.steady_var_p = std::move(steady_p);
    auto reduce = [&](const Eigen::MatrixXd& m, std::vector<double>& mean, std::vector<double>* se) {
        mean.resize(n_checks);
        if (se) se->resize(n_checks);
        for (int c = 0; c < n_checks; ++c) {
            double acc = 0.0;
            for (int i = 0; i < n_traj; ++i) acc += m(i, c);
            const double mu = acc / n_traj;
            mean[c] = mu;
            if (se) {
                double var = 0.0;
                for (int i = 0; i < n_traj; ++i) var += (m(i, c) - mu) * (m(i, c) - mu);
                (*se)[c] = n_traj > 1 ? std::sqrt(var / (n_traj - 1.0) / n_traj) : 0.0;
            }
        }
    };
    stats.times.resize(n_checks);
    for (int c = 0; c < n_checks; ++c) stats.times[c] = (c + 1) * checkpoint_stride * cfg.dt;
    reduce(obs_n, stats.mean_n, &stats.se_n);
    reduce(obs_q, stats.mean_q, &stats.se_q);
    reduce(obs_p, stats.mean_p, &stats.se_p);
    reduce(obs_vq, stats.mean_var_q, nullptr);
    reduce(obs_vp, stats.mean_var_p, nullptr);
    reduce(obs_cqp, stats.mean_cov_qp, nullptr);
    return stats;
}

}  // namespace gendyne
