// Test-side oracles, independent of the library's construction paths.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "gendyne/povm.hpp"

namespace oracles {

// Amplitudes of |theta> from the eigenvalue recursion
//   sqrt(n+1) c_{n+1} = theta c_n - U sqrt(n) c_{n-1},
// anchored at a caller-supplied c_0.
inline gendyne::CVec recursion_eigenvector(gendyne::Complex theta, double upsilon, int dim,
                                           gendyne::Complex c0) {
    gendyne::CVec c(dim);
    c(0) = c0;
    if (dim > 1) c(1) = theta * c0;
    for (int n = 1; n + 1 < dim; ++n)
        c(n + 1) = (theta * c(n) - upsilon * std::sqrt(static_cast<double>(n)) * c(n - 1)) /
                   std::sqrt(static_cast<double>(n + 1));
    return c;
}

// Residual of the eigen-ODE (1/2)[(1+U)x + 2(1-U) d/dx] psi = theta psi with a
// 4th-order central difference for d/dx, normalised by max |psi|.
inline double ode_residual(double upsilon, const gendyne::GendyneOutcome& theta, double x_lo,
                           double x_hi, int n_points) {
    const double h = (x_hi - x_lo) / (n_points - 1);
    std::vector<gendyne::Complex> psi(n_points);
    double psi_max = 0.0;
    for (int i = 0; i < n_points; ++i) {
        psi[i] = gendyne::eigen_wavefunction(x_lo + i * h, theta, upsilon);
        psi_max = std::max(psi_max, std::abs(psi[i]));
    }
    double worst = 0.0;
    for (int i = 2; i + 2 < n_points; ++i) {
        const gendyne::Complex dpsi =
            (-psi[i + 2] + 8.0 * psi[i + 1] - 8.0 * psi[i - 1] + psi[i - 2]) / (12.0 * h);
        const double x = x_lo + i * h;
        const gendyne::Complex lhs =
            0.5 * ((1.0 + upsilon) * x * psi[i] + 2.0 * (1.0 - upsilon) * dpsi);
        worst = std::max(worst, std::abs(lhs - theta.value() * psi[i]));
    }
    return worst / psi_max;
}

}  // namespace oracles
