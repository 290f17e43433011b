#pragma once

#include "tacnode/painleve.hpp"

#include <Eigen/Core>

#include <complex>

namespace tacnode {

// Parameters of the model Riemann-Hilbert problem.  Library scope fixes the
// ray weights r1 = r2 = 1; they are carried only so configurations stay
// explicit about it.
struct MParams {
    double nu = 0.0;
    double r1 = 1.0;
    double r2 = 1.0;
    double s = 0.0;
    double tau = 0.0;
};

// Entries of the residue matrix M1 that have closed forms through the
// Hastings-McLeod solution.  The individual numbers a, e, g have no closed
// form; only the combination g + a enters the Lax matrices.
struct LaxEntries {
    double d = 0.0;
    double c = 0.0;
    double b = 0.0;
    double h = 0.0;
    double f = 0.0;
    double g_plus_a = 0.0;
    double x_star = 0.0; // argument at which the PII solution was sampled
};

// d = 2^{-1/3} q(x*), c = -2^{-1/3} u(x*) + s^2 with x* = 2^{2/3}(2s - tau^2);
// b uses the analytic chain-rule form -2^{-2/3} q'(x*) + c d + tau d, which
// equals (1/4 tau) d_tau(d) + c d + tau d but stays finite at tau = 0.
LaxEntries entries_from_pii(const PIISolution& sol, double s, double tau);

// dM/dzeta = U M.  Simple pole at zeta = 0 with residue nu(E12+E21-E34-E43).
Eigen::Matrix4cd lax_U(const LaxEntries& e, double nu, double s, double tau,
                       std::complex<double> zeta);

// dM/ds = V M.  Linear in zeta, derivative -2i(E31 + E42).
Eigen::Matrix4cd lax_V(const LaxEntries& e, std::complex<double> zeta);

// dM/dtau = W M.  Polynomial in zeta (diagonal).
Eigen::Matrix4cd lax_W(const LaxEntries& e, std::complex<double> zeta);

// Residuals of the compatibility identities, all of which vanish exactly for
// the true solution; what is reported is finite-differencing noise.
struct CompatReport {
    double c_eq = 0.0;           // c'(s) - 4 d^2 - 2 s
    double d_eq = 0.0;           // d'(s) - 4(-b + c d + tau d)
    double dpp_eq = 0.0;         // d''(s) - 32 d^3 - 32 s d + 16 tau^2 d + 8 nu
    double b_tau_eq = 0.0;       // (1/4tau) d_tau(d) - (b - c d - tau d); NaN at tau = 0
    double zero_curvature = 0.0; // max entry of dU/ds - dV/dzeta - VU + UV

    double max_residual() const;
};

// First derivatives use Richardson-extrapolated central differences with the
// given step, second derivatives use 10x the step.  The zero-curvature
// residual is evaluated on a fixed small set of zeta points.
CompatReport check_compatibility(const PIISolution& sol, double s, double tau,
                                 double step = 1e-3);

} // namespace tacnode
