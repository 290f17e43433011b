#pragma once

#include <cstdint>

namespace tacnode {

// Modified Bessel function of the first kind, I_alpha(z), for real order
// alpha > -1 and z >= 0.  Power series below the crossover z = 30 + 2|alpha|,
// large-argument asymptotic expansion above it; both branches agree to better
// than 1e-11 relative at the seam.  Relative error <= 1e-12 for z <= 500.
double modified_bessel_i(double order, double z);

// exp(-z) * I_alpha(z).  Safe for large z (no overflow up to z ~ 1e8); this is
// the primitive the transition densities are built from.
double scaled_bessel_i(double order, double z);

// Transition density of the squared Bessel process of index alpha > -1 over a
// time step tau > 0:
//
//   p_tau(x, y) = (1/(2 tau)) (y/x)^{alpha/2} exp(-(x+y)/(2 tau)) I_alpha(sqrt(xy)/tau)
//
// for x > 0, with the x -> 0 limit
//
//   p_tau(0, y) = y^alpha exp(-y/(2 tau)) / ((2 tau)^{alpha+1} Gamma(alpha+1)).
//
// Normalized: integral over y in (0, inf) equals 1.  Internally evaluated
// through scaled_bessel_i so the exponential factors combine as
// exp(-(sqrt x - sqrt y)^2 / (2 tau)), which never overflows.
double sbp_density(double alpha, double tau, double x, double y);

// Diffusion time step between consecutive slices when n paths traverse [0, T]
// in m slices of width t: tau = T * t / (2 n).
double rescale_time(double T, std::int64_t n, double t);

} // namespace tacnode
