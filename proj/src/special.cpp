#include "tacnode/special.hpp"
#include "tacnode/errors.hpp"

#include <cmath>
#include <limits>

namespace tacnode {

namespace {

// Power series sum_{k>=0} (z/2)^{2k+alpha} / (k! Gamma(k+alpha+1)), evaluated
// with the prefactor (z/2)^alpha / Gamma(alpha+1) split off so only ratios of
// consecutive terms are formed.  All terms are positive: no cancellation.
double series_scaled(double alpha, double z)
{
    const double q = 0.25 * z * z;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 600; ++k) {
        term *= q / (k * (k + alpha));
        sum += term;
        if (term < sum * 1e-18)
            break;
    }
    // sum * (z/2)^alpha / Gamma(alpha+1), with exp(-z) folded in through logs
    // to keep the scaled value finite for any z the series branch sees.
    const double lg = std::lgamma(alpha + 1.0);
    return sum * std::exp(alpha * std::log(0.5 * z) - lg - z);
}

// Asymptotic expansion e^{-z} I_alpha(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(alpha) / z^k
// with a_k = prod_{j=1..k} (4 alpha^2 - (2j-1)^2) / (8^k k!).  Truncated at the
// smallest term (the series is divergent); below the crossover this is never used.
double asymptotic_scaled(double alpha, double z)
{
    const double mu = 4.0 * alpha * alpha;
    double term = 1.0;
    double sum = 1.0;
    double prev = std::numeric_limits<double>::max();
    for (int k = 1; k < 40; ++k) {
        const double f = 2.0 * k - 1.0;
        term *= -(mu - f * f) / (8.0 * k * z);
        if (std::abs(term) >= prev)
            break; // divergence sets in; stop at the smallest term
        sum += term;
        prev = std::abs(term);
        if (prev < 1e-18 * std::abs(sum))
            break;
    }
    return sum / std::sqrt(2.0 * M_PI * z);
}

} // namespace

double scaled_bessel_i(double order, double z)
{
    if (!(order > -1.0))
        throw DomainError("modified_bessel_i: order must exceed -1");
    if (!(z >= 0.0))
        throw DomainError("modified_bessel_i: argument must be non-negative");
    if (z == 0.0) {
        if (order == 0.0)
            return 1.0;
        return order > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    const double crossover = 30.0 + 2.0 * std::abs(order);
    return z < crossover ? series_scaled(order, z) : asymptotic_scaled(order, z);
}

double modified_bessel_i(double order, double z)
{
    const double s = scaled_bessel_i(order, z);
    if (z > 700.0) // e^z overflows; the scaled form is the usable one here
        return std::numeric_limits<double>::infinity();
    return s * std::exp(z);
}

double sbp_density(double alpha, double tau, double x, double y)
{
    if (!(alpha > -1.0))
        throw DomainError("sbp_density: index must exceed -1");
    if (!(tau > 0.0))
        throw DomainError("sbp_density: time step must be positive");
    if (!(x >= 0.0) || !(y >= 0.0))
        throw DomainError("sbp_density: positions must be non-negative");
    if (y == 0.0) {
        // y^alpha edge behaviour: vanishes for alpha > 0, diverges (integrably)
        // for alpha < 0, finite limit for alpha = 0.
        if (alpha > 0.0)
            return 0.0;
        if (alpha < 0.0)
            return std::numeric_limits<double>::infinity();
        return 0.5 / tau * std::exp(-x / (2.0 * tau));
    }
    if (x == 0.0) {
        const double a1 = alpha + 1.0;
        return std::exp(alpha * std::log(y) - y / (2.0 * tau)
                        - a1 * std::log(2.0 * tau) - std::lgamma(a1));
    }
    const double rx = std::sqrt(x), ry = std::sqrt(y);
    // exp(-(x+y)/(2 tau)) I_alpha(sqrt(xy)/tau) = exp(-(rx-ry)^2/(2 tau)) * scaled I
    const double expo = -(rx - ry) * (rx - ry) / (2.0 * tau);
    const double bess = scaled_bessel_i(alpha, rx * ry / tau);
    return 0.5 / tau * std::pow(y / x, 0.5 * alpha) * std::exp(expo) * bess;
}

double rescale_time(double T, std::int64_t n, double t)
{
    if (!(T > 0.0))
        throw DomainError("rescale_time: total time must be positive");
    if (n < 1)
        throw DomainError("rescale_time: path count must be at least 1");
    if (!(t > 0.0) || !(t <= 1.0))
        throw DomainError("rescale_time: slice fraction must lie in (0, 1]");
    return T * t / (2.0 * static_cast<double>(n));
}

} // namespace tacnode
