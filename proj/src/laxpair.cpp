#include "tacnode/laxpair.hpp"
#include "tacnode/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tacnode {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

const double kCbrt2 = std::cbrt(2.0);          // 2^{1/3}
const double kCbrt4 = std::cbrt(4.0);          // 2^{2/3}

double x_star_of(double s, double tau) { return kCbrt4 * (2.0 * s - tau * tau); }

} // namespace

LaxEntries entries_from_pii(const PIISolution& sol, double s, double tau)
{
    const double xs = x_star_of(s, tau);
    if (xs < sol.x_min() || xs > sol.x_max())
        throw DomainError("laxpair: 2^{2/3}(2s - tau^2) falls outside the solved "
                          "Painleve interval");
    LaxEntries e;
    e.x_star = xs;
    e.d = sol.q_at(xs) / kCbrt2;
    e.c = -sol.u_at(xs) / kCbrt2 + s * s;
    e.b = -sol.qprime_at(xs) / kCbrt4 + e.c * e.d + tau * e.d;
    e.h = e.b - 2.0 * tau * e.d;
    e.f = -2.0 * e.b * e.c + e.c * e.c * e.d + 2.0 * tau * e.c * e.d
        + 2.0 * tau * tau * e.d - e.d * e.d * e.d - 2.0 * s * e.d + sol.nu;
    e.g_plus_a = -e.c * e.c + e.d * e.d + s;
    return e;
}

Eigen::Matrix4cd lax_U(const LaxEntries& e, double nu, double s, double tau,
                       std::complex<double> zeta)
{
    if (zeta == 0.0)
        throw DomainError("laxpair: U has a simple pole at zeta = 0");
    using C = std::complex<double>;
    const C nz = nu / zeta;
    const double gas = e.g_plus_a + s;
    Eigen::Matrix4cd U;
    U << C(-e.c + tau), e.d + nz, kI, C(0),
         -e.d + nz, C(e.c - tau), C(0), kI,
         -kI * (-zeta + gas), C(0, -(e.b + e.h)), C(e.c + tau), e.d - nz,
         C(0, -(e.b + e.h)), -kI * (zeta + gas), -e.d - nz, C(-e.c - tau);
    return U;
}

Eigen::Matrix4cd lax_V(const LaxEntries& e, std::complex<double> zeta)
{
    using C = std::complex<double>;
    Eigen::Matrix4cd V;
    V << C(e.c), C(e.d), -kI, C(0),
         C(e.d), C(e.c), C(0), kI,
         kI * (-zeta + e.g_plus_a), C(0, e.b - e.h), C(-e.c), C(-e.d),
         C(0, e.h - e.b), -kI * (zeta + e.g_plus_a), C(-e.d), C(-e.c);
    return 2.0 * V;
}

Eigen::Matrix4cd lax_W(const LaxEntries& e, std::complex<double> zeta)
{
    using C = std::complex<double>;
    Eigen::Matrix4cd W;
    W << zeta, C(-2.0 * e.b), C(0), C(0, -2.0 * e.d),
         C(-2.0 * e.b), -zeta, C(0, 2.0 * e.d), C(0),
         C(0), C(0, -2.0 * e.f), zeta, C(-2.0 * e.h),
         C(0, 2.0 * e.f), C(0), C(-2.0 * e.h), -zeta;
    return W;
}

double CompatReport::max_residual() const
{
    double m = std::max({std::abs(c_eq), std::abs(d_eq), std::abs(dpp_eq),
                         zero_curvature});
    if (std::isfinite(b_tau_eq))
        m = std::max(m, std::abs(b_tau_eq));
    return m;
}

CompatReport check_compatibility(const PIISolution& sol, double s, double tau,
                                 double step)
{
    if (!(step > 0.0))
        throw DomainError("laxpair: differencing step must be positive");

    auto at_s = [&](double ss) { return entries_from_pii(sol, ss, tau); };

    // Richardson-extrapolated central first difference, O(step^4).
    auto d1 = [&](auto value, double h) {
        const double c1 = (value(h) - value(-h)) / (2.0 * h);
        const double c2 = (value(h / 2.0) - value(-h / 2.0)) / h;
        return (4.0 * c2 - c1) / 3.0;
    };

    const LaxEntries e0 = at_s(s);
    CompatReport rep;

    const double dc = d1([&](double h) { return at_s(s + h).c; }, step);
    rep.c_eq = dc - 4.0 * e0.d * e0.d - 2.0 * s;

    const double dd = d1([&](double h) { return at_s(s + h).d; }, step);
    rep.d_eq = dd - 4.0 * (-e0.b + e0.c * e0.d + tau * e0.d);

    // second derivative with Richardson on the 3-point stencil, step 10x
    const double H = 10.0 * step;
    auto d2 = [&](double h) {
        return (at_s(s + h).d - 2.0 * e0.d + at_s(s - h).d) / (h * h);
    };
    const double ddd = (4.0 * d2(H / 2.0) - d2(H)) / 3.0;
    rep.dpp_eq = ddd - 32.0 * std::pow(e0.d, 3) - 32.0 * s * e0.d
               + 16.0 * tau * tau * e0.d + 8.0 * sol.nu;

    if (tau != 0.0) {
        const double dtau =
            d1([&](double h) { return entries_from_pii(sol, s, tau + h).d; }, step);
        rep.b_tau_eq = dtau / (4.0 * tau) - (e0.b - e0.c * e0.d - tau * e0.d);
    } else {
        rep.b_tau_eq = std::numeric_limits<double>::quiet_NaN();
    }

    // zero curvature dU/ds = dV/dzeta + VU - UV with dV/dzeta = -2i(E31+E42)
    const std::complex<double> zetas[] = {{1.0, 1.0}, {-2.0, 0.0}, {0.0, 0.5}};
    for (auto z : zetas) {
        Eigen::Matrix4cd dU = Eigen::Matrix4cd::Zero();
        auto Us = [&](double h) { return lax_U(at_s(s + h), sol.nu, s + h, tau, z); };
        const Eigen::Matrix4cd c1 = (Us(step) - Us(-step)) / (2.0 * step);
        const Eigen::Matrix4cd c2 = (Us(step / 2.0) - Us(-step / 2.0)) / step;
        dU = (4.0 * c2 - c1) / 3.0;

        Eigen::Matrix4cd dV = Eigen::Matrix4cd::Zero();
        dV(2, 0) = -2.0 * kI;
        dV(3, 1) = -2.0 * kI;

        const Eigen::Matrix4cd U = lax_U(e0, sol.nu, s, tau, z);
        const Eigen::Matrix4cd V = lax_V(e0, z);
        const Eigen::Matrix4cd R = dU - dV - V * U + U * V;
        rep.zero_curvature = std::max(rep.zero_curvature, R.cwiseAbs().maxCoeff());
    }
    return rep;
}

} // namespace tacnode
