#pragma once

#include "tacnode/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tacnode::detail {

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    double min_step = 0.0;
};

struct Rk45Options {
    double rel_tol = 1e-11;
    double abs_tol = 1e-13;
    double h_init = 1e-3;
    double h_min = 1e-12;
    double h_max = 1.0;
};

// Embedded Dormand-Prince 5(4) over a real parameter t.  State must support
// scalar * State and State + State (Eigen vectors/matrices and doubles do);
// norm is any callable giving a nonnegative magnitude for the error estimate.
template <class State, class Rhs, class Norm>
void integrate_rk45(const Rhs& f, double t0, double t1, State& y,
                    const Rk45Options& opt, StepStats& stats, const Norm& norm)
{
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference 5th-order minus embedded 4th-order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    if (span == 0.0)
        return;

    double t = t0;
    double h = std::min(opt.h_init, std::max(opt.h_max > 0 ? opt.h_max : span, opt.h_min));
    h = std::min(h, span);
    stats.min_step = h;

    State k1 = f(t, y);
    while (dir * (t1 - t) > 0.0) {
        h = std::min(h, std::abs(t1 - t));
        const double hs = dir * h;

        State y2 = y + hs * a21 * k1;
        State k2 = f(t + c2 * hs, y2);
        State y3 = y + hs * (a31 * k1 + a32 * k2);
        State k3 = f(t + c3 * hs, y3);
        State y4 = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
        State k4 = f(t + c4 * hs, y4);
        State y5 = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        State k5 = f(t + c5 * hs, y5);
        State y6 = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        State k6 = f(t + hs, y6);
        State ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        State k7 = f(t + hs, ynew);

        State errv = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double scale = opt.abs_tol + opt.rel_tol * std::max(norm(y), norm(ynew));
        const double err = norm(errv) / scale;

        if (err <= 1.0) {
            t += hs;
            y = ynew;
            k1 = k7; // FSAL
            ++stats.accepted;
        } else {
            ++stats.rejected;
        }
        const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
        h = std::min(h, opt.h_max > 0 ? opt.h_max : span);
        stats.min_step = std::min(stats.min_step, h);
        if (h < opt.h_min)
            throw StiffnessFailure("rk45: step size underflow at t = " + std::to_string(t));
    }
}

} // namespace tacnode::detail
