#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tacnode/errors.hpp"
#include "tacnode/finiten.hpp"
#include "tacnode/phase.hpp"
#include "tacnode/special.hpp"

#include <array>
#include <cmath>
#include <vector>

using namespace tacnode;

namespace {

WeightSystem base_system()
{
    WeightSystem ws;
    ws.a = 0.5;
    ws.b = 0.5;
    ws.T = 1.0;
    ws.t = 0.5;
    ws.n = 8;
    ws.alpha = 0.25;
    return ws;
}

// Shared n = 8 model; the build cost dominates everything below.
const BiorthogonalModel& model8()
{
    static BiorthogonalModel m = build_model(base_system());
    return m;
}

// Test-local composite quadrature, deliberately independent of the rule the
// model was built with: the trace and reproducing identities hold exactly
// under the model's own discrete measure by construction, so checking them
// there would be circular.  16-point Gauss-Legendre per panel, with a z^4
// substitution near the origin to absorb the x^alpha weight singularity.
void gauss16(std::array<double, 16>& xs, std::array<double, 16>& ws)
{
    const int k = 16;
    for (int i = 0; i < k / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (k + 0.5));
        double deriv = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < k; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
            }
            deriv = k * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / deriv;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        xs[i] = -x;
        xs[k - 1 - i] = x;
        ws[i] = ws[k - 1 - i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
    }
}

struct Rule {
    std::vector<double> x, w;
};

Rule oracle_rule(double X, int sing_panels, int bulk_panels)
{
    std::array<double, 16> gx, gw;
    gauss16(gx, gw);
    Rule r;
    const double xb = X / 64.0;
    for (int p = 0; p < sing_panels; ++p) {
        double z0 = double(p) / sing_panels, z1 = double(p + 1) / sing_panels;
        for (int i = 0; i < 16; ++i) {
            double z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * gx[i];
            r.x.push_back(xb * z * z * z * z);
            r.w.push_back(0.5 * (z1 - z0) * gw[i] * xb * 4.0 * z * z * z);
        }
    }
    for (int p = 0; p < bulk_panels; ++p) {
        double a = xb + (X - xb) * p / bulk_panels;
        double b = xb + (X - xb) * (p + 1) / bulk_panels;
        for (int i = 0; i < 16; ++i) {
            r.x.push_back(0.5 * (a + b) + 0.5 * (b - a) * gx[i]);
            r.w.push_back(0.5 * (b - a) * gw[i]);
        }
    }
    return r;
}

double det2(double a, double b, double c, double d)
{
    return a * d - b * c;
}

} // namespace

TEST_CASE("weight ratios match the Bessel-quotient form")
{
    const WeightSystem ws = base_system();
    const double za = 2.0 * ws.n * std::sqrt(ws.a) / (ws.T * ws.t);
    const double zb = 2.0 * ws.n * std::sqrt(ws.b) / (ws.T * (1.0 - ws.t));
    for (double x : {1e-4, 0.05, 0.3, 1.0, 4.0}) {
        WeightValues wv = eval_weights(ws, x);
        CHECK(wv.w11 > 0.0);
        CHECK(wv.w12 > 0.0);
        CHECK(wv.w21 > 0.0);
        CHECK(wv.w22 > 0.0);

        const double sx = std::sqrt(x);
        double r1 = std::sqrt(x) * modified_bessel_i(ws.alpha + 1.0, za * sx) /
                    modified_bessel_i(ws.alpha, za * sx);
        CHECK(wv.w12 / wv.w11 == doctest::Approx(r1).epsilon(1e-11));

        double r2 = modified_bessel_i(ws.alpha, zb * sx) /
                    (std::sqrt(x) * modified_bessel_i(ws.alpha - 1.0, zb * sx));
        CHECK(wv.w21 / wv.w22 == doctest::Approx(r2).epsilon(1e-11));
    }
}

TEST_CASE("weight small-x leading order matches the series")
{
    const WeightSystem ws = base_system();
    const double x = 1e-8;
    WeightValues wv = eval_weights(ws, x);
    const double c1 = ws.n / (ws.T * ws.t);

    // w11 ~ x^alpha (n sqrt(a)/(T t))^alpha / Gamma(alpha+1); the next series
    // term is O(n^2 a x / (T t)^2) ~ 1e-6 at this x.
    double lead11 = std::pow(x, ws.alpha) * std::pow(ws.n * std::sqrt(ws.a) / (ws.T * ws.t), ws.alpha) /
                    std::tgamma(ws.alpha + 1.0) * std::exp(-c1 * x);
    CHECK(wv.w11 == doctest::Approx(lead11).epsilon(1e-5));

    double lead12 = std::pow(x, ws.alpha + 1.0) *
                    std::pow(ws.n * std::sqrt(ws.a) / (ws.T * ws.t), ws.alpha + 1.0) /
                    std::tgamma(ws.alpha + 2.0) * std::exp(-c1 * x);
    CHECK(wv.w12 == doctest::Approx(lead12).epsilon(1e-5));
}

TEST_CASE("weight evaluation rejects bad arguments")
{
    const WeightSystem ws = base_system();
    CHECK_THROWS_AS(eval_weights(ws, 0.0), DomainError);
    CHECK_THROWS_AS(eval_weights(ws, -1.0), DomainError);

    WeightSystem bad = ws;
    bad.n = 7;
    CHECK_THROWS_AS(eval_weights(bad, 1.0), DomainError);
    bad = ws;
    bad.alpha = -1.0;
    CHECK_THROWS_AS(eval_weights(bad, 1.0), DomainError);
    bad = ws;
    bad.t = 1.0;
    CHECK_THROWS_AS(eval_weights(bad, 1.0), DomainError);
    bad = ws;
    bad.a = 0.0;
    CHECK_THROWS_AS(eval_weights(bad, 1.0), DomainError);
    bad = ws;
    bad.T = -1.0;
    CHECK_THROWS_AS(eval_weights(bad, 1.0), DomainError);
}

TEST_CASE("model accessors and discrete self-checks")
{
    const BiorthogonalModel& m = model8();
    CHECK(m.system().n == 8);
    CHECK(m.node_count() == 320);
    CHECK(m.precision_bits() == 256);
    CHECK(static_cast<int>(m.nodes().size()) == m.node_count());

    // Default cutoff: ten times the larger of the two decay scales
    // (sqrt(a) + sqrt(T t / n))^2, (sqrt(b) + sqrt(T (1-t) / n))^2.
    const WeightSystem& ws = m.system();
    double scale1 = std::pow(std::sqrt(ws.a) + std::sqrt(ws.T * ws.t / ws.n), 2);
    double scale2 = std::pow(std::sqrt(ws.b) + std::sqrt(ws.T * (1.0 - ws.t) / ws.n), 2);
    CHECK(m.x_cut() == doctest::Approx(10.0 * std::max(scale1, scale2)).epsilon(1e-12));

    double wsum = 0.0;
    double prev = 0.0;
    for (size_t q = 0; q < m.nodes().size(); ++q) {
        CHECK(m.nodes()[q] > prev);
        CHECK(m.quad_weights()[q] > 0.0);
        prev = m.nodes()[q];
        wsum += m.quad_weights()[q];
    }
    CHECK(m.nodes().back() < m.x_cut());
    // The singular panels drop a ~1e-10 sliver at the very origin by design.
    CHECK(wsum == doctest::Approx(m.x_cut()).epsilon(1e-9));

    // Own-rule trace is the factorization self-check; it reproduces n up to
    // roundoff regardless of quadrature quality.
    CHECK(m.trace() == doctest::Approx(8.0).epsilon(1e-10));

    CHECK(m.condition_estimate() > 1e3);
    CHECK(m.condition_estimate() < 1e14);

    CHECK(finite_kernel(m, 0.01, 0.02) == m.kernel(0.01, 0.02));
}

TEST_CASE("projection property under an independent quadrature")
{
    const BiorthogonalModel& m = model8();
    const Rule r = oracle_rule(m.x_cut(), 6, 12);

    double tr = 0.0;
    for (size_t i = 0; i < r.x.size(); ++i)
        tr += r.w[i] * m.kernel(r.x[i], r.x[i]);
    CHECK(std::abs(tr - 8.0) < 1e-6);

    const double x0 = 0.01, y0 = 0.02;
    double lhs = 0.0;
    for (size_t i = 0; i < r.x.size(); ++i)
        lhs += r.w[i] * m.kernel(x0, r.x[i]) * m.kernel(r.x[i], y0);
    CHECK(std::abs(lhs - m.kernel(x0, y0)) < 1e-6);
}

TEST_CASE("kernel is stable under quadrature refinement")
{
    BiorthogonalModel fine = build_model(base_system(), 640);
    CHECK(fine.node_count() == 640);
    CHECK(std::abs(fine.kernel(0.01, 0.02) - model8().kernel(0.01, 0.02)) < 1e-8);
}

TEST_CASE("sampled correlation determinants are nonnegative")
{
    const BiorthogonalModel& m = model8();

    const double lo = 1e-4, hi = m.x_cut();
    for (int i = 0; i < 25; ++i) {
        double x = lo * std::pow(hi / lo, i / 24.0);
        double kxx = m.kernel(x, x);
        CHECK(std::isfinite(kxx));
        CHECK(kxx >= -1e-8);
    }

    double k11 = m.kernel(0.01, 0.01), k12 = m.kernel(0.01, 0.03);
    double k21 = m.kernel(0.03, 0.01), k22 = m.kernel(0.03, 0.03);
    CHECK(det2(k11, k12, k21, k22) >= -1e-8);

    const std::array<double, 3> p = {0.01, 0.03, 0.08};
    double k[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[i][j] = m.kernel(p[i], p[j]);
    double det3 = k[0][0] * det2(k[1][1], k[1][2], k[2][1], k[2][2]) -
                  k[0][1] * det2(k[1][0], k[1][2], k[2][0], k[2][2]) +
                  k[0][2] * det2(k[1][0], k[1][1], k[2][0], k[2][1]);
    CHECK(det3 >= -1e-8);
}

TEST_CASE("n = 2 kernel matches a direct Gram inversion")
{
    WeightSystem ws = base_system();
    ws.n = 2;
    BiorthogonalModel m2 = build_model(ws);

    // Brute-force 2x2 Gram in double precision on an independent rule; the
    // bases are just the four bare weights at n = 2.
    const Rule r = oracle_rule(m2.x_cut(), 6, 12);
    double g00 = 0, g01 = 0, g10 = 0, g11 = 0;
    for (size_t i = 0; i < r.x.size(); ++i) {
        WeightValues wv = eval_weights(ws, r.x[i]);
        g00 += r.w[i] * wv.w11 * wv.w21;
        g01 += r.w[i] * wv.w11 * wv.w22;
        g10 += r.w[i] * wv.w12 * wv.w21;
        g11 += r.w[i] * wv.w12 * wv.w22;
    }
    const double det = det2(g00, g01, g10, g11);
    CHECK(std::abs(det) > 0.0);

    auto direct = [&](double x, double y) {
        WeightValues fx = eval_weights(ws, x);
        WeightValues gy = eval_weights(ws, y);
        double s0 = (g11 * fx.w11 - g01 * fx.w12) / det;
        double s1 = (-g10 * fx.w11 + g00 * fx.w12) / det;
        return gy.w21 * s0 + gy.w22 * s1;
    };

    for (auto [x, y] : std::array<std::array<double, 2>, 3>{{{0.3, 0.7}, {1.0, 0.5}, {2.0, 2.0}}}) {
        double want = direct(x, y);
        double got = m2.kernel(x, y);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("collapsing factorizations are reported with a condition estimate")
{
    WeightSystem ws = base_system();
    ws.n = 16;
    // The Hankel-like Gram of the n = 16 basis needs far more than 64 bits.
    try {
        build_model(ws, 0, 0.0, 64);
        FAIL("expected SingularGram");
    } catch (const SingularGram& e) {
        CHECK(e.condition_estimate > 1e13);
        CHECK(std::string(e.what()).find("condition") != std::string::npos);
    }
}

TEST_CASE("model construction rejects inconsistent requests")
{
    WeightSystem ws = base_system();

    WeightSystem odd = ws;
    odd.n = 7;
    CHECK_THROWS_AS(build_model(odd), DomainError);

    CHECK_THROWS_AS(build_model(ws, 8), DomainError);        // fewer than 4n nodes
    CHECK_THROWS_AS(build_model(ws, 0, 0.0, 32), DomainError);
    CHECK_THROWS_AS(build_model(ws, 0, 0.0, 100000), DomainError);
    CHECK_THROWS_AS(build_model(ws, 0, -2.0), DomainError);

    CHECK_THROWS_AS(model8().kernel(-1.0, 1.0), DomainError);
    CHECK_THROWS_AS(model8().kernel(1.0, 0.0), DomainError);

    BiorthogonalModel unbuilt;
    CHECK_THROWS_AS(unbuilt.kernel(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(unbuilt.trace(), DomainError);
}

TEST_CASE("scaling maps hit the closed-form check values")
{
    // a = b = 1/2: (sqrt(a)+sqrt(b))^2 = 2, so K = 1, L = 0 gives
    // s* = 2, tau* = -2, and kappa = 2 sqrt(2).
    ScalingParams sp = scaling_params(0.5, 0.5, 1.0, 0.0);
    CHECK(sp.s_star == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sp.tau_star == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(sp.kappa == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

    ScalingParams origin = scaling_params(0.5, 0.5, 0.0, 0.0);
    CHECK(origin.s_star == doctest::Approx(0.0));
    CHECK(origin.tau_star == doctest::Approx(0.0));

    // Varying endpoints shift s* by (L1 + L2)/2 and leave tau* alone.
    ScalingParams moved = scaling_params(0.5, 0.5, 1.0, 0.0, 0.3, 0.5);
    CHECK(moved.s_star == doctest::Approx(2.4).epsilon(1e-12));
    CHECK(moved.tau_star == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(moved.kappa == doctest::Approx(sp.kappa).epsilon(1e-15));
}

TEST_CASE("rescaled kernel approaches the tacnode limit as n grows")
{
    const std::vector<double> grid = {0.5, 1.0, 2.0};
    ScalingReport r8 = scaling_compare(8, 0.0, 0.0, grid, grid, 0.25);
    ScalingReport r16 = scaling_compare(16, 0.0, 0.0, grid, grid, 0.25);

    CHECK(r8.s_star == doctest::Approx(0.0));
    CHECK(r8.tau_star == doctest::Approx(0.0));
    CHECK(r8.kappa == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r8.t_n == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r8.T_n == doctest::Approx(1.0).epsilon(1e-12));
    // kappa^2 n^{4/3} = 8 * 16 at n = 8
    CHECK(r8.x_scale == doctest::Approx(128.0).epsilon(1e-9));

    REQUIRE(r8.points.size() == 9);
    REQUIRE(r16.points.size() == 9);
    for (const ScalingPoint& p : r8.points) {
        CHECK(p.finite > 0.0);
        CHECK(p.limit > 0.0);
        CHECK(p.reldev == doctest::Approx(std::abs(p.finite - p.limit) / std::abs(p.limit))
                              .epsilon(1e-12));
        CHECK(p.reldev <= r8.max_reldev);
    }

    // No rate is claimed, only the trend; measured values are ~4.2e-2 at
    // n = 8 and ~2.6e-2 at n = 16.
    CHECK(r8.max_reldev < 0.08);
    CHECK(r16.max_reldev < r8.max_reldev);
    CHECK(r16.max_reldev < 0.85 * r8.max_reldev);
}

TEST_CASE("endpoint variation keeps tau* and the limit kernel")
{
    const std::vector<double> grid = {1.0};
    // L1 = -L2 leaves s* at zero while moving the endpoints themselves.
    ScalingReport r = scaling_compare(8, 0.0, 0.0, grid, grid, 0.25, 0.5, 0.5, 0.2, -0.2);
    CHECK(r.s_star == doctest::Approx(0.0));
    CHECK(r.tau_star == doctest::Approx(0.0));
    const double shift = 2.0 * 0.2 * std::pow(8.0, -2.0 / 3.0);
    CHECK(r.a_n == doctest::Approx(0.5 * (1.0 + shift)).epsilon(1e-12));
    CHECK(r.b_n == doctest::Approx(0.5 * (1.0 - shift)).epsilon(1e-12));
    CHECK(r.max_reldev < 0.15);
}

TEST_CASE("scaling comparison validates its inputs")
{
    const std::vector<double> grid = {1.0};
    CHECK_THROWS_AS(scaling_compare(7, 0.0, 0.0, grid, grid, 0.25), DomainError);
    CHECK_THROWS_AS(scaling_compare(8, 0.0, 0.0, grid, grid, 0.25, 0.6, 0.5), DomainError);
    CHECK_THROWS_AS(scaling_compare(8, 0.0, 0.0, {}, grid, 0.25), DomainError);
    CHECK_THROWS_AS(scaling_compare(8, 0.0, 0.0, grid, {0.5, -1.0}, 0.25), DomainError);
}
