#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tacnode/errors.hpp"
#include "tacnode/phase.hpp"

#include <cmath>
#include <string>

using namespace tacnode;

TEST_CASE("critical time")
{
    CHECK(t_star(0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t_star(1.0, 0.25) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    for (double a : {0.2, 0.5, 3.0})
        for (double b : {0.1, 0.5, 2.5})
            CHECK(t_star(a, b) + t_star(b, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)t_star(0.0, 1.0), DomainError);
}

TEST_CASE("Marcenko-Pastur endpoints")
{
    auto e = mp_endpoints(0.5, 0.5, 0.5, 1.0);
    CHECK(std::abs(e.p) < 1e-15);
    CHECK(e.q == doctest::Approx(2.0).epsilon(1e-14));

    // direct substitution oracle on a grid
    for (double t : {0.2, 0.5, 0.8})
        for (double T : {0.3, 0.7, 1.0}) {
            CAPTURE(t);
            CAPTURE(T);
            auto [p, q] = mp_endpoints(0.5, 0.5, t, T);
            const double mid = std::sqrt(0.5);
            const double gap = std::sqrt(2.0 * t * (1.0 - t) * T);
            CHECK(std::sqrt(p) == doctest::Approx(mid - gap).epsilon(1e-12));
            CHECK(std::sqrt(q) == doctest::Approx(mid + gap).epsilon(1e-12));
            CHECK(p < q);
            CHECK(p >= 0.0);
        }

    // p -> 0 exactly at the tangency point of any ab = 1/4 family
    for (double a : {0.25, 0.5, 1.0, 2.0}) {
        const double b = 0.25 / a;
        auto crit = mp_endpoints(a, b, t_star(a, b), 1.0);
        CHECK(std::abs(crit.p) < 1e-14);
    }

    // small endpoints at warm temperature: sqrt(p) goes negative
    CHECK_THROWS_AS((void)mp_endpoints(0.1, 0.1, 0.5, 0.9), CaseError);
    CHECK_THROWS_AS((void)mp_endpoints(0.5, 0.5, 0.5, 1.5), DomainError);
    CHECK_THROWS_AS((void)mp_endpoints(0.5, 0.5, 0.0, 0.5), DomainError);
}

TEST_CASE("boundary temperature curve")
{
    CHECK(boundary_temperature(0.5, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-15));

    // symmetric in (a <-> b, t <-> 1-t)
    for (double t : {0.15, 0.4, 0.7})
        CHECK(boundary_temperature(0.8, 0.3125, t)
              == doctest::Approx(boundary_temperature(0.3125, 0.8, 1.0 - t))
                     .epsilon(1e-14));

    // calculus oracle: numeric minimum over t equals 2 sqrt(ab) at t = t*
    for (auto [a, b] : {std::pair{0.5, 0.5}, std::pair{1.3, 0.41}, std::pair{0.9, 0.2}}) {
        CAPTURE(a);
        CAPTURE(b);
        double tmin = 0.0, fmin = 1e300;
        for (int i = 1; i < 20000; ++i) {
            const double t = i / 20000.0;
            const double f = boundary_temperature(a, b, t);
            if (f < fmin) {
                fmin = f;
                tmin = t;
            }
        }
        CHECK(fmin == doctest::Approx(2.0 * std::sqrt(a * b)).epsilon(1e-7));
        CHECK(tmin == doctest::Approx(t_star(a, b)).epsilon(1e-3));
    }
}

TEST_CASE("phase classification")
{
    CHECK(classify_phase(0.5, 0.5, 0.5, 0.8) == PhaseCase::CaseI);
    CHECK(classify_phase(0.5, 0.5, 0.5, 1.5) == PhaseCase::CaseIII);
    CHECK(classify_phase(0.5, 0.5, 0.1, 1.5) == PhaseCase::CaseII);
    CHECK(classify_phase(0.5, 0.5, 0.5, 1.0) == PhaseCase::Tacnode);
    CHECK(classify_phase(0.5, 0.5, 0.3, 1.0) == PhaseCase::BoundaryI_II);
    const double Tc = boundary_temperature(0.5, 0.5, 0.3);
    CHECK(classify_phase(0.5, 0.5, 0.3, Tc) == PhaseCase::BoundaryII_III);

    // invariance under the reflection (a <-> b, t <-> 1-t) along ab = 1/4
    for (auto [a, t, T] : {std::tuple{1.0, 0.3, 0.5}, std::tuple{1.0, 0.62, 2.0},
                           std::tuple{2.0, 0.25, 3.7}, std::tuple{0.7, 0.55, 1.0}}) {
        const double b = 0.25 / a;
        CAPTURE(a);
        CAPTURE(t);
        CAPTURE(T);
        CHECK(classify_phase(a, b, t, T) == classify_phase(b, a, 1.0 - t, T));
    }

    // boundary_temperature at t* equals 1 on the whole critical family
    for (double a : {0.25, 0.6, 1.7}) {
        const double b = 0.25 / a;
        CHECK(boundary_temperature(a, b, t_star(a, b))
              == doctest::Approx(1.0).epsilon(1e-13));
    }

    CHECK_THROWS_AS((void)classify_phase(0.5, 0.4, 0.5, 1.0), DomainError);
    CHECK_THROWS_AS((void)classify_phase(0.5, 0.5, 0.5, 0.0), DomainError);

    CHECK(std::string(phase_name(PhaseCase::CaseII)) == "CaseII");
    CHECK(std::string(phase_name(PhaseCase::Tacnode)) == "Tacnode");
}

TEST_CASE("triple-scaling parameter map")
{
    auto z = scaling_params(0.5, 0.5, 0.0, 0.0);
    CHECK(z.s_star == 0.0);
    CHECK(z.tau_star == 0.0);
    CHECK(z.kappa == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));

    auto p = scaling_params(0.5, 0.5, 1.0, 0.0);
    CHECK(p.s_star == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(p.tau_star == doctest::Approx(-2.0).epsilon(1e-15));

    auto v = scaling_params(0.5, 0.5, 0.0, 1.0, 1.0, 0.0);
    CHECK(v.s_star == doctest::Approx(0.0));

    CHECK_THROWS_AS((void)scaling_params(0.5, 0.6, 0.0, 0.0), DomainError);
}
