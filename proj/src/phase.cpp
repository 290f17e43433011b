#include "tacnode/phase.hpp"
#include "tacnode/errors.hpp"

#include <cmath>

namespace tacnode {

namespace {

void require_endpoints(double a, double b)
{
    if (!(a > 0.0) || !(b > 0.0))
        throw DomainError("phase: endpoints a, b must be positive");
}

void require_critical_separation(double a, double b)
{
    require_endpoints(a, b);
    if (std::abs(a * b - 0.25) > 1e-12 * 0.25)
        throw DomainError("phase: operation requires the critical separation "
                          "a*b = 1/4");
}

} // namespace

const char* phase_name(PhaseCase c)
{
    switch (c) {
    case PhaseCase::CaseI: return "CaseI";
    case PhaseCase::CaseII: return "CaseII";
    case PhaseCase::CaseIII: return "CaseIII";
    case PhaseCase::BoundaryI_II: return "BoundaryI_II";
    case PhaseCase::BoundaryII_III: return "BoundaryII_III";
    case PhaseCase::Tacnode: return "Tacnode";
    }
    return "?";
}

double t_star(double a, double b)
{
    require_endpoints(a, b);
    const double ra = std::sqrt(a), rb = std::sqrt(b);
    return ra / (ra + rb);
}

Endpoints mp_endpoints(double a, double b, double t, double T)
{
    require_endpoints(a, b);
    if (!(t > 0.0) || !(t < 1.0))
        throw DomainError("phase: time must lie in (0, 1)");
    if (!(T > 0.0) || T > 1.0)
        throw DomainError("phase: Marcenko-Pastur endpoints are only defined "
                          "for 0 < T <= 1");
    const double mid = (1.0 - t) * std::sqrt(a) + t * std::sqrt(b);
    const double gap = std::sqrt(2.0 * t * (1.0 - t) * T);
    const double rp = mid - gap;
    if (rp < 0.0)
        throw CaseError("phase: paths reach the hard edge at these parameters; "
                        "no two-sided support");
    return {rp * rp, (mid + gap) * (mid + gap)};
}

double boundary_temperature(double a, double b, double t)
{
    require_endpoints(a, b);
    if (!(t > 0.0) || !(t < 1.0))
        throw DomainError("phase: time must lie in (0, 1)");
    const double omt = 1.0 - t;
    return (a * omt * omt + b * t * t) / (t * omt);
}

PhaseCase classify_phase(double a, double b, double t, double T, double tol)
{
    require_critical_separation(a, b);
    if (!(t > 0.0) || !(t < 1.0))
        throw DomainError("phase: time must lie in (0, 1)");
    if (!(T > 0.0))
        throw DomainError("phase: temperature must be positive");

    const double ts = t_star(a, b);
    const bool on_critical_T = std::abs(T - 1.0) <= tol;
    if (on_critical_T && std::abs(t - ts) <= tol)
        return PhaseCase::Tacnode;
    if (on_critical_T)
        return PhaseCase::BoundaryI_II;
    if (T < 1.0)
        return PhaseCase::CaseI;

    const double Tc = boundary_temperature(a, b, t);
    if (std::abs(T - Tc) <= tol * Tc)
        return PhaseCase::BoundaryII_III;
    return T > Tc ? PhaseCase::CaseIII : PhaseCase::CaseII;
}

ScalingParams scaling_params(double a, double b, double K, double L, double L1,
                             double L2)
{
    require_critical_separation(a, b);
    const double sum = std::sqrt(a) + std::sqrt(b);
    const double sum2 = sum * sum;
    return {(K * K * sum2 * sum2 - L + L1 + L2) / 2.0, -K * sum2, 2.0 * sum};
}

} // namespace tacnode
