#pragma once

namespace tacnode {

enum class PhaseCase {
    CaseI,          // T < 1: paths stay away from the hard edge, MP bulk
    CaseII,         // 1 < T < boundary curve: away from the edge, deformed bulk
    CaseIII,        // T above the boundary curve: paths reach the hard edge
    BoundaryI_II,   // T = 1, t != t*
    BoundaryII_III, // T on the transition curve
    Tacnode         // (t, T) = (t*, 1): critical tangency
};

const char* phase_name(PhaseCase c);

// Critical time sqrt(a)/(sqrt(a)+sqrt(b)) at which the bulk touches the edge.
double t_star(double a, double b);

struct Endpoints {
    double p;
    double q;
};

// Marcenko-Pastur support [p, q] of the paths at time t in the subcritical
// regime 0 < T <= 1:
//   sqrt(p) = (1-t)sqrt(a) + t sqrt(b) - sqrt(2 t (1-t) T),
//   sqrt(q) = (1-t)sqrt(a) + t sqrt(b) + sqrt(2 t (1-t) T).
// Throws CaseError when the sqrt(p) expression goes negative (the paths reach
// the hard edge, so the two-sided support no longer exists).
Endpoints mp_endpoints(double a, double b, double t, double T);

// Case II / Case III transition curve T(t) = (a(1-t)^2 + b t^2)/(t(1-t)).
double boundary_temperature(double a, double b, double t);

// Phase classification along the critical family ab = 1/4.  tol is a relative
// tolerance used only to absorb rounding in the boundary comparisons.
PhaseCase classify_phase(double a, double b, double t, double T,
                         double tol = 1e-12);

struct ScalingParams {
    double s_star;
    double tau_star;
    double kappa;
};

// Triple-scaling map for t = t* + K n^{-1/3}, T = 1 + L n^{-2/3}; L1, L2 admit
// endpoint families a = a*(1 + 2 L1 n^{-2/3}), b = b*(1 + 2 L2 n^{-2/3}).
ScalingParams scaling_params(double a, double b, double K, double L,
                             double L1 = 0.0, double L2 = 0.0);

} // namespace tacnode
