#pragma once

#include <vector>

namespace tacnode {

struct PIIConfig {
    double nu = 0.0;
    double x_min = -20.0;
    double x_max = 20.0;
    int grid_size = 4001;      // uniform collocation nodes, >= 9
    double newton_tol = 1e-9; // max-norm of the collocation residual
    int max_newton_iter = 50;
    int max_line_search = 30;
};

// The pole-free real solution of q'' = x q + 2 q^3 - nu selected by the decay
// conditions q ~ nu/x (x -> +inf) and q ~ sqrt(-x/2) (x -> -inf), together
// with its derivative and the Hamiltonian integral
//   u = (q')^2 - x q^2 - q^4 + 2 nu q,   u' = -q^2.
// Values between nodes come from piecewise cubic Hermite interpolants whose
// slope data is exact: q uses the stored q', q' uses q'' from the equation,
// u uses u' = -q^2.
struct PIISolution {
    double nu = 0.0;
    std::vector<double> x;
    std::vector<double> q;
    std::vector<double> qprime;
    std::vector<double> u;

    double q_at(double xx) const;
    double qprime_at(double xx) const;
    double u_at(double xx) const;

    double x_min() const { return x.front(); }
    double x_max() const { return x.back(); }
};

// Solve by fourth-order finite-difference collocation with a damped Newton
// iteration.  Boundary rows: Dirichlet q(x_min) = sqrt(-x_min/2) on the left;
// on the right the Robin condition q'(x_max) = -q(x_max)/x_max (linearization
// of the nu/x tail), or q'(x_max) = -sqrt(x_max) q(x_max) when nu = 0 (Airy
// decay).  For |nu| > 1 the solver walks a continuation ladder in steps of at
// most 0.25, warm-starting each rung.  Requires nu > -1/2.
PIISolution solve_hastings_mcleod(const PIIConfig& cfg);

} // namespace tacnode
