#pragma once

#include <memory>
#include <vector>

namespace tacnode {

// Parameters of the n-path squared Bessel ensemble at a fixed observation
// time: paths start at a, end at b, run at temperature T, and are observed at
// time t in (0,1).  alpha > -1 is the Bessel index of the process.
struct WeightSystem {
    double a = 0.5;
    double b = 0.5;
    double T = 1.0;
    double t = 0.5;
    int n = 8;          // even number of paths
    double alpha = 0.0;
};

struct WeightValues {
    double w11 = 0.0; // x^{ alpha/2}    e^{-nx/(Tt)}     I_alpha  (2n sqrt(ax)/(Tt))
    double w12 = 0.0; // x^{(alpha+1)/2} e^{-nx/(Tt)}     I_alpha+1(2n sqrt(ax)/(Tt))
    double w21 = 0.0; // x^{-alpha/2}    e^{-nx/(T(1-t))} I_alpha  (2n sqrt(bx)/(T(1-t)))
    double w22 = 0.0; // x^{(1-alpha)/2} e^{-nx/(T(1-t))} I_alpha-1(2n sqrt(bx)/(T(1-t)))
};

// Overflow-safe double-precision evaluation of the four weights (the
// exponential of the Bessel asymptotics is folded into the density factor).
WeightValues eval_weights(const WeightSystem& ws, double x);

// Finite-n correlation kernel of the ensemble, built from the biorthogonal
// family {x^k w11} U {x^k w12} against {y^k w21} U {y^k w22} with block sizes
// n1 = ceil(n/2), n2 = n - n1.  The Gram matrix is assembled by composite
// Gauss-Legendre quadrature and factorized in extended precision (monomial
// bases make it Hankel-like, hopeless in doubles beyond n ~ 10).  Models are
// immutable after construction.
class BiorthogonalModel {
public:
    // K_n(x, y) for x, y > 0 through the stored factorization.
    double kernel(double x, double y) const;

    const WeightSystem& system() const;
    double x_cut() const;
    int node_count() const;
    int precision_bits() const;
    double condition_estimate() const;

    // Quadrature rule (double mirrors of the extended-precision nodes).
    const std::vector<double>& nodes() const;
    const std::vector<double>& quad_weights() const;

    // sum_q w_q K(x_q, x_q) over the model's own rule; equals n up to the
    // factorization error and is a cheap self-check of the projection
    // property.
    double trace() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    friend BiorthogonalModel build_model(const WeightSystem&, int, double, int);
};

// quad_size <= 0 picks max(4n, 320) nodes; X_cut <= 0 picks ten times the
// largest exponential-decay scale of the four weights.  Throws SingularGram
// if the factorization collapses at the requested precision.
BiorthogonalModel build_model(const WeightSystem& ws, int quad_size = 0,
                              double X_cut = 0.0, int precision_bits = 256);

double finite_kernel(const BiorthogonalModel& model, double x, double y);

// One row of the scaling comparison at grid point (u, v): `finite` is the
// rescaled finite-n kernel value, `limit` the tacnode kernel at the mapped
// (s*, tau*), and reldev their relative deviation.
struct ScalingPoint {
    double u = 0.0, v = 0.0;
    double finite = 0.0;
    double limit = 0.0;
    double reldev = 0.0;
};

struct ScalingReport {
    double s_star = 0.0;
    double tau_star = 0.0;
    double kappa = 0.0;
    double t_n = 0.0; // time and temperature actually used at this n
    double T_n = 0.0;
    double a_n = 0.0; // endpoints actually used (vary when L1/L2 nonzero)
    double b_n = 0.0;
    int n = 0;
    double x_scale = 0.0; // kappa^2 n^{4/3}; kernel arguments are u / x_scale
    std::vector<ScalingPoint> points;
    double max_reldev = 0.0;
};

// Tabulates the rescaled finite-n kernel against the tacnode limit on the
// (u, v) grid.  Maps t = t* + K n^{-1/3}, T = 1 + L n^{-2/3} and, when L1 or
// L2 is nonzero, a = a*(1 + 2 L1 n^{-2/3}), b = b*(1 + 2 L2 n^{-2/3}) with
// the matching shift of s*.  Requires a* b* = 1/4 and n even.
ScalingReport scaling_compare(int n, double K_shift, double L,
                              const std::vector<double>& u_grid,
                              const std::vector<double>& v_grid, double alpha,
                              double a_star = 0.5, double b_star = 0.5,
                              double L1 = 0.0, double L2 = 0.0,
                              int quad_size = 0, int precision_bits = 256);

} // namespace tacnode
