#include "tacnode/finiten.hpp"

#include "tacnode/errors.hpp"
#include "tacnode/laxpair.hpp"
#include "tacnode/painleve.hpp"
#include "tacnode/phase.hpp"
#include "tacnode/rhkernel.hpp"
#include "tacnode/special.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tacnode {

namespace {

// Dynamic-precision real; expression templates off keeps Eigen happy.
using mp_float = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                               boost::multiprecision::et_off>;
using MPMatrix = Eigen::Matrix<mp_float, Eigen::Dynamic, Eigen::Dynamic>;
using MPVector = Eigen::Matrix<mp_float, Eigen::Dynamic, 1>;

int digits_for_bits(int bits)
{
    return std::max(24, static_cast<int>(std::ceil(bits * 0.30103)) + 2);
}

// Nodes and weights of the k-point Gauss-Legendre rule on [-1, 1] at the
// current working precision (Newton on the recurrence, double seeds).
void legendre_rule(int k, std::vector<mp_float>& x, std::vector<mp_float>& w)
{
    x.assign(static_cast<size_t>(k), mp_float(0));
    w.assign(static_cast<size_t>(k), mp_float(0));
    const mp_float tol = boost::multiprecision::ldexp(mp_float(1), -(int)(mp_float::default_precision() * 3.33) + 6);
    for (int i = 0; i < k; ++i) {
        mp_float xi(std::cos(M_PI * (i + 0.75) / (k + 0.5)));
        mp_float dp(0);
        for (int iter = 0; iter < 200; ++iter) {
            mp_float p0(1), p1 = xi;
            for (int j = 2; j <= k; ++j) {
                mp_float p2 = ((2 * j - 1) * xi * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = k * (xi * p1 - p0) / (xi * xi - 1);
            const mp_float dx = p1 / dp;
            xi -= dx;
            if (boost::multiprecision::abs(dx) < tol) break;
        }
        x[static_cast<size_t>(k - 1 - i)] = xi; // ascending
        w[static_cast<size_t>(k - 1 - i)] = 2 / ((1 - xi * xi) * dp * dp);
    }
}

// The left pair (w11, w12) and right pair (w21, w22) are evaluated
// separately: a kernel evaluation needs only one pair per argument, and the
// Bessel calls dominate the cost.
void left_weights_mp(const WeightSystem& ws, const mp_float& x, mp_float& w11, mp_float& w12)
{
    const mp_float sx = boost::multiprecision::sqrt(x);
    const mp_float c1 = ws.n / (ws.T * ws.t);
    const mp_float za = 2 * c1 * std::sqrt(ws.a) * sx;
    const mp_float e1 = boost::multiprecision::exp(-c1 * x);
    const mp_float xa2 = boost::multiprecision::pow(x, mp_float(ws.alpha) / 2);
    w11 = xa2 * e1 * boost::math::cyl_bessel_i(mp_float(ws.alpha), za);
    w12 = xa2 * sx * e1 * boost::math::cyl_bessel_i(mp_float(ws.alpha + 1), za);
}

void right_weights_mp(const WeightSystem& ws, const mp_float& y, mp_float& w21, mp_float& w22)
{
    const mp_float sy = boost::multiprecision::sqrt(y);
    const mp_float c2 = ws.n / (ws.T * (1.0 - ws.t));
    const mp_float zb = 2 * c2 * std::sqrt(ws.b) * sy;
    const mp_float e2 = boost::multiprecision::exp(-c2 * y);
    const mp_float ya2 = boost::multiprecision::pow(y, mp_float(ws.alpha) / 2);
    w21 = e2 * boost::math::cyl_bessel_i(mp_float(ws.alpha), zb) / ya2;
    w22 = sy * e2 * boost::math::cyl_bessel_i(mp_float(ws.alpha - 1), zb) / ya2;
}

void validate_system(const WeightSystem& ws)
{
    if (ws.n < 2 || ws.n % 2 != 0) throw DomainError("path count n must be even and >= 2");
    if (!(ws.alpha > -1.0) || !std::isfinite(ws.alpha))
        throw DomainError("alpha must be finite and exceed -1");
    if (!(ws.a > 0.0) || !(ws.b > 0.0)) throw DomainError("endpoints a, b must be positive");
    if (!(ws.T > 0.0)) throw DomainError("temperature must be positive");
    if (!(ws.t > 0.0) || !(ws.t < 1.0)) throw DomainError("time must lie in (0,1)");
}

// Outermost x at which each weight's exponential envelope has decayed by one
// e-fold past its peak; the quadrature cutoff is ten times the largest.
double default_x_cut(const WeightSystem& ws)
{
    const double l1 = ws.T * ws.t / ws.n;
    const double l2 = ws.T * (1.0 - ws.t) / ws.n;
    const double d1 = std::pow(std::sqrt(ws.a) + std::sqrt(l1), 2);
    const double d2 = std::pow(std::sqrt(ws.b) + std::sqrt(l2), 2);
    return 10.0 * std::max(d1, d2);
}

} // namespace

WeightValues eval_weights(const WeightSystem& ws, double x)
{
    validate_system(ws);
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("weights require x > 0");
    const double c1 = ws.n / (ws.T * ws.t);
    const double c2 = ws.n / (ws.T * (1.0 - ws.t));
    const double za = 2.0 * c1 * std::sqrt(ws.a * x);
    const double zb = 2.0 * c2 * std::sqrt(ws.b * x);
    // fold exp(z) of the scaled Bessel into the density exponent so neither
    // factor overflows on its own
    const double e1 = std::exp(za - c1 * x);
    const double e2 = std::exp(zb - c2 * x);
    WeightValues out;
    out.w11 = std::pow(x, ws.alpha / 2.0) * e1 * scaled_bessel_i(ws.alpha, za);
    out.w12 = std::pow(x, (ws.alpha + 1.0) / 2.0) * e1 * scaled_bessel_i(ws.alpha + 1.0, za);
    out.w21 = std::pow(x, -ws.alpha / 2.0) * e2 * scaled_bessel_i(ws.alpha, zb);
    // order alpha-1 can drop below the -1 cutoff of scaled_bessel_i; the
    // three-term recurrence expresses it through orders alpha and alpha+1
    const double i_am1 = zb > 0.0
                             ? scaled_bessel_i(ws.alpha + 1.0, zb) +
                                   (2.0 * ws.alpha / zb) * scaled_bessel_i(ws.alpha, zb)
                             : 0.0;
    out.w22 = std::pow(x, (1.0 - ws.alpha) / 2.0) * e2 * i_am1;
    return out;
}

struct BiorthogonalModel::Impl {
    WeightSystem ws;
    double x_cut = 0.0;
    int bits = 0;
    int digits = 0;
    int n1 = 0, n2 = 0;
    std::vector<mp_float> qx, qw;
    std::vector<double> qx_d, qw_d;
    MPMatrix G;
    MPMatrix F, H; // weighted left / plain right basis columns at the nodes
    Eigen::PartialPivLU<MPMatrix> lu;
    double cond_est = 0.0;

    MPVector left_basis(const mp_float& x) const
    {
        mp_float w11, w12;
        left_weights_mp(ws, x, w11, w12);
        MPVector f(ws.n);
        mp_float p(1);
        for (int k = 0; k < n1; ++k) {
            f(k) = p * w11;
            p *= x;
        }
        p = 1;
        for (int k = 0; k < n2; ++k) {
            f(n1 + k) = p * w12;
            p *= x;
        }
        return f;
    }

    MPVector right_basis(const mp_float& y) const
    {
        mp_float w21, w22;
        right_weights_mp(ws, y, w21, w22);
        MPVector g(ws.n);
        mp_float p(1);
        for (int k = 0; k < n1; ++k) {
            g(k) = p * w21;
            p *= y;
        }
        p = 1;
        for (int k = 0; k < n2; ++k) {
            g(n1 + k) = p * w22;
            p *= y;
        }
        return g;
    }

    mp_float kernel_mp(const mp_float& x, const mp_float& y) const
    {
        const MPVector u = lu.solve(left_basis(x));
        return right_basis(y).dot(u);
    }
};

BiorthogonalModel build_model(const WeightSystem& ws, int quad_size, double X_cut,
                              int precision_bits)
{
    validate_system(ws);
    if (quad_size <= 0) quad_size = std::max(4 * ws.n, 320);
    if (quad_size < 4 * ws.n) throw DomainError("quadrature must carry at least 4n nodes");
    if (precision_bits < 64 || precision_bits > 16384)
        throw DomainError("precision_bits must lie in [64, 16384]");
    if (X_cut < 0.0 || !std::isfinite(X_cut)) throw DomainError("X_cut must be finite");

    auto impl = std::make_shared<BiorthogonalModel::Impl>();
    impl->ws = ws;
    impl->bits = precision_bits;
    impl->digits = digits_for_bits(precision_bits);
    impl->n1 = (ws.n + 1) / 2;
    impl->n2 = ws.n - impl->n1;
    impl->x_cut = X_cut > 0.0 ? X_cut : default_x_cut(ws);

    mp_float::default_precision(static_cast<unsigned>(impl->digits));

    // composite rule: uniform panels across the bulk, and a power-substituted
    // geometric stack near zero that resolves the x^alpha-type singularity
    const int per_panel = 16;
    std::vector<mp_float> gx, gw;
    legendre_rule(per_panel, gx, gw);

    const int sing_panels = 8;
    const int bulk_panels = std::max(4, (quad_size + per_panel - 1) / per_panel - sing_panels);
    const double xb = impl->x_cut / 64.0;

    auto add_panel = [&](const mp_float& lo, const mp_float& hi) {
        const mp_float mid = (hi + lo) / 2, half = (hi - lo) / 2;
        for (int q = 0; q < per_panel; ++q) {
            impl->qx.push_back(mid + half * gx[static_cast<size_t>(q)]);
            impl->qw.push_back(half * gw[static_cast<size_t>(q)]);
        }
    };

    // substitution x = xb z^mu turns the worst admissible singularity into a
    // linear vanishing; the geometric stack then clears the rest.  The piece
    // below z = 1e-5 carries a relative mass under 1e-10 and is dropped.
    const int mu = std::max(2, static_cast<int>(std::ceil(2.0 / (1.0 + ws.alpha))));
    const double z_lo = 1e-5;
    for (int p = 0; p < sing_panels; ++p) {
        const mp_float zl = boost::multiprecision::pow(mp_float(z_lo), mp_float(sing_panels - p) / sing_panels);
        const mp_float zh = boost::multiprecision::pow(mp_float(z_lo), mp_float(sing_panels - p - 1) / sing_panels);
        const mp_float mid = (zh + zl) / 2, half = (zh - zl) / 2;
        for (int q = 0; q < per_panel; ++q) {
            const mp_float z = mid + half * gx[static_cast<size_t>(q)];
            const mp_float zpow = boost::multiprecision::pow(z, mu - 1);
            impl->qx.push_back(xb * zpow * z);
            impl->qw.push_back(half * gw[static_cast<size_t>(q)] * xb * mu * zpow);
        }
    }
    for (int p = 0; p < bulk_panels; ++p)
        add_panel(mp_float(xb) + (impl->x_cut - xb) * mp_float(p) / bulk_panels,
                  mp_float(xb) + (impl->x_cut - xb) * mp_float(p + 1) / bulk_panels);

    const int nq = static_cast<int>(impl->qx.size());
    impl->qx_d.resize(static_cast<size_t>(nq));
    impl->qw_d.resize(static_cast<size_t>(nq));
    for (int q = 0; q < nq; ++q) {
        impl->qx_d[static_cast<size_t>(q)] = impl->qx[static_cast<size_t>(q)].convert_to<double>();
        impl->qw_d[static_cast<size_t>(q)] = impl->qw[static_cast<size_t>(q)].convert_to<double>();
    }

    impl->F.resize(ws.n, nq);
    impl->H.resize(ws.n, nq);
    for (int q = 0; q < nq; ++q) {
        impl->F.col(q) =
            impl->left_basis(impl->qx[static_cast<size_t>(q)]) * impl->qw[static_cast<size_t>(q)];
        impl->H.col(q) = impl->right_basis(impl->qx[static_cast<size_t>(q)]);
    }
    impl->G = impl->F * impl->H.transpose();

    impl->lu.compute(impl->G);
    mp_float dmin(0), dmax(0);
    for (int i = 0; i < ws.n; ++i) {
        const mp_float d = boost::multiprecision::abs(impl->lu.matrixLU()(i, i));
        if (i == 0 || d < dmin) dmin = d;
        if (i == 0 || d > dmax) dmax = d;
    }
    impl->cond_est = dmin > 0 ? (dmax / dmin).convert_to<double>()
                              : std::numeric_limits<double>::infinity();
    if (!(dmin > 0) || impl->cond_est > std::ldexp(1.0, std::min(1000, precision_bits - 20)))
        throw SingularGram("Gram factorization collapsed at the working precision",
                           impl->cond_est);

    BiorthogonalModel model;
    model.impl_ = std::move(impl);
    return model;
}

double BiorthogonalModel::kernel(double x, double y) const
{
    if (!impl_) throw DomainError("model not built");
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
        throw DomainError("kernel requires x, y > 0");
    mp_float::default_precision(static_cast<unsigned>(impl_->digits));
    return impl_->kernel_mp(mp_float(x), mp_float(y)).convert_to<double>();
}

const WeightSystem& BiorthogonalModel::system() const { return impl_->ws; }
double BiorthogonalModel::x_cut() const { return impl_->x_cut; }
int BiorthogonalModel::node_count() const { return static_cast<int>(impl_->qx.size()); }
int BiorthogonalModel::precision_bits() const { return impl_->bits; }
double BiorthogonalModel::condition_estimate() const { return impl_->cond_est; }
const std::vector<double>& BiorthogonalModel::nodes() const { return impl_->qx_d; }
const std::vector<double>& BiorthogonalModel::quad_weights() const { return impl_->qw_d; }

double BiorthogonalModel::trace() const
{
    // sum_q H_q . G^{-1} F_q over the stored basis columns; exercises the
    // factorization against the assembled Gram without re-evaluating the
    // weights.  Quadrature-independent convergence is a separate check.
    if (!impl_) throw DomainError("model not built");
    mp_float::default_precision(static_cast<unsigned>(impl_->digits));
    mp_float acc(0);
    const int nq = static_cast<int>(impl_->qx.size());
    for (int q = 0; q < nq; ++q)
        acc += impl_->H.col(q).dot(impl_->lu.solve(impl_->F.col(q)));
    return acc.convert_to<double>();
}

double finite_kernel(const BiorthogonalModel& model, double x, double y)
{
    return model.kernel(x, y);
}

ScalingReport scaling_compare(int n, double K_shift, double L,
                              const std::vector<double>& u_grid,
                              const std::vector<double>& v_grid, double alpha,
                              double a_star, double b_star, double L1, double L2,
                              int quad_size, int precision_bits)
{
    if (n < 2 || n % 2 != 0) throw DomainError("scaling comparison needs even n >= 2");
    if (std::abs(a_star * b_star - 0.25) > 1e-10)
        throw DomainError("critical geometry requires a b = 1/4");
    if (u_grid.empty() || v_grid.empty()) throw DomainError("empty comparison grid");
    for (double u : u_grid)
        if (!(u > 0.0)) throw DomainError("grid points must be positive");
    for (double v : v_grid)
        if (!(v > 0.0)) throw DomainError("grid points must be positive");

    ScalingReport rep;
    rep.n = n;
    const double n13 = std::cbrt(static_cast<double>(n));
    const double n23 = n13 * n13;
    const ScalingParams sp = scaling_params(a_star, b_star, K_shift, L, L1, L2);
    rep.s_star = sp.s_star;
    rep.tau_star = sp.tau_star;
    rep.kappa = sp.kappa;
    rep.a_n = a_star * (1.0 + 2.0 * L1 / n23);
    rep.b_n = b_star * (1.0 + 2.0 * L2 / n23);
    rep.t_n = t_star(a_star, b_star) + K_shift / n13;
    rep.T_n = 1.0 + L / n23;
    if (!(rep.t_n > 0.0) || !(rep.t_n < 1.0))
        throw DomainError("time map left (0,1); K too large for this n");
    rep.x_scale = sp.kappa * sp.kappa * n13 * n;

    WeightSystem ws;
    ws.a = rep.a_n;
    ws.b = rep.b_n;
    ws.T = rep.T_n;
    ws.t = rep.t_n;
    ws.n = n;
    ws.alpha = alpha;
    BiorthogonalModel model = build_model(ws, quad_size, 0.0, precision_bits);

    PIIConfig cfg;
    cfg.nu = alpha + 0.5;
    const PIISolution sol = solve_hastings_mcleod(cfg);
    const LaxEntries entries = entries_from_pii(sol, rep.s_star, rep.tau_star);
    MParams mp;
    mp.nu = cfg.nu;
    mp.s = rep.s_star;
    mp.tau = rep.tau_star;
    const ModelSolution limit(mp, entries);

    for (double u : u_grid)
        for (double v : v_grid) {
            ScalingPoint pt;
            pt.u = u;
            pt.v = v;
            const double c = rep.x_scale;
            pt.finite = model.kernel(u / c, v / c) / c * std::pow(u, -alpha / 2.0) *
                        std::pow(v, alpha / 2.0);
            pt.limit = u == v ? limit.kernel_diag(u) : limit.kernel(u, v);
            pt.reldev = std::abs(pt.finite - pt.limit) /
                        std::max(std::abs(pt.limit), 1e-300);
            rep.max_reldev = std::max(rep.max_reldev, pt.reldev);
            rep.points.push_back(pt);
        }
    return rep;
}

} // namespace tacnode
