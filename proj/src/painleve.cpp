#include "tacnode/painleve.hpp"
#include "tacnode/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace tacnode {

namespace {

// Piecewise cubic Hermite evaluation on a uniform grid.
double hermite_eval(const std::vector<double>& xs, const std::vector<double>& f,
                    const std::vector<double>& df, double xx)
{
    if (xx < xs.front() - 1e-12 || xx > xs.back() + 1e-12)
        throw DomainError("painleve: evaluation point outside the solved interval");
    const double h = xs[1] - xs[0];
    auto i = static_cast<std::size_t>(std::clamp((xx - xs.front()) / h, 0.0,
                                                 static_cast<double>(xs.size() - 2)));
    const double t = (xx - xs[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f[i] + (t3 - 2 * t2 + t) * h * df[i]
         + (-2 * t3 + 3 * t2) * f[i + 1] + (t3 - t2) * h * df[i + 1];
}

struct Problem {
    double nu, h;
    std::vector<double> x;

    // Collocation residual.  Interior rows use the fourth-order five-point
    // second-difference (second-order three-point at the two nodes adjacent to
    // the boundary); the first and last rows carry the boundary conditions.
    void residual(const std::vector<double>& q, std::vector<double>& F) const
    {
        const auto n = q.size();
        const double h2 = h * h;
        F[0] = q[0] - std::sqrt(-x[0] / 2.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double d2;
            if (i == 1 || i == n - 2)
                d2 = (q[i - 1] - 2 * q[i] + q[i + 1]) / h2;
            else
                d2 = (-q[i - 2] + 16 * q[i - 1] - 30 * q[i] + 16 * q[i + 1] - q[i + 2])
                     / (12 * h2);
            F[i] = d2 - x[i] * q[i] - 2 * q[i] * q[i] * q[i] + nu;
        }
        const std::size_t m = n - 1;
        const double dq = (25 * q[m] - 48 * q[m - 1] + 36 * q[m - 2] - 16 * q[m - 3]
                           + 3 * q[m - 4]) / (12 * h);
        const double beta = (nu == 0.0) ? std::sqrt(x[m]) : 1.0 / x[m];
        F[m] = dq + beta * q[m];
    }

    void jacobian(const std::vector<double>& q, Eigen::SparseMatrix<double>& J) const
    {
        const auto n = q.size();
        const double h2 = h * h;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(5 * n);
        trip.emplace_back(0, 0, 1.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double diag_nl = -x[i] - 6 * q[i] * q[i];
            if (i == 1 || i == n - 2) {
                trip.emplace_back(i, i - 1, 1.0 / h2);
                trip.emplace_back(i, i, -2.0 / h2 + diag_nl);
                trip.emplace_back(i, i + 1, 1.0 / h2);
            } else {
                trip.emplace_back(i, i - 2, -1.0 / (12 * h2));
                trip.emplace_back(i, i - 1, 16.0 / (12 * h2));
                trip.emplace_back(i, i, -30.0 / (12 * h2) + diag_nl);
                trip.emplace_back(i, i + 1, 16.0 / (12 * h2));
                trip.emplace_back(i, i + 2, -1.0 / (12 * h2));
            }
        }
        const std::size_t m = n - 1;
        const double beta = (nu == 0.0) ? std::sqrt(x[m]) : 1.0 / x[m];
        trip.emplace_back(m, m, 25.0 / (12 * h) + beta);
        trip.emplace_back(m, m - 1, -48.0 / (12 * h));
        trip.emplace_back(m, m - 2, 36.0 / (12 * h));
        trip.emplace_back(m, m - 3, -16.0 / (12 * h));
        trip.emplace_back(m, m - 4, 3.0 / (12 * h));
        J.setFromTriplets(trip.begin(), trip.end());
    }
};

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double a : v)
        m = std::max(m, std::abs(a));
    return m;
}

// Damped Newton with a halving line search on the residual max-norm.
void newton_solve(const Problem& pb, std::vector<double>& q, const PIIConfig& cfg)
{
    const auto n = q.size();
    std::vector<double> F(n), Ftry(n), qtry(n);
    Eigen::SparseMatrix<double> J(static_cast<long>(n), static_cast<long>(n));
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    pb.residual(q, F);
    double fn = max_abs(F);
    for (int it = 0; it < cfg.max_newton_iter; ++it) {
        if (fn < cfg.newton_tol)
            return;
        pb.jacobian(q, J);
        lu.compute(J);
        if (lu.info() != Eigen::Success)
            throw NonConvergence("painleve: singular collocation Jacobian", fn);
        Eigen::VectorXd rhs(static_cast<long>(n));
        for (std::size_t i = 0; i < n; ++i)
            rhs[static_cast<long>(i)] = -F[i];
        Eigen::VectorXd dq = lu.solve(rhs);

        double lambda = 1.0;
        for (int ls = 0; ls <= cfg.max_line_search; ++ls) {
            for (std::size_t i = 0; i < n; ++i)
                qtry[i] = q[i] + lambda * dq[static_cast<long>(i)];
            pb.residual(qtry, Ftry);
            const double ftry = max_abs(Ftry);
            if (ftry < fn * (1.0 - 1e-4 * lambda) || ftry < cfg.newton_tol) {
                q.swap(qtry);
                F.swap(Ftry);
                fn = ftry;
                break;
            }
            lambda *= 0.5;
            if (ls == cfg.max_line_search)
                throw NonConvergence("painleve: line search stalled", fn);
        }
    }
    pb.residual(q, F);
    fn = max_abs(F);
    if (fn >= cfg.newton_tol)
        throw NonConvergence("painleve: Newton iteration budget exhausted", fn);
}

// Tail blend used as the cold-start guess: nu/x on the right, sqrt(-x/2) on
// the left, joined by a tanh switch at the origin.  For nu = 0 the right tail
// gets a small positive seed so Newton leaves the trivial branch.
double initial_guess(double nu, double x)
{
    const double w = 0.5 * (1.0 + std::tanh(x));
    const double right = (nu == 0.0) ? 0.02 * std::exp(-std::max(x, 0.0))
                                     : nu * x / (x * x + 3.0);
    const double soft = 0.5 * (-x + std::sqrt(x * x + 1.0));
    const double left = std::sqrt(soft / 2.0);
    return w * right + (1.0 - w) * left;
}

} // namespace

PIISolution solve_hastings_mcleod(const PIIConfig& cfg)
{
    if (!(cfg.nu > -0.5))
        throw DomainError("painleve: nu must exceed -1/2");
    if (cfg.grid_size < 9)
        throw DomainError("painleve: grid too coarse");
    if (!(cfg.x_min < 0.0) || !(cfg.x_max > 0.0) || !(cfg.x_min < cfg.x_max))
        throw DomainError("painleve: interval must straddle the origin");

    const auto n = static_cast<std::size_t>(cfg.grid_size);
    Problem pb;
    pb.h = (cfg.x_max - cfg.x_min) / static_cast<double>(n - 1);
    pb.x.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        pb.x[i] = cfg.x_min + pb.h * static_cast<double>(i);

    // Continuation ladder: direct solve for |nu| <= 1, then steps of <= 0.25.
    std::vector<double> rungs;
    const double a = std::min(std::abs(cfg.nu), 1.0) * (cfg.nu < 0 ? -1.0 : 1.0);
    rungs.push_back(a);
    while (std::abs(rungs.back() - cfg.nu) > 1e-15) {
        const double step = std::clamp(cfg.nu - rungs.back(), -0.25, 0.25);
        rungs.push_back(rungs.back() + step);
    }

    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i)
        q[i] = initial_guess(rungs.front(), pb.x[i]);
    for (double nu_k : rungs) {
        pb.nu = nu_k;
        newton_solve(pb, q, cfg);
    }

    PIISolution sol;
    sol.nu = cfg.nu;
    sol.x = pb.x;
    sol.q = q;

    // q' from the solved profile: fourth-order stencils, one-sided at the ends.
    sol.qprime.resize(n);
    const double h = pb.h;
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 2 && i + 2 < n)
            sol.qprime[i] = (q[i - 2] - 8 * q[i - 1] + 8 * q[i + 1] - q[i + 2]) / (12 * h);
        else if (i < 2)
            sol.qprime[i] = (-25 * q[i] + 48 * q[i + 1] - 36 * q[i + 2] + 16 * q[i + 3]
                             - 3 * q[i + 4]) / (12 * h);
        else
            sol.qprime[i] = (25 * q[i] - 48 * q[i - 1] + 36 * q[i - 2] - 16 * q[i - 3]
                             + 3 * q[i - 4]) / (12 * h);
    }

    sol.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double qq = q[i], qp = sol.qprime[i];
        sol.u[i] = qp * qp - sol.x[i] * qq * qq - qq * qq * qq * qq + 2 * cfg.nu * qq;
    }
    return sol;
}

double PIISolution::q_at(double xx) const { return hermite_eval(x, q, qprime, xx); }

double PIISolution::qprime_at(double xx) const
{
    // slope data for q' is q'' = x q + 2 q^3 - nu, exact at the nodes
    std::vector<double> q2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        q2[i] = x[i] * q[i] + 2 * q[i] * q[i] * q[i] - nu;
    return hermite_eval(x, qprime, q2, xx);
}

double PIISolution::u_at(double xx) const
{
    std::vector<double> du(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        du[i] = -q[i] * q[i];
    return hermite_eval(x, u, du, xx);
}

} // namespace tacnode
