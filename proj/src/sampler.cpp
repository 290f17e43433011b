#include "tacnode/sampler.hpp"

#include "tacnode/errors.hpp"
#include "tacnode/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tacnode {

namespace {

void validate_config(const SamplerConfig& cfg)
{
    if (cfg.n < 1) throw DomainError("need at least one path");
    if (cfg.m < 2) throw DomainError("need at least two time steps");
    if (!(cfg.a > 0.0) || !(cfg.b > 0.0)) throw DomainError("endpoints must be positive");
    if (!(cfg.T > 0.0)) throw DomainError("temperature must be positive");
    if (!(cfg.alpha > -1.0)) throw DomainError("Bessel index must exceed -1");
    if (!(cfg.sigma0 > 0.0)) throw DomainError("proposal scale must be positive");
    if (!(cfg.target_accept > 0.0) || !(cfg.target_accept < 1.0))
        throw DomainError("acceptance target must lie in (0,1)");
}

constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 2.0;

} // namespace

PathEnsemble::PathEnsemble(const SamplerConfig& cfg) : cfg_(cfg), rng_(cfg.seed)
{
    validate_config(cfg_);
    tau_ = rescale_time(cfg_.T, cfg_.n, 1.0 / cfg_.m);

    const int n = cfg_.n, m = cfg_.m;
    x_.assign(n, std::vector<double>(m + 1, 0.0));
    for (int j = 0; j <= m; ++j) {
        const double t = double(j) / m;
        const double base = cfg_.a + (cfg_.b - cfg_.a) * t;
        const double bump = 4.0 * t * (1.0 - t);
        for (int i = 0; i < n; ++i) {
            const double w = (i + 0.5) / n - 0.5;
            x_[i][j] = base * (1.0 + 0.9 * bump * w);
        }
    }

    bond_.assign(n, std::vector<double>(m, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            bond_[i][j] = log_transition(x_[i][j], x_[i][j + 1]);

    sigma_.assign(n, cfg_.sigma0);
    assert_valid();
}

double PathEnsemble::time_at(int j) const
{
    if (j < 0 || j > cfg_.m) throw DomainError("slice index out of range");
    return double(j) / cfg_.m;
}

double PathEnsemble::position(int i, int j) const
{
    if (i < 0 || i >= cfg_.n) throw DomainError("path index out of range");
    if (j < 0 || j > cfg_.m) throw DomainError("slice index out of range");
    return x_[i][j];
}

double PathEnsemble::uniform01()
{
    return (rng_() >> 11) * 0x1.0p-53;
}

double PathEnsemble::normal()
{
    // Box-Muller from the raw engine; the engine's output sequence is fixed
    // by the standard, so draws are reproducible across implementations.
    const double u1 = 1.0 - uniform01(); // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// log of the squared-Bessel transition density over the slice step; kept in
// log space so acceptance ratios of far-flung proposals cannot underflow.
// The exponential factors combine into -(sqrt x - sqrt y)^2 / (2 tau).
double PathEnsemble::log_transition(double x, double y) const
{
    const double sx = std::sqrt(x), sy = std::sqrt(y);
    const double arg = sx * sy / tau_;
    return -std::log(2.0 * tau_) + 0.5 * cfg_.alpha * (std::log(y) - std::log(x)) -
           (sx - sy) * (sx - sy) / (2.0 * tau_) +
           std::log(scaled_bessel_i(cfg_.alpha, arg));
}

void PathEnsemble::assert_valid() const
{
    const int n = cfg_.n, m = cfg_.m;
    for (int i = 0; i < n; ++i) {
        if (x_[i][0] != cfg_.a || x_[i][m] != cfg_.b)
            throw std::logic_error("boundary slice mutated");
        for (int j = 1; j < m; ++j) {
            if (!(x_[i][j] > 0.0)) throw std::logic_error("nonpositive position");
            if (i > 0 && !(x_[i - 1][j] < x_[i][j]))
                throw std::logic_error("path ordering violated");
        }
    }
}

double PathEnsemble::sweep()
{
    const int n = cfg_.n, m = cfg_.m;
    std::vector<int> path_accepts(n, 0);
    long accepted = 0;

    for (int j = 1; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
            const double xo = x_[i][j];
            const double xp = xo * std::exp(sigma_[i] * normal());

            const double lo = (i > 0) ? x_[i - 1][j] : 0.0;
            const double hi =
                (i + 1 < n) ? x_[i + 1][j] : std::numeric_limits<double>::infinity();
            if (!(xp > lo) || !(xp < hi)) continue; // crossing: reject

            const double lb = log_transition(x_[i][j - 1], xp);
            const double rb = log_transition(xp, x_[i][j + 1]);
            // log-normal proposal is asymmetric; its density ratio
            // q(xp -> xo)/q(xo -> xp) contributes the extra log(xp/xo).
            const double log_ratio =
                lb + rb - bond_[i][j - 1] - bond_[i][j] + std::log(xp / xo);

            if (std::log(uniform01()) < log_ratio) {
                x_[i][j] = xp;
                bond_[i][j - 1] = lb;
                bond_[i][j] = rb;
                ++path_accepts[i];
                ++accepted;
            }
        }
    }

    if (tuning_) {
        for (int i = 0; i < n; ++i) {
            const double rate = double(path_accepts[i]) / (m - 1);
            sigma_[i] = std::clamp(sigma_[i] * std::exp(0.2 * (rate - cfg_.target_accept)),
                                   kSigmaMin, kSigmaMax);
        }
    }

    ++sweeps_;
    last_accept_ = double(accepted) / (double(n) * (m - 1));
    assert_valid();
    return last_accept_;
}

void PathEnsemble::record_sample()
{
    samples_.push_back(x_);
}

void PathEnsemble::run(int burnin, int sweeps, int thin)
{
    if (burnin < 0 || sweeps < 0) throw DomainError("sweep counts must be nonnegative");
    if (thin < 1) throw DomainError("thinning must be at least 1");
    for (int k = 0; k < burnin; ++k) sweep();
    freeze_tuning();
    for (int k = 0; k < sweeps; ++k) {
        sweep();
        if ((k + 1) % thin == 0) record_sample();
    }
}

std::vector<double> PathEnsemble::min_envelope() const
{
    std::vector<double> env(cfg_.m + 1, std::numeric_limits<double>::infinity());
    auto absorb = [&](const std::vector<std::vector<double>>& snap) {
        for (int j = 0; j <= cfg_.m; ++j)
            for (int i = 0; i < cfg_.n; ++i) env[j] = std::min(env[j], snap[i][j]);
    };
    if (samples_.empty())
        absorb(x_);
    else
        for (const auto& snap : samples_) absorb(snap);
    return env;
}

PathEnsemble init_ensemble(int n, int m, double a, double b, double T,
                           std::uint64_t seed, double alpha)
{
    SamplerConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.a = a;
    cfg.b = b;
    cfg.T = T;
    cfg.alpha = alpha;
    cfg.seed = seed;
    return PathEnsemble(cfg);
}

double mcmc_sweep(PathEnsemble& ens)
{
    return ens.sweep();
}

namespace {

int aligned_slice(const PathEnsemble& ens, double t_query)
{
    const int m = ens.step_count();
    const int j = static_cast<int>(std::lround(t_query * m));
    if (j < 0 || j > m || std::abs(t_query - double(j) / m) > 1e-6)
        throw DomainError("query time does not sit on the slice grid");
    return j;
}

std::vector<double> pooled_slice(const PathEnsemble& ens, int j)
{
    std::vector<double> pool;
    const auto& snaps = ens.samples();
    if (snaps.empty()) {
        for (int i = 0; i < ens.path_count(); ++i) pool.push_back(ens.position(i, j));
    } else {
        pool.reserve(snaps.size() * ens.path_count());
        for (const auto& snap : snaps)
            for (int i = 0; i < ens.path_count(); ++i) pool.push_back(snap[i][j]);
    }
    return pool;
}

} // namespace

SliceSummary summarize(const PathEnsemble& ens, double t_query)
{
    const int j = aligned_slice(ens, t_query);
    std::vector<double> pool = pooled_slice(ens, j);
    std::sort(pool.begin(), pool.end());

    SliceSummary out;
    out.slice = j;
    out.t = ens.time_at(j);
    out.min = pool.front();
    out.max = pool.back();
    out.pooled = static_cast<long>(pool.size());
    const std::array<double, 5> levels = {0.05, 0.25, 0.50, 0.75, 0.95};
    for (size_t k = 0; k < levels.size(); ++k) {
        const double pos = levels[k] * (pool.size() - 1);
        const size_t i0 = static_cast<size_t>(pos);
        const size_t i1 = std::min(i0 + 1, pool.size() - 1);
        out.quantiles[k] = pool[i0] + (pos - i0) * (pool[i1] - pool[i0]);
    }
    return out;
}

double envelope_fraction(const PathEnsemble& ens, double t_query, double lo, double hi)
{
    if (!(lo <= hi)) throw DomainError("empty envelope interval");
    const int j = aligned_slice(ens, t_query);
    const std::vector<double> pool = pooled_slice(ens, j);
    long inside = 0;
    for (double v : pool)
        if (v >= lo && v <= hi) ++inside;
    return double(inside) / double(pool.size());
}

} // namespace tacnode
