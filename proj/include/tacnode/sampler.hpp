#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace tacnode {

// Metropolis sampler for n non-intersecting squared Bessel bridges pinned at
// a (t = 0) and b (t = 1), discretized on m+1 equispaced time slices.  The
// target is the product of squared-Bessel transition densities between
// consecutive slices times the strict-ordering indicator at interior slices;
// proposals are multiplicative log-normal, which keeps positions positive
// without reflection bookkeeping.

struct SamplerConfig {
    int n = 20;                  // path count
    int m = 64;                  // time steps; slices are j = 0..m
    double a = 0.5;              // common starting point, > 0
    double b = 0.5;              // common endpoint, > 0
    double T = 1.0;              // temperature in the time rescaling
    double alpha = 0.0;          // squared Bessel index, > -1
    std::uint64_t seed = 1;
    double sigma0 = 0.5;         // initial proposal scale in log space
    double target_accept = 0.3;  // per-path adaptation target during burn-in
};

// Pooled order statistics of one slice over the retained samples.
struct SliceSummary {
    int slice = 0;
    double t = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::array<double, 5> quantiles{}; // 5, 25, 50, 75, 95 percent
    long pooled = 0;                   // number of pooled positions
};

class PathEnsemble {
public:
    explicit PathEnsemble(const SamplerConfig& cfg);

    const SamplerConfig& config() const { return cfg_; }
    int path_count() const { return cfg_.n; }
    int step_count() const { return cfg_.m; }
    double time_at(int j) const;
    double tau_step() const { return tau_; }

    // x[i][j]: path i (ordered bottom to top) at slice j.
    double position(int i, int j) const;
    const std::vector<std::vector<double>>& paths() const { return x_; }

    // One Metropolis sweep over all interior sites; returns the acceptance
    // rate of the sweep.  While tuning, each path's proposal scale adapts
    // toward config().target_accept; freeze_tuning() pins the scales.
    double sweep();
    void freeze_tuning() { tuning_ = false; }
    bool tuning() const { return tuning_; }
    std::uint64_t sweeps_done() const { return sweeps_; }
    double acceptance_rate() const { return last_accept_; }
    const std::vector<double>& proposal_sigma() const { return sigma_; }

    // Snapshot retention for statistics; summarize() and min_envelope() fall
    // back to the current state when nothing has been recorded.
    void record_sample();
    const std::vector<std::vector<std::vector<double>>>& samples() const { return samples_; }

    // burnin tuned sweeps, then `sweeps` frozen ones recording every thin-th.
    void run(int burnin, int sweeps, int thin);

    // Per-slice minimum position pooled over retained samples.
    std::vector<double> min_envelope() const;

private:
    double uniform01();
    double normal();
    double log_transition(double x, double y) const;
    void assert_valid() const;

    SamplerConfig cfg_;
    double tau_ = 0.0;                     // diffusion step between slices
    std::vector<std::vector<double>> x_;   // [path][slice]
    std::vector<std::vector<double>> bond_; // [i][j] = log p_tau(x[i][j], x[i][j+1])
    std::vector<double> sigma_;            // per-path proposal scale
    std::mt19937_64 rng_;
    bool tuning_ = true;
    std::uint64_t sweeps_ = 0;
    double last_accept_ = 0.0;
    std::vector<std::vector<std::vector<double>>> samples_;
};

// Ordered fan of linear interpolations between the pinned endpoints; strictly
// positive, strictly ordered at every interior slice, and deterministic in
// the seed.
PathEnsemble init_ensemble(int n, int m, double a, double b, double T,
                           std::uint64_t seed, double alpha = 0.0);

// Single sweep; returns the acceptance rate.
double mcmc_sweep(PathEnsemble& ens);

// Order statistics of the slice nearest t_query (which must sit on the slice
// grid j/m within a small tolerance).
SliceSummary summarize(const PathEnsemble& ens, double t_query);

// Fraction of pooled positions of that slice lying inside [lo, hi].
double envelope_fraction(const PathEnsemble& ens, double t_query, double lo, double hi);

} // namespace tacnode
