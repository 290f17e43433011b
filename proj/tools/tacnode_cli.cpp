// Command-line front end: every module behind one binary with CSV/JSON
// output.  Exit codes: 0 success, 2 validation/usage error, 3 numerical
// failure.  Output is byte-reproducible for identical invocations unless
// --stamp is passed (which adds a timestamp header line).

#include "CLI11.hpp"
#include "json.hpp"

#include "tacnode/errors.hpp"
#include "tacnode/finiten.hpp"
#include "tacnode/laxpair.hpp"
#include "tacnode/painleve.hpp"
#include "tacnode/phase.hpp"
#include "tacnode/rhkernel.hpp"
#include "tacnode/sampler.hpp"
#include "tacnode/special.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace {

using namespace tacnode;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// "lo:hi:count" (inclusive endpoints) or a single number.
std::vector<double> parse_grid(const std::string& spec)
{
    const auto bad = [&] { return DomainError("bad grid '" + spec + "', expected lo:hi:count"); };
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);

    const auto num = [&](const std::string& s) {
        size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw bad();
        }
        if (used != s.size()) throw bad();
        return v;
    };

    if (parts.size() == 1) return {num(parts[0])};
    if (parts.size() != 3) throw bad();
    const double lo = num(parts[0]), hi = num(parts[1]);
    const double cnt = num(parts[2]);
    const int count = static_cast<int>(cnt);
    if (count < 1 || count != cnt) throw bad();
    if (count == 1) return {lo};
    if (!(hi > lo)) throw bad();
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
    return g;
}

struct Sink {
    std::ofstream file;
    std::ostream* os;
    explicit Sink(const std::string& path) : os(&std::cout)
    {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw DomainError("cannot open output file " + path);
            os = &file;
        }
    }
    std::ostream& out() { return *os; }
};

using KV = std::vector<std::pair<std::string, std::string>>;

void emit_header(std::ostream& os, const std::string& cmd, const KV& cfg, bool stamp)
{
    os << "# tacnode " << kVersion << "\n";
    os << "# command: " << cmd << "\n";
    os << "# config:";
    for (const auto& [k, v] : cfg) os << ' ' << k << '=' << v;
    os << "\n";
    if (stamp) {
        char buf[64];
        std::time_t now = std::time(nullptr);
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << "# generated: " << buf << "\n";
    }
}

// Run `jobs` closures over a pool; each worker gets an engine from make_engine
// and results land by index, so the output order never depends on scheduling.
template <typename Engine, typename Make, typename Eval>
void fan_out(size_t jobs, int threads, Make make_engine, Eval eval)
{
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
    if (workers == 1) {
        Engine eng = make_engine();
        for (size_t k = 0; k < jobs; ++k) eval(eng, k);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                Engine eng = make_engine();
                while (true) {
                    const size_t k = next.fetch_add(1);
                    if (k >= jobs) break;
                    eval(eng, k);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

int default_threads()
{
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// ---------------------------------------------------------------- pii ----

struct PiiArgs {
    double nu = 0.5;
    std::string grid = "-10:10:201";
    double x_min = -20.0, x_max = 20.0;
    int collocation = 4001;
    std::string output;
    bool stamp = false;
};

void run_pii(const PiiArgs& a)
{
    PIIConfig cfg;
    cfg.nu = a.nu;
    cfg.x_min = a.x_min;
    cfg.x_max = a.x_max;
    cfg.grid_size = a.collocation;
    const std::vector<double> xs = parse_grid(a.grid);
    for (double x : xs)
        if (x < cfg.x_min || x > cfg.x_max)
            throw DomainError("grid point outside the solve window");

    const PIISolution sol = solve_hastings_mcleod(cfg);

    Sink sink(a.output);
    emit_header(sink.out(), "pii",
                {{"nu", fmt(a.nu)},
                 {"grid", a.grid},
                 {"x_min", fmt(cfg.x_min)},
                 {"x_max", fmt(cfg.x_max)},
                 {"collocation", std::to_string(cfg.grid_size)}},
                a.stamp);
    sink.out() << "# columns: x,q,qprime,u\n";
    for (double x : xs)
        sink.out() << fmt(x) << ',' << fmt(sol.q_at(x)) << ',' << fmt(sol.qprime_at(x))
                   << ',' << fmt(sol.u_at(x)) << "\n";
}

// ---------------------------------------------------------- lax-check ----

struct LaxArgs {
    double nu = 0.5;
    double s = 0.0, tau = 0.0;
    double step = 1e-3;
    std::string output;
    bool stamp = false;
};

void run_lax_check(const LaxArgs& a)
{
    PIIConfig cfg;
    cfg.nu = a.nu;
    const PIISolution sol = solve_hastings_mcleod(cfg);
    const LaxEntries e = entries_from_pii(sol, a.s, a.tau);
    const CompatReport rep = check_compatibility(sol, a.s, a.tau, a.step);

    Sink sink(a.output);
    emit_header(sink.out(), "lax-check",
                {{"nu", fmt(a.nu)},
                 {"s", fmt(a.s)},
                 {"tau", fmt(a.tau)},
                 {"step", fmt(a.step)},
                 {"d", fmt(e.d)},
                 {"c", fmt(e.c)},
                 {"b", fmt(e.b)},
                 {"x_star", fmt(e.x_star)}},
                a.stamp);
    sink.out() << "# columns: check,residual\n";
    const std::vector<std::pair<const char*, double>> rows = {
        {"c_eq", rep.c_eq},
        {"d_eq", rep.d_eq},
        {"dpp_eq", rep.dpp_eq},
        {"b_tau_eq", rep.b_tau_eq},
        {"zero_curvature", rep.zero_curvature},
    };
    double shown_max = 0.0;
    for (const auto& [name, value] : rows) {
        if (!std::isfinite(value)) continue; // b_tau_eq is undefined at tau = 0
        shown_max = std::max(shown_max, std::abs(value));
        sink.out() << name << ',' << fmt(value) << "\n";
    }
    sink.out() << "max," << fmt(shown_max) << "\n";
}

// ------------------------------------------------------------- kernel ----

struct KernelArgs {
    double nu = 0.5;
    double s = 0.0, tau = 0.0;
    std::string grid;
    bool diag_only = false;
    bool bessel = false;
    double R = 0.0, rho0 = 0.0;
    int threads = default_threads();
    std::string output;
    bool stamp = false;
};

void run_kernel(const KernelArgs& a)
{
    PIIConfig cfg;
    cfg.nu = a.nu;
    const PIISolution sol = solve_hastings_mcleod(cfg);
    const LaxEntries entries = entries_from_pii(sol, a.s, a.tau);
    MParams mp;
    mp.nu = a.nu;
    mp.s = a.s;
    mp.tau = a.tau;
    RHOptions opt;
    opt.R = a.R;
    opt.rho0 = a.rho0;

    const std::vector<double> grid = parse_grid(a.grid);
    const size_t jobs = a.diag_only ? grid.size() : grid.size() * grid.size();
    std::vector<std::string> rows(jobs);

    // Engines cache their axis marches and are not safe to share; the lead
    // engine also feeds the provenance header.
    ModelSolution lead(mp, entries, opt);
    auto eval = [&](ModelSolution* eng, size_t k) {
        if (a.diag_only) {
            const double u = grid[k];
            const double val = a.bessel ? eng->bessel_kernel(u, u) : eng->kernel_diag(u);
            rows[k] = fmt(u) + "," + fmt(val);
        } else {
            const double u = grid[k / grid.size()];
            const double v = grid[k % grid.size()];
            const double val = a.bessel ? eng->bessel_kernel(u, v) : eng->kernel(u, v);
            rows[k] = fmt(u) + "," + fmt(v) + "," + fmt(val);
        }
    };
    if (a.threads <= 1 || jobs <= 1) {
        for (size_t k = 0; k < jobs; ++k) eval(&lead, k);
    } else {
        const int workers = std::max(1, std::min<int>(a.threads, static_cast<int>(jobs)));
        std::atomic<size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        std::vector<std::unique_ptr<ModelSolution>> extra;
        std::vector<ModelSolution*> engines(workers, nullptr);
        engines[0] = &lead;
        for (int w = 1; w < workers; ++w) {
            extra.push_back(std::make_unique<ModelSolution>(mp, entries, opt));
            engines[w] = extra.back().get();
        }
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    while (true) {
                        const size_t k = next.fetch_add(1);
                        if (k >= jobs) break;
                        eval(engines[w], k);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    Sink sink(a.output);
    emit_header(sink.out(), "kernel",
                {{"nu", fmt(a.nu)},
                 {"s", fmt(a.s)},
                 {"tau", fmt(a.tau)},
                 {"grid", a.grid},
                 {"diag_only", a.diag_only ? "1" : "0"},
                 {"bessel", a.bessel ? "1" : "0"},
                 {"threads", std::to_string(a.threads)}},
                a.stamp);
    const Provenance& prov = lead.provenance();
    sink.out() << "# provenance: R=" << fmt(prov.R) << " rho0=" << fmt(prov.rho0)
               << " rel_tol=" << fmt(prov.rel_tol) << " accepted=" << prov.stats.accepted
               << " rejected=" << prov.stats.rejected
               << " fit_residual=" << fmt(lead.residue().fit_residual)
               << " max_hat_condition=" << fmt(prov.max_hat_condition) << "\n";
    for (const AccuracyWarning& w : lead.warnings())
        sink.out() << "# warning: " << w.what << " value=" << fmt(w.value) << "\n";
    sink.out() << (a.diag_only ? "# columns: u,K\n" : "# columns: u,v,K\n");
    for (const std::string& r : rows) sink.out() << r << "\n";
}

// ------------------------------------------------------------ finite-n ----

int resolve_precision_bits(bool flag_given, int flag_value)
{
    if (flag_given) return flag_value;
    if (const char* env = std::getenv("TACNODE_PRECISION_BITS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0')
            throw DomainError("TACNODE_PRECISION_BITS must be an integer");
        return static_cast<int>(v);
    }
    return 256;
}

struct FiniteArgs {
    int n = 8;
    double a = 0.5, b = 0.5, bigT = 1.0, t = 0.5, alpha = 0.0;
    std::string grid;
    int quad = 0;
    int precision_bits = 256;
    bool bits_given = false;
    bool diag_only = false;
    int threads = default_threads();
    std::string output;
    bool stamp = false;
};

void run_finiten(const FiniteArgs& a)
{
    WeightSystem ws;
    ws.a = a.a;
    ws.b = a.b;
    ws.T = a.bigT;
    ws.t = a.t;
    ws.n = a.n;
    ws.alpha = a.alpha;
    const int bits = resolve_precision_bits(a.bits_given, a.precision_bits);
    const BiorthogonalModel model = build_model(ws, a.quad, 0.0, bits);

    const std::vector<double> grid = parse_grid(a.grid);
    const size_t jobs = a.diag_only ? grid.size() : grid.size() * grid.size();
    std::vector<std::string> rows(jobs);
    // The model is immutable after build; workers share it.
    fan_out<int>(
        jobs, a.threads, [] { return 0; },
        [&](int&, size_t k) {
            if (a.diag_only) {
                const double x = grid[k];
                rows[k] = fmt(x) + "," + fmt(model.kernel(x, x));
            } else {
                const double x = grid[k / grid.size()];
                const double y = grid[k % grid.size()];
                rows[k] = fmt(x) + "," + fmt(y) + "," + fmt(model.kernel(x, y));
            }
        });

    Sink sink(a.output);
    emit_header(sink.out(), "finite-n",
                {{"n", std::to_string(a.n)},
                 {"a", fmt(a.a)},
                 {"b", fmt(a.b)},
                 {"bigT", fmt(a.bigT)},
                 {"t", fmt(a.t)},
                 {"alpha", fmt(a.alpha)},
                 {"grid", a.grid},
                 {"quad", std::to_string(model.node_count())},
                 {"precision_bits", std::to_string(model.precision_bits())},
                 {"diag_only", a.diag_only ? "1" : "0"},
                 {"threads", std::to_string(a.threads)}},
                a.stamp);
    sink.out() << "# provenance: x_cut=" << fmt(model.x_cut())
               << " condition=" << fmt(model.condition_estimate())
               << " trace=" << fmt(model.trace()) << "\n";
    sink.out() << (a.diag_only ? "# columns: x,K\n" : "# columns: x,y,K\n");
    for (const std::string& r : rows) sink.out() << r << "\n";
}

// ------------------------------------------------------------- scaling ----

struct ScalingArgs {
    int n = 8;
    double K = 0.0, L = 0.0;
    double alpha = 0.0;
    double a_star = 0.5, b_star = 0.5;
    double L1 = 0.0, L2 = 0.0;
    std::string grid;
    int quad = 0;
    int precision_bits = 256;
    bool bits_given = false;
    std::string output;
    bool stamp = false;
};

void run_scaling(const ScalingArgs& a)
{
    const int bits = resolve_precision_bits(a.bits_given, a.precision_bits);
    const std::vector<double> grid = parse_grid(a.grid);
    const ScalingReport rep = scaling_compare(a.n, a.K, a.L, grid, grid, a.alpha,
                                              a.a_star, a.b_star, a.L1, a.L2,
                                              a.quad, bits);

    Sink sink(a.output);
    emit_header(sink.out(), "scaling",
                {{"n", std::to_string(a.n)},
                 {"K", fmt(a.K)},
                 {"L", fmt(a.L)},
                 {"alpha", fmt(a.alpha)},
                 {"a_star", fmt(a.a_star)},
                 {"b_star", fmt(a.b_star)},
                 {"L1", fmt(a.L1)},
                 {"L2", fmt(a.L2)},
                 {"grid", a.grid},
                 {"precision_bits", std::to_string(bits)}},
                a.stamp);
    sink.out() << "# provenance: s_star=" << fmt(rep.s_star) << " tau_star=" << fmt(rep.tau_star)
               << " kappa=" << fmt(rep.kappa) << " t_n=" << fmt(rep.t_n)
               << " T_n=" << fmt(rep.T_n) << " a_n=" << fmt(rep.a_n) << " b_n=" << fmt(rep.b_n)
               << " x_scale=" << fmt(rep.x_scale) << " max_reldev=" << fmt(rep.max_reldev)
               << "\n";
    sink.out() << "# columns: u,v,finite,limit,reldev\n";
    for (const ScalingPoint& p : rep.points)
        sink.out() << fmt(p.u) << ',' << fmt(p.v) << ',' << fmt(p.finite) << ','
                   << fmt(p.limit) << ',' << fmt(p.reldev) << "\n";
}

// --------------------------------------------------------------- phase ----

struct PhaseArgs {
    double a = 0.5, b = 0.5;
    double t = -1.0, T = -1.0;
    std::string sweep_t, sweep_T;
    bool boundary = false;
    std::string output;
    bool stamp = false;
};

void run_phase(const PhaseArgs& a)
{
    Sink sink(a.output);
    emit_header(sink.out(), "phase",
                {{"a", fmt(a.a)},
                 {"b", fmt(a.b)},
                 {"t_star", fmt(t_star(a.a, a.b))}},
                a.stamp);

    if (a.boundary) {
        if (a.sweep_t.empty()) throw DomainError("--boundary-curve needs --sweep-t");
        sink.out() << "# columns: t,T_boundary\n";
        for (double t : parse_grid(a.sweep_t))
            sink.out() << fmt(t) << ',' << fmt(boundary_temperature(a.a, a.b, t)) << "\n";
        return;
    }
    if (!a.sweep_t.empty() || !a.sweep_T.empty()) {
        if (a.sweep_t.empty() || a.sweep_T.empty())
            throw DomainError("sweep mode needs both --sweep-t and --sweep-T");
        sink.out() << "# columns: t,T,case\n";
        for (double t : parse_grid(a.sweep_t))
            for (double T : parse_grid(a.sweep_T))
                sink.out() << fmt(t) << ',' << fmt(T) << ','
                           << phase_name(classify_phase(a.a, a.b, t, T)) << "\n";
        return;
    }
    if (a.t < 0.0 || a.T < 0.0)
        throw DomainError("give a point (--t and --T), sweeps, or --boundary-curve");
    sink.out() << "# columns: t,T,case\n";
    sink.out() << fmt(a.t) << ',' << fmt(a.T) << ','
               << phase_name(classify_phase(a.a, a.b, a.t, a.T)) << "\n";
}

// -------------------------------------------------------------- sample ----

struct SampleArgs {
    int n = 20, m = 64;
    double a = 0.5, b = 0.5, bigT = 1.0, alpha = 0.0;
    int sweeps = 10000, burnin = 10000, thin = 10;
    std::uint64_t seed = 1;
    std::string stats_path;
    std::string output;
    bool stamp = false;
};

void run_sample(const SampleArgs& a)
{
    PathEnsemble ens = init_ensemble(a.n, a.m, a.a, a.b, a.bigT, a.seed, a.alpha);
    ens.run(a.burnin, a.sweeps, a.thin);

    const std::vector<double> env = ens.min_envelope();
    int argmin = 0;
    for (size_t j = 0; j < env.size(); ++j)
        if (env[j] < env[argmin]) argmin = static_cast<int>(j);
    double sig_min = ens.proposal_sigma()[0], sig_max = sig_min;
    for (double s : ens.proposal_sigma()) {
        sig_min = std::min(sig_min, s);
        sig_max = std::max(sig_max, s);
    }

    json stats = {
        {"acceptance_rate", ens.acceptance_rate()},
        {"sweeps", a.sweeps},
        {"burnin", a.burnin},
        {"thin", a.thin},
        {"samples", ens.samples().size()},
        {"seed", a.seed},
        {"sigma_min", sig_min},
        {"sigma_max", sig_max},
        {"min_position", env[argmin]},
        {"argmin_t", ens.time_at(argmin)},
    };

    Sink sink(a.output);
    emit_header(sink.out(), "sample",
                {{"n", std::to_string(a.n)},
                 {"m", std::to_string(a.m)},
                 {"a", fmt(a.a)},
                 {"b", fmt(a.b)},
                 {"bigT", fmt(a.bigT)},
                 {"alpha", fmt(a.alpha)},
                 {"sweeps", std::to_string(a.sweeps)},
                 {"burnin", std::to_string(a.burnin)},
                 {"thin", std::to_string(a.thin)},
                 {"seed", std::to_string(a.seed)}},
                a.stamp);
    sink.out() << "# columns: path,slice,t,x\n";
    for (int i = 0; i < ens.path_count(); ++i)
        for (int j = 0; j <= ens.step_count(); ++j)
            sink.out() << i << ',' << j << ',' << fmt(ens.time_at(j)) << ','
                       << fmt(ens.position(i, j)) << "\n";
    if (a.stats_path.empty()) {
        sink.out() << "# stats: " << stats.dump() << "\n";
    } else {
        std::ofstream sf(a.stats_path);
        if (!sf) throw DomainError("cannot open stats file " + a.stats_path);
        sf << stats.dump(2) << "\n";
    }
}

// ------------------------------------------------------------ selftest ----

struct SelftestArgs {
    std::string output;
};

bool run_selftest(const SelftestArgs& a)
{
    Sink sink(a.output);
    bool all_ok = true;
    const auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        all_ok = all_ok && ok;
        sink.out() << (ok ? "ok   " : "FAIL ") << name;
        if (!detail.empty()) sink.out() << " (" << detail << ")";
        sink.out() << "\n";
    };

    PIIConfig cfg;
    cfg.nu = 0.75;
    const PIISolution sol = solve_hastings_mcleod(cfg);

    {
        const double right = std::abs(sol.q_at(20.0) * 20.0 / 0.75 - 1.0);
        const double left = std::abs(sol.q_at(-20.0) / std::sqrt(10.0) - 1.0);
        report("hastings-mcleod tails", right <= 1e-2 && left <= 5e-3,
               "right " + fmt(right) + ", left " + fmt(left));
    }
    {
        double worst = 0.0;
        for (double x = -5.0; x <= 5.0; x += 0.5) {
            const double h = 1e-3;
            const double du = (sol.u_at(x + h) - sol.u_at(x - h)) / (2 * h);
            worst = std::max(worst, std::abs(du + sol.q_at(x) * sol.q_at(x)));
        }
        report("hamiltonian identity", worst <= 1e-5, "max " + fmt(worst));
    }
    {
        const CompatReport rep = check_compatibility(sol, 0.5, 0.5);
        report("lax compatibility", rep.max_residual() <= 1e-4, "max " + fmt(rep.max_residual()));
    }
    {
        MParams mp;
        mp.nu = 0.75;
        mp.s = 0.3;
        const LaxEntries e = entries_from_pii(sol, 0.3, 0.0);
        ModelSolution engine(mp, e);
        const double drift = std::max(engine.det_drift(1.0), engine.det_drift(2.0));
        report("rh determinant", drift <= 1e-8, "drift " + fmt(drift));
        const double sym = std::abs(engine.kernel(0.8, 1.7) - engine.kernel(1.7, 0.8));
        report("kernel symmetry", sym <= 1e-8, "asym " + fmt(sym));
        const double dfit = std::abs(engine.residue().d_hat - e.d);
        report("residue vs painleve", dfit <= 1e-4, "delta " + fmt(dfit));
        const double kd = engine.kernel_diag(1.0);
        report("kernel reference value", std::abs(kd - 0.069892) <= 1e-4, "K " + fmt(kd));
    }
    {
        WeightSystem ws;
        ws.n = 4;
        ws.alpha = 0.25;
        const BiorthogonalModel model = build_model(ws);
        const double tr = model.trace();
        report("finite-n trace", std::abs(tr - 4.0) <= 1e-8, "trace " + fmt(tr));
        const bool pos = model.kernel(0.05, 0.05) > 0.0 && model.kernel(1.0, 1.0) > 0.0;
        report("finite-n positivity", pos, "");
    }
    {
        const bool ok = classify_phase(0.5, 0.5, 0.5, 0.8) == PhaseCase::CaseI &&
                        classify_phase(0.5, 0.5, 0.5, 1.5) == PhaseCase::CaseIII &&
                        classify_phase(0.5, 0.5, 0.1, 1.5) == PhaseCase::CaseII &&
                        classify_phase(0.5, 0.5, 0.5, 1.0) == PhaseCase::Tacnode;
        report("phase classification", ok, "");
        const double bmin = boundary_temperature(0.5, 0.5, t_star(0.5, 0.5));
        report("boundary minimum", std::abs(bmin - 1.0) <= 1e-12, "T " + fmt(bmin));
    }
    {
        PathEnsemble ens = init_ensemble(6, 16, 0.5, 0.5, 0.9, 123);
        PathEnsemble twin = init_ensemble(6, 16, 0.5, 0.5, 0.9, 123);
        bool ok = true;
        for (int k = 0; k < 30; ++k) {
            ens.sweep();
            twin.sweep();
        }
        ok = ok && (ens.paths() == twin.paths());
        for (int j = 1; j < 16 && ok; ++j)
            for (int i = 0; i < 6 && ok; ++i) {
                ok = ens.position(i, j) > 0.0;
                if (i > 0) ok = ok && ens.position(i - 1, j) < ens.position(i, j);
            }
        report("sampler invariants", ok, "");
    }
    return all_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hard-edge tacnode kernel toolkit"};
    app.require_subcommand(1);

    PiiArgs pii;
    CLI::App* cmd_pii = app.add_subcommand("pii", "Hastings-McLeod solution of inhomogeneous Painleve II");
    cmd_pii->add_option("--nu", pii.nu, "inhomogeneity parameter (> -1/2)");
    cmd_pii->add_option("--grid", pii.grid, "output x grid lo:hi:count");
    cmd_pii->add_option("--xmin", pii.x_min, "left end of the solve window");
    cmd_pii->add_option("--xmax", pii.x_max, "right end of the solve window");
    cmd_pii->add_option("--collocation", pii.collocation, "collocation node count");
    cmd_pii->add_option("-o,--output", pii.output, "output file (default stdout)");
    cmd_pii->add_flag("--stamp", pii.stamp, "add a timestamp header line");

    LaxArgs lax;
    CLI::App* cmd_lax = app.add_subcommand("lax-check", "compatibility residuals of the Lax system");
    cmd_lax->add_option("--nu", lax.nu, "inhomogeneity parameter");
    cmd_lax->add_option("--s", lax.s, "deformation parameter s");
    cmd_lax->add_option("--tau", lax.tau, "deformation parameter tau");
    cmd_lax->add_option("--step", lax.step, "finite-difference step");
    cmd_lax->add_option("-o,--output", lax.output, "output file (default stdout)");
    cmd_lax->add_flag("--stamp", lax.stamp, "add a timestamp header line");

    KernelArgs ker;
    CLI::App* cmd_ker = app.add_subcommand("kernel", "tacnode kernel from the model Riemann-Hilbert problem");
    cmd_ker->add_option("--nu", ker.nu, "Bessel-type parameter nu = alpha + 1/2");
    cmd_ker->add_option("--s", ker.s, "deformation parameter s");
    cmd_ker->add_option("--tau", ker.tau, "deformation parameter tau");
    cmd_ker->add_option("--grid", ker.grid, "u grid lo:hi:count")->required();
    cmd_ker->add_flag("--diag-only", ker.diag_only, "emit K(u,u) rows only");
    cmd_ker->add_flag("--bessel", ker.bessel, "emit the Bessel-process form of the kernel");
    cmd_ker->add_option("--R", ker.R, "outer seeding radius (0 = auto)");
    cmd_ker->add_option("--rho0", ker.rho0, "recombination radius (0 = auto)");
    cmd_ker->add_option("--threads", ker.threads, "worker pool size");
    cmd_ker->add_option("-o,--output", ker.output, "output file (default stdout)");
    cmd_ker->add_flag("--stamp", ker.stamp, "add a timestamp header line");

    FiniteArgs fin;
    CLI::App* cmd_fin = app.add_subcommand("finite-n", "finite-n biorthogonal ensemble kernel");
    cmd_fin->add_option("--n", fin.n, "path count (even)");
    cmd_fin->add_option("--a", fin.a, "starting point");
    cmd_fin->add_option("--b", fin.b, "endpoint");
    cmd_fin->add_option("--bigT", fin.bigT, "temperature");
    cmd_fin->add_option("--t", fin.t, "observation time in (0,1)");
    cmd_fin->add_option("--alpha", fin.alpha, "Bessel index (> -1)");
    cmd_fin->add_option("--grid", fin.grid, "x grid lo:hi:count")->required();
    cmd_fin->add_option("--quad", fin.quad, "quadrature nodes (0 = auto)");
    CLI::Option* fin_bits = cmd_fin->add_option("--precision-bits", fin.precision_bits,
                                                "Gram precision (default env TACNODE_PRECISION_BITS or 256)");
    cmd_fin->add_flag("--diag-only", fin.diag_only, "emit K(x,x) rows only");
    cmd_fin->add_option("--threads", fin.threads, "worker pool size");
    cmd_fin->add_option("-o,--output", fin.output, "output file (default stdout)");
    cmd_fin->add_flag("--stamp", fin.stamp, "add a timestamp header line");

    ScalingArgs sca;
    CLI::App* cmd_sca = app.add_subcommand("scaling", "finite-n kernel against its tacnode limit");
    cmd_sca->add_option("--n", sca.n, "path count (even)");
    cmd_sca->add_option("--K", sca.K, "time shift coefficient");
    cmd_sca->add_option("--L", sca.L, "temperature shift coefficient");
    cmd_sca->add_option("--alpha", sca.alpha, "Bessel index (> -1)");
    cmd_sca->add_option("--a-star", sca.a_star, "base starting point (a* b* = 1/4)");
    cmd_sca->add_option("--b-star", sca.b_star, "base endpoint");
    cmd_sca->add_option("--L1", sca.L1, "starting-point shift coefficient");
    cmd_sca->add_option("--L2", sca.L2, "endpoint shift coefficient");
    cmd_sca->add_option("--grid", sca.grid, "u (and v) grid lo:hi:count")->required();
    cmd_sca->add_option("--quad", sca.quad, "quadrature nodes (0 = auto)");
    CLI::Option* sca_bits = cmd_sca->add_option("--precision-bits", sca.precision_bits,
                                                "Gram precision (default env TACNODE_PRECISION_BITS or 256)");
    cmd_sca->add_option("-o,--output", sca.output, "output file (default stdout)");
    cmd_sca->add_flag("--stamp", sca.stamp, "add a timestamp header line");

    PhaseArgs pha;
    CLI::App* cmd_pha = app.add_subcommand("phase", "phase classification and boundary curve");
    cmd_pha->add_option("--a", pha.a, "starting point");
    cmd_pha->add_option("--b", pha.b, "endpoint");
    cmd_pha->add_option("--t", pha.t, "time of a single query point");
    cmd_pha->add_option("--T", pha.T, "temperature of a single query point");
    cmd_pha->add_option("--sweep-t", pha.sweep_t, "t sweep lo:hi:count");
    cmd_pha->add_option("--sweep-T", pha.sweep_T, "T sweep lo:hi:count");
    cmd_pha->add_flag("--boundary-curve", pha.boundary, "emit the II/III transition curve over --sweep-t");
    cmd_pha->add_option("-o,--output", pha.output, "output file (default stdout)");
    cmd_pha->add_flag("--stamp", pha.stamp, "add a timestamp header line");

    SampleArgs sam;
    CLI::App* cmd_sam = app.add_subcommand("sample", "MCMC ensemble of non-intersecting squared Bessel bridges");
    cmd_sam->add_option("--n", sam.n, "path count");
    cmd_sam->add_option("--m", sam.m, "time steps");
    cmd_sam->add_option("--a", sam.a, "starting point");
    cmd_sam->add_option("--b", sam.b, "endpoint");
    cmd_sam->add_option("--bigT", sam.bigT, "temperature");
    cmd_sam->add_option("--alpha", sam.alpha, "Bessel index (> -1)");
    cmd_sam->add_option("--sweeps", sam.sweeps, "post burn-in sweeps");
    cmd_sam->add_option("--burnin", sam.burnin, "burn-in sweeps (proposal tuning)");
    cmd_sam->add_option("--thin", sam.thin, "record every thin-th sweep");
    cmd_sam->add_option("--seed", sam.seed, "RNG seed");
    cmd_sam->add_option("--stats", sam.stats_path, "write the JSON stats here instead of a trailing comment");
    cmd_sam->add_option("-o,--output", sam.output, "output file (default stdout)");
    cmd_sam->add_flag("--stamp", sam.stamp, "add a timestamp header line");

    SelftestArgs st;
    CLI::App* cmd_st = app.add_subcommand("selftest", "run the cross-module invariant suite");
    cmd_st->add_option("-o,--output", st.output, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    fin.bits_given = fin_bits->count() > 0;
    sca.bits_given = sca_bits->count() > 0;

    try {
        if (cmd_pii->parsed()) run_pii(pii);
        else if (cmd_lax->parsed()) run_lax_check(lax);
        else if (cmd_ker->parsed()) run_kernel(ker);
        else if (cmd_fin->parsed()) run_finiten(fin);
        else if (cmd_sca->parsed()) run_scaling(sca);
        else if (cmd_pha->parsed()) run_phase(pha);
        else if (cmd_sam->parsed()) run_sample(sam);
        else if (cmd_st->parsed()) {
            if (!run_selftest(st)) return 3;
        }
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
