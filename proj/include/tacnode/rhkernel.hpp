#pragma once

#include "tacnode/laxpair.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace tacnode {

// Tuning knobs for the Riemann-Hilbert solve.  Zeros mean "pick automatically":
//   R    -> max(30, 10 (1+|s|)^2, 8 |s|^3)  outer radius where the series seeds
//   rho0 -> max(0.04 / (1+|s|), nu-dependent floor)  column recombination radius
struct RHOptions {
    double R = 0.0;
    double rho0 = 0.0;
    double eps_arg = 1e-3;    // angular offset of the near-axis rays
    double rel_tol = 1e-12;   // adaptive RK tolerances
    double abs_tol = 1e-14;
    double det_tol = 1e-8;    // unimodularity drift that triggers a warning
    double imag_tol = 1e-7;   // tolerated imaginary part of kernel values
    double step_floor = 1e-12;
    int bootstrap_passes = 16; // cap on solve/fit refinement rounds for the seed series
    int fit_samples = 24;     // radii per column used by the residue fit
};

// Non-fatal diagnostics (det drift, kernel imaginary part, conditioning...).
struct AccuracyWarning {
    std::string what;
    double value = 0.0;
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    double min_step = 0.0;
    double max_step = 0.0;
};

struct Provenance {
    double R = 0.0;
    double rho0 = 0.0;
    double rel_tol = 0.0;
    StepStats stats;
    double max_hat_condition = 0.0; // worst conditioning seen inverting Mhat
};

// Least-squares estimate of the large-zeta expansion M ~ (I + M1/z + M2/z^2 + ...).
struct ResidueFit {
    Eigen::Matrix4cd M1 = Eigen::Matrix4cd::Zero();
    Eigen::Matrix4cd M2 = Eigen::Matrix4cd::Zero();
    double d_hat = 0.0;        // -i (M1)_{14}
    double c_hat = 0.0;        // -i (M1)_{13}
    double fit_residual = 0.0; // relative LSQ residual
    double condition = 0.0;    // condition number of the LSQ matrix
};

// Batch evaluation of M_+ (boundary value from the upper side) on u > 0.
struct MEvaluation {
    std::vector<double> points;
    std::vector<Eigen::Matrix4cd> M_plus;    // M_+(u) per point
    std::vector<Eigen::Matrix4cd> Mhat_plus; // hat-transformed matrix at u per point
    std::vector<double> det_drift;           // |det M_+(u) - 1| per point
    Provenance provenance;
    std::vector<AccuracyWarning> warnings;
};

// Solver for the 4x4 model Riemann-Hilbert problem at r1 = r2 = 1.
//
// Construction integrates each fundamental column inward along the ray where
// it is maximally recessive (arg = eps, pi/3, 2pi/3, pi - eps), factoring off
// the explicit exponential so the integrated quantity stays O(1).  A shared
// least-squares fit over the outer radii recovers the expansion coefficients
// M1..M4 and per-column normalization; the refined series re-seeds the solve.
// The four columns are then carried along the arc |zeta| = rho0 to the
// positive axis, combined into M_+ via the ray jump matrices, and marched
// outward on the axis through the evaluation points.
//
// Evaluation methods cache the outward march lazily, so a single instance is
// not safe for concurrent use; distinct instances are independent.
class ModelSolution {
public:
    ModelSolution(const MParams& params, const LaxEntries& entries, RHOptions opt = RHOptions());

    // M_+(z) for z > 0 (limit onto the positive axis from above).
    Eigen::Matrix4cd m_plus(double z) const;

    // diag(u^{1/4},u^{-1/4},u^{1/4},u^{-1/4}) * B * M_+(sqrt(u)), u > 0.
    Eigen::Matrix4cd mhat_plus(double u) const;

    // d/du of mhat_plus via the Lax equation (no finite differences).
    Eigen::Matrix4cd mhat_prime(double u) const;

    // Tacnode kernel; switches to the L'Hopital form near the diagonal.
    double kernel(double u, double v) const;
    double kernel_diag(double u) const;

    // 2 u^a v^-a sqrt(uv) K(u^2, v^2) with a = nu - 1/2.
    double bessel_kernel(double u, double v) const;

    // Matrix of fundamental columns [s1 s2 s3 s4] at rho e^{i theta},
    // theta in [-0.5, pi].  Requires rho0 <= rho <= R/2.
    Eigen::Matrix4cd fundamental_at(double rho, double theta) const;

    // Analytic continuation of the sector-0 matrix: fundamental * Winv.
    // Coincides with the RH matrix for 0 <= arg zeta below the first ray.
    Eigen::Matrix4cd m_continued(std::complex<double> zeta) const;

    // Residue-series fit at caller-chosen radii (used by extract_residue).
    ResidueFit fit_at(const std::vector<double>& radii) const;

    const ResidueFit& residue() const { return fit_; }
    const Provenance& provenance() const { return prov_; }
    const std::vector<AccuracyWarning>& warnings() const { return warnings_; }
    const MParams& params() const { return params_; }
    double det_drift(double z) const; // |det M_+(z) - 1|

private:
    struct Checkpoint {
        double t = 0.0; // radius along a ray
        Eigen::Vector4cd v;
    };
    struct FitState; // internal: ResidueFit plus nuisance orders and scales

    Eigen::Matrix4cd u_matrix(std::complex<double> zeta) const;
    std::complex<double> phase(int col, std::complex<double> zeta) const;
    std::complex<double> dphase(int col, std::complex<double> zeta) const;
    Eigen::Vector4cd frame_column(int col, std::complex<double> zeta) const;
    Eigen::Vector4cd seed_column(int col, std::complex<double> zeta) const;
    Eigen::Vector4cd ray_deriv(int col, std::complex<double> eib, double rho,
                               const Eigen::Vector4cd& y) const;
    void solve_pass();
    FitState fit_radii(const std::vector<double>& radii) const;
    Eigen::Vector4cd ray_value(int col, double rho) const; // factored v on the ray
    Eigen::Vector4cd transported_column(int col, double rho, double theta) const;
    void assemble() const;
    Eigen::Matrix4cd axis_value(double z) const;
    void note(const std::string& what, double value) const;

    MParams params_;
    LaxEntries entries_;
    RHOptions opt_;
    std::array<double, 4> ray_angle_{};               // per column
    std::array<std::vector<Checkpoint>, 4> ray_path_; // descending radii
    std::array<std::complex<double>, 4> col_scale_;   // fitted normalization
    std::array<Eigen::Matrix4cd, 10> seed_;           // expansion coefficients for seeding
    Eigen::Matrix4cd W_, Winv_;                       // sector-0 combination matrix
    mutable Eigen::Matrix4cd M_rho0_;                 // assembled M_+ at rho0
    mutable bool assembled_ = false;                  // recombination is deferred
    ResidueFit fit_;
    mutable Provenance prov_;
    mutable std::vector<std::pair<double, Eigen::Matrix4cd>> axis_up_;   // ascending
    mutable std::vector<std::pair<double, Eigen::Matrix4cd>> axis_down_; // descending
    mutable std::vector<AccuracyWarning> warnings_;
};

// The ray jump matrices J0..J5 (positive axis, four upper rays, negative
// axis) for weight parameter p = exp(i pi nu).
std::array<Eigen::Matrix4cd, 6> rhp_jumps(double nu);

// Column combinations expressing the fundamental solutions through the
// sector-0 matrix: [s1 s2 s3 s4] = M_{sector 0} * W.
Eigen::Matrix4cd rhp_w_matrix(double nu);

// One-shot operations (each builds a ModelSolution internally).

// R = 0 or tol = 0 fall back to the RHOptions defaults. points must be
// positive and strictly increasing.
MEvaluation solve_m_plus(const MParams& params, const LaxEntries& entries,
                         const std::vector<double>& points, double R = 0.0,
                         double tol = 0.0, RHOptions opt = RHOptions());

// P(u) B M(sqrt(u)) from a caller-supplied M(sqrt(u)).
Eigen::Matrix4cd hat_transform(const Eigen::Matrix4cd& m_at_sqrt_u, double u);

double tacnode_kernel(const MParams& params, const LaxEntries& entries, double u,
                      double v, RHOptions opt = RHOptions());

// Fit of the residue matrix at the given increasing radii (>= 4 of them).
ResidueFit extract_residue(const MParams& params, const LaxEntries& entries,
                           const std::vector<double>& R_list,
                           RHOptions opt = RHOptions());

double bessel_process_kernel(const MParams& params, const LaxEntries& entries,
                             double u, double v, RHOptions opt = RHOptions());

} // namespace tacnode
