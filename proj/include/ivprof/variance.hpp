#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "ivprof/dataset.hpp"
#include "ivprof/moments.hpp"

namespace ivprof {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

enum class SeMethod { plugin, bootstrap, within_cell };

std::string to_string(SeMethod m);

// Point estimate with its uncertainty, as reported per table cell.
struct Estimate {
    double point = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    SeMethod method = SeMethod::plugin;
    std::int64_t n = 0;
    Warnings warnings;
};

// Analytic gradient of the complier-mean map f at the sample moments.
// Entry order matches MomentVector. Throws "gradient-undefined" when
// pi_z is degenerate or pi_co = 0.
Vector6 gradient(const MomentVector& m);

// Unbiased 6x6 sample covariance of the per-unit contribution vectors
//   C_i = (X, Z(1-D)X, (1-Z)DX, Z(1-D), (1-Z)D, Z)
// over the same complete-case rows as compute_moments. Throws
// "insufficient-data" when fewer than 2 usable rows remain.
Matrix6 sample_covariance(const Dataset& data, int covariate_index);

// Indicator-only covariance over all rows (X treated as 0); pairs with the
// indicator-only compute_moments overload for share SEs.
Matrix6 sample_covariance(const Dataset& data);

// Delta-method standard error sqrt(grad' Sigma grad / n). Quadratic forms
// in [-1e-10, 0) are clamped to zero; anything lower is "invalid-covariance".
double plugin_se(const MomentVector& m, const Matrix6& sigma);

// Normal-approximation interval point +/- z_{(1+level)/2} * se.
std::pair<double, double> confidence_interval(double point, double se, double level);

struct BootstrapResult {
    Estimate estimate;           // method = bootstrap
    std::int64_t replicates = 0; // valid replicates used (== B on success)
    std::int64_t discarded = 0;  // degenerate resamples skipped
};

struct BootstrapOptions {
    std::int64_t replicates = 1000;
    std::uint64_t seed = 0;
    double level = 0.95;
    bool percentile_ci = false;  // default is the normal-approximation interval
};

// Nonparametric bootstrap SE of the complier mean. Resample attempt k draws
// from Philox substream k of the given seed; the first B nondegenerate
// attempts are kept, capped at 10*B total ("bootstrap-degenerate" beyond
// that). Deterministic in (data, B, seed) no matter how it is scheduled.
BootstrapResult bootstrap_se(const Dataset& data, int covariate_index,
                             const BootstrapOptions& options);

// Bootstrap SEs of the three strata shares, same resampling scheme.
struct ShareSes {
    double se_pi_nt = 0.0;
    double se_pi_at = 0.0;
    double se_pi_co = 0.0;
};
ShareSes bootstrap_share_se(const Dataset& data, const BootstrapOptions& options);

// Delta-method share SEs from the lower-right 3x3 block of Sigma.
ShareSes strata_share_se(const MomentVector& m, const Matrix6& sigma);

// Within-cell SEs s/sqrt(n) for the observable cells and the pooled sample.
// Cells with fewer than 2 units report nullopt plus a warning.
struct CellSes {
    std::optional<double> se_nt;
    std::optional<double> se_at;
    double se_sample = 0.0;
    std::int64_t n_nt = 0;
    std::int64_t n_at = 0;
    Warnings warnings;
};
CellSes observable_strata_se(const Dataset& data, int covariate_index);

}  // namespace ivprof
