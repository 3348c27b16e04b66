#pragma once

#include <cstdint>
#include <optional>

#include "ivprof/dataset.hpp"
#include "ivprof/error.hpp"

namespace ivprof {

// The six sample moments behind the complier plug-in estimator, all taken
// over the same complete-case rows for one covariate:
//   mu      mean of X
//   mu_vnt  mean of Z(1-D)X     (observable never-taker cell, X-weighted)
//   mu_vat  mean of (1-Z)DX     (observable always-taker cell, X-weighted)
//   pi_vnt  mean of Z(1-D)
//   pi_vat  mean of (1-Z)D
//   pi_z    mean of Z
struct MomentVector {
    double mu = 0.0;
    double mu_vnt = 0.0;
    double mu_vat = 0.0;
    double pi_vnt = 0.0;
    double pi_vat = 0.0;
    double pi_z = 0.0;
    std::int64_t n = 0;          // rows used (complete cases)
    std::int64_t n_dropped = 0;  // rows skipped because the covariate was missing
};

struct StrataShares {
    double pi_nt = 0.0;
    double pi_at = 0.0;
    double pi_co = 0.0;
    // E[D|Z=1] - E[D|Z=0]; equals pi_co by construction (same expression,
    // asserted bit-exact in tests).
    double first_stage = 0.0;
};

// Cell means for the individually identified strata. A stratum whose
// observable cell is empty (one-sided compliance) reports nullopt plus a
// structured warning instead of failing the run.
struct ObservableMeans {
    std::optional<double> mu_nt;
    std::optional<double> mu_at;
    std::int64_t n_nt = 0;
    std::int64_t n_at = 0;
    Warnings warnings;
};

// Default threshold below which a positive complier share is considered
// weakly identified; callers attach a "weak-complier-share" warning.
inline constexpr double kWeakComplierShareThreshold = 0.01;

// Six sample means over the complete-case rows of one covariate.
// Compensated summation keeps the results stable and reproducible.
// Throws "empty-data" (no usable rows) or "degenerate-instrument" (all
// usable rows share one Z value).
MomentVector compute_moments(const Dataset& data, int covariate_index);

// Indicator-only variant over all rows (X treated as 0); used for the
// report-level strata-share row, which never depends on covariates.
MomentVector compute_moments(const Dataset& data);

// Within-cell means of the observable never-taker (Z=1,D=0) and
// always-taker (Z=0,D=1) cells.
ObservableMeans observable_strata_means(const Dataset& data, int covariate_index);

// pi_nt = pi_vnt/pi_z, pi_at = pi_vat/(1-pi_z), pi_co = remainder.
// Throws "monotonicity-or-relevance-violation" when pi_co <= 0; the message
// carries the computed shares since estimation must halt for this covariate.
StrataShares strata_shares(const MomentVector& m);

// Same arithmetic without the positivity check, for reporting a violating
// covariate (its shares are still informative).
StrataShares strata_shares_unchecked(const MomentVector& m);

// The complier covariate mean plug-in estimator:
//   (mu - mu_vnt/pi_z - mu_vat/(1-pi_z)) / (1 - pi_vnt/pi_z - pi_vat/(1-pi_z)).
// Shares preconditions apply (propagates the strata_shares errors).
double complier_mean(const MomentVector& m);

}  // namespace ivprof
