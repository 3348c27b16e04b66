#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ivprof/dataset.hpp"
#include "ivprof/rng.hpp"

namespace ivprof {

enum class Stratum : int { complier = 0, always_taker = 1, never_taker = 2 };

struct StratumParams {
    double mean = 0.0;
    double sd = 1.0;
};

// Fixed-parameter DGP: equal strata shares, pi_z = 0.75, strata-specific
// normal covariates. Defaults are the canonical benchmark configuration.
struct FixedDgpConfig {
    std::int64_t n = 0;
    std::array<double, 3> shares = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // co, at, nt
    double pi_z = 0.75;
    StratumParams complier = {2.0, 0.5};
    StratumParams never_taker = {1.0, 1.0};
    StratumParams always_taker = {0.5, 2.0};
    std::uint64_t seed = 0;
};

// Randomized DGP: shares from a uniform Dirichlet with a minimum-share
// floor (rejection sampled), pi_z ~ U(0.1, 0.9), strata means ~ U(-2, 2),
// strata SDs ~ U(0.25, 2).
struct RandomDgpConfig {
    std::int64_t n = 0;
    double min_share = 0.1;
    double pi_z_low = 0.1, pi_z_high = 0.9;
    double mean_low = -2.0, mean_high = 2.0;
    double sd_low = 0.25, sd_high = 2.0;
    std::uint64_t seed = 0;
};

// Parameters actually used to generate a dataset (drawn ones included).
struct DgpParams {
    std::array<double, 3> shares = {0, 0, 0};  // co, at, nt
    double pi_z = 0.0;
    std::array<StratumParams, 3> strata;       // co, at, nt
};

// A generated dataset plus the latent stratum label per unit and the true
// complier mean. D follows the strata map: nt -> 0, at -> 1, co -> Z.
struct LabeledDataset {
    Dataset data;  // single covariate named "x"
    std::vector<Stratum> strata;
    DgpParams params;
    double true_mu_co = 0.0;
};

LabeledDataset generate_fixed(const FixedDgpConfig& config);
LabeledDataset generate_random(const RandomDgpConfig& config);

// Mean of X over the units whose true label is complier; the brute-force
// reference the plug-in estimator is checked against.
double oracle_complier_mean(const LabeledDataset& d);

enum class DgpVariant { fixed, random };

// The 13 sample sizes of the coverage benchmark grid.
std::vector<std::int64_t> default_size_grid();

struct CoverageConfig {
    DgpVariant variant = DgpVariant::fixed;
    std::vector<std::int64_t> sizes = default_size_grid();
    std::int64_t replications = 1000;
    std::int64_t bootstrap_replicates = 1000;
    bool with_bootstrap = true;
    double level = 0.95;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
};

// One row per (variant, N, method).
struct CoverageRow {
    std::string variant;
    std::int64_t n = 0;
    std::string method;               // "plugin" or "bootstrap"
    std::int64_t replications = 0;    // requested
    std::int64_t used = 0;            // entering the coverage denominator
    std::int64_t excluded = 0;        // degenerate replications for this method
    double coverage = 0.0;
    double mc_half_width = 0.0;       // 1.96 * sqrt(p(1-p)/used)
    double mean_estimate = 0.0;
    double empirical_sd = 0.0;        // SD of the point estimates across used reps
    double mean_se = 0.0;
    double rmse_se = 0.0;             // RMSE of the SE estimator vs empirical_sd
    double rmse_se_scaled = 0.0;      // rmse_se * N
};

struct CoverageResult {
    std::vector<CoverageRow> rows;
    std::string rng = kRngName;
    std::uint64_t seed = 0;
    double level = 0.95;
    std::int64_t bootstrap_replicates = 0;
};

// Monte Carlo coverage/RMSE experiment. Replications run on per-replication
// Philox substreams and are tallied in replication order, so every number is
// a deterministic function of (variant, sizes, reps, B, seed) alone --
// worker count cannot change the output.
CoverageResult run_coverage_experiment(const CoverageConfig& config);

}  // namespace ivprof
