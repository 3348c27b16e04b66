#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ivprof/csv.hpp"
#include "ivprof/dataset.hpp"
#include "ivprof/simulate.hpp"
#include "ivprof/variance.hpp"

namespace ivprof {

enum class ReportFormat { text, json, csv };

enum class SeChoice { plugin, bootstrap, both };

struct ProfileOptions {
    SeChoice se = SeChoice::plugin;
    std::int64_t bootstrap_replicates = 1000;
    double level = 0.95;
    std::uint64_t seed = 1;
    double weak_share_threshold = kWeakComplierShareThreshold;
    bool percentile_ci = false;
};

// Everything reported for one covariate. Complier estimates come in one
// entry per requested SE method; the observable strata use within-cell SEs
// and are absent when their cell is empty (one-sided compliance).
struct CovariateProfile {
    std::string name;
    std::int64_t n_used = 0;
    std::int64_t n_dropped = 0;
    std::vector<Estimate> complier;
    std::optional<Estimate> always_taker;
    std::optional<Estimate> never_taker;
    Estimate sample;
    // Shares of this covariate's complete-case subsample; close the
    // decomposition identity re-checked at emission time.
    double pi_co = 0.0, pi_at = 0.0, pi_nt = 0.0;
    bool monotonicity_violation = false;
    Warnings warnings;
};

struct ShareProfile {
    Estimate complier;
    Estimate always_taker;
    Estimate never_taker;
    Estimate sample;  // 1 exactly, SE 0
};

struct ProfileReport {
    std::int64_t n = 0;
    std::string instrument = "z";
    std::string treatment = "d";
    double level = 0.95;
    std::vector<std::string> se_methods;
    std::int64_t bootstrap_replicates = 0;
    std::uint64_t seed = 0;
    std::string rng;
    std::string version;
    ShareProfile shares;  // computed over all rows
    std::vector<CovariateProfile> covariates;
    Warnings warnings;
    bool any_monotonicity_violation = false;
};

// Runs the full estimation pipeline over every covariate. A covariate whose
// complete-case subsample violates monotonicity/relevance is reported with
// its shares and no complier estimates rather than failing the run.
ProfileReport profile_dataset(const Dataset& data, const ProfileOptions& options);

// Renders a report. All formats are byte-stable for identical inputs: text
// uses 4 significant digits, json/csv full precision. Re-verifies the
// decomposition identity on every covariate first and throws
// "internal-decomposition-violation" if it fails.
std::string emit_report(const ProfileReport& report, ReportFormat format);

// Parses emit_report(..., json) back; used by the serialization round-trip.
ProfileReport parse_report_json(const std::string& text);

std::string emit_coverage_csv(const CoverageResult& result);
std::string emit_coverage_json(const CoverageResult& result);

// ---- CLI drivers -----------------------------------------------------

struct RunConfig {
    std::string input_path;
    IngestOptions ingest;
    ProfileOptions profile;
    ReportFormat format = ReportFormat::text;
    std::string output_path;  // empty = stdout
};

struct SimulateArgs {
    CoverageConfig coverage;
    ReportFormat format = ReportFormat::csv;
    std::string output_path;
};

// Exit codes: 0 success (warnings allowed), 1 I/O or validation failure,
// 2 monotonicity-or-relevance violation (report still emitted).
int run_profile(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace ivprof
