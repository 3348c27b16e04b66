#include "ivprof/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ivprof/version.hpp"

namespace ivprof {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool has_value(double v) { return !std::isnan(v); }

// 4 significant digits with trailing zeros kept ("3.000", "0.5538").
std::string fmt_sig4(double v) {
    if (!has_value(v)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%#.4g", v);
    std::string s(buf);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

// Shortest %g form that still round-trips, for machine formats.
std::string fmt_full(double v) {
    if (!has_value(v)) return "";
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double parsed = 0.0;
        if (std::sscanf(buf, "%lg", &parsed) == 1 && parsed == v) break;
    }
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string cell(const Estimate& e) {
    return fmt_sig4(e.point) + " (" + fmt_sig4(e.se) + ")";
}

SeMethod method_from_string(const std::string& s) {
    if (s == "plugin") return SeMethod::plugin;
    if (s == "bootstrap") return SeMethod::bootstrap;
    if (s == "within-cell") return SeMethod::within_cell;
    throw Error("bad-report", "unknown SE method '" + s + "'");
}

Estimate make_estimate(double point, double se, double level, SeMethod method, std::int64_t n) {
    Estimate e;
    e.point = point;
    e.se = se;
    e.method = method;
    e.n = n;
    if (has_value(se)) {
        std::tie(e.ci_low, e.ci_high) = confidence_interval(point, se, level);
    } else {
        e.ci_low = kNan;
        e.ci_high = kNan;
    }
    return e;
}

}  // namespace

// ---- pipeline ----------------------------------------------------------

ProfileReport profile_dataset(const Dataset& data, const ProfileOptions& options) {
    data.validate();
    if (!(options.level > 0.0 && options.level < 1.0)) {
        throw Error("invalid-level", "confidence level must lie in (0,1)");
    }

    ProfileReport report;
    report.n = data.n();
    report.level = options.level;
    report.seed = options.seed;
    report.rng = kRngName;
    report.version = kVersion;
    report.bootstrap_replicates =
        options.se == SeChoice::plugin ? 0 : options.bootstrap_replicates;
    if (options.se == SeChoice::plugin || options.se == SeChoice::both) {
        report.se_methods.push_back("plugin");
    }
    if (options.se == SeChoice::bootstrap || options.se == SeChoice::both) {
        report.se_methods.push_back("bootstrap");
    }

    // Strata-share row over all rows; covariates and their missingness play
    // no role here.
    const MomentVector m0 = compute_moments(data);
    const StrataShares sh0 = strata_shares_unchecked(m0);
    const Matrix6 sigma0 = sample_covariance(data);
    const ShareSes share_ses = strata_share_se(m0, sigma0);
    report.shares.complier =
        make_estimate(sh0.pi_co, share_ses.se_pi_co, options.level, SeMethod::plugin, m0.n);
    report.shares.always_taker =
        make_estimate(sh0.pi_at, share_ses.se_pi_at, options.level, SeMethod::plugin, m0.n);
    report.shares.never_taker =
        make_estimate(sh0.pi_nt, share_ses.se_pi_nt, options.level, SeMethod::plugin, m0.n);
    report.shares.sample = make_estimate(1.0, 0.0, options.level, SeMethod::plugin, m0.n);
    if (sh0.pi_co <= 0.0) {
        report.any_monotonicity_violation = true;
        report.warnings.push_back(
            {"monotonicity-or-relevance-violation",
             "full-sample complier share is not positive; complier estimation halted"});
    }

    for (int j = 0; j < data.num_covariates(); ++j) {
        CovariateProfile cp;
        cp.name = data.covariate_name(j);
        MomentVector m;
        try {
            m = compute_moments(data, j);
        } catch (const Error& e) {
            // Covariate unusable (all missing, or its complete cases leave a
            // one-valued instrument); report it empty rather than fail the run.
            cp.warnings.push_back({e.code(), cp.name + ": " + e.what()});
            cp.sample.point = kNan;
            cp.sample.se = kNan;
            cp.sample.ci_low = kNan;
            cp.sample.ci_high = kNan;
            report.covariates.push_back(std::move(cp));
            continue;
        }
        cp.n_used = m.n;
        cp.n_dropped = m.n_dropped;
        const StrataShares sh = strata_shares_unchecked(m);
        cp.pi_co = sh.pi_co;
        cp.pi_at = sh.pi_at;
        cp.pi_nt = sh.pi_nt;

        const ObservableMeans obs = observable_strata_means(data, j);
        const CellSes cells = observable_strata_se(data, j);
        for (const auto& w : obs.warnings) cp.warnings.push_back({w.code, cp.name + ": " + w.message});
        for (const auto& w : cells.warnings) cp.warnings.push_back({w.code, cp.name + ": " + w.message});

        cp.sample = make_estimate(m.mu, cells.se_sample, options.level, SeMethod::within_cell, m.n);
        if (obs.mu_nt) {
            cp.never_taker = make_estimate(*obs.mu_nt, cells.se_nt ? *cells.se_nt : kNan,
                                           options.level, SeMethod::within_cell, cells.n_nt);
        }
        if (obs.mu_at) {
            cp.always_taker = make_estimate(*obs.mu_at, cells.se_at ? *cells.se_at : kNan,
                                            options.level, SeMethod::within_cell, cells.n_at);
        }

        if (sh.pi_co <= 0.0) {
            cp.monotonicity_violation = true;
            report.any_monotonicity_violation = true;
            std::ostringstream msg;
            msg << cp.name << ": complier share is not positive (pi_co=" << sh.pi_co
                << "); monotonicity or relevance fails in-sample";
            cp.warnings.push_back({"monotonicity-or-relevance-violation", msg.str()});
            report.covariates.push_back(std::move(cp));
            continue;
        }

        const double mu_co = complier_mean(m);
        Warnings weak;
        if (sh.pi_co < options.weak_share_threshold) {
            std::ostringstream msg;
            msg << "complier share " << sh.pi_co << " is below " << options.weak_share_threshold
                << "; estimates are weakly identified";
            weak.push_back({"weak-complier-share", msg.str()});
        }
        if (options.se == SeChoice::plugin || options.se == SeChoice::both) {
            const Matrix6 sigma = sample_covariance(data, j);
            Estimate e = make_estimate(mu_co, plugin_se(m, sigma), options.level,
                                       SeMethod::plugin, m.n);
            e.warnings = weak;
            cp.complier.push_back(std::move(e));
        }
        if (options.se == SeChoice::bootstrap || options.se == SeChoice::both) {
            BootstrapOptions bo;
            bo.replicates = options.bootstrap_replicates;
            bo.seed = derive_seed(options.seed, 0x626f6f74ULL, static_cast<std::uint64_t>(j));
            bo.level = options.level;
            bo.percentile_ci = options.percentile_ci;
            try {
                BootstrapResult br = bootstrap_se(data, j, bo);
                br.estimate.warnings.insert(br.estimate.warnings.end(), weak.begin(), weak.end());
                cp.complier.push_back(std::move(br.estimate));
            } catch (const Error& e) {
                // Keep whatever other estimates exist for this covariate.
                cp.warnings.push_back({e.code(), cp.name + ": " + e.what()});
            }
        }
        report.covariates.push_back(std::move(cp));
    }
    return report;
}

// ---- emission ----------------------------------------------------------

namespace {

// The identity behind the plug-in estimator must close on every reported
// covariate; a failure here is an internal bug, not a data problem.
void verify_decomposition(const ProfileReport& report) {
    const double share_sum = report.shares.complier.point + report.shares.always_taker.point +
                             report.shares.never_taker.point;
    if (std::abs(share_sum - 1.0) > 1e-12) {
        throw Error("internal-decomposition-violation",
                    "strata shares do not sum to 1 at emission time");
    }
    for (const auto& cp : report.covariates) {
        if (cp.monotonicity_violation || cp.complier.empty() || !has_value(cp.sample.point)) continue;
        double lhs = cp.pi_co * cp.complier.front().point;
        if (cp.always_taker) lhs += cp.pi_at * cp.always_taker->point;
        if (cp.never_taker) lhs += cp.pi_nt * cp.never_taker->point;
        const double mu = cp.sample.point;
        if (std::abs(lhs - mu) > 1e-10 * std::max(1.0, std::abs(mu))) {
            std::ostringstream msg;
            msg << "decomposition identity violated for covariate '" << cp.name << "': "
                << lhs << " != " << mu;
            throw Error("internal-decomposition-violation", msg.str());
        }
    }
}

constexpr std::size_t kNameWidth = 18;
constexpr std::size_t kColWidth = 22;

std::string emit_text(const ProfileReport& r) {
    std::ostringstream out;
    out << "complier profile report (ivprof " << r.version << ")\n";
    out << "n = " << r.n << ", instrument = '" << r.instrument << "', treatment = '"
        << r.treatment << "'\n";
    out << "se method: ";
    for (std::size_t i = 0; i < r.se_methods.size(); ++i) {
        out << (i ? ", " : "") << r.se_methods[i];
    }
    char level_buf[32];
    std::snprintf(level_buf, sizeof level_buf, "%g", 100.0 * r.level);
    out << "; confidence level: " << level_buf << "%";
    if (r.bootstrap_replicates > 0) {
        out << "; B = " << r.bootstrap_replicates << "; seed = " << r.seed;
    }
    out << "\n\n";

    out << pad("covariate", kNameWidth) << pad("complier", kColWidth)
        << pad("always-taker", kColWidth) << pad("never-taker", kColWidth) << "sample\n";
    out << pad("share", kNameWidth) << pad(cell(r.shares.complier), kColWidth)
        << pad(cell(r.shares.always_taker), kColWidth)
        << pad(cell(r.shares.never_taker), kColWidth) << cell(r.shares.sample) << "\n";
    for (const auto& cp : r.covariates) {
        std::string co_cell = "n/a";
        if (!cp.complier.empty()) co_cell = cell(cp.complier.front());
        out << pad(cp.name, kNameWidth) << pad(co_cell, kColWidth)
            << pad(cp.always_taker ? cell(*cp.always_taker) : "n/a", kColWidth)
            << pad(cp.never_taker ? cell(*cp.never_taker) : "n/a", kColWidth)
            << (has_value(cp.sample.point) ? cell(cp.sample) : "n/a") << "\n";
    }

    bool boot_extra = false;
    for (const auto& cp : r.covariates) {
        if (cp.complier.size() > 1) boot_extra = true;
    }
    if (boot_extra) {
        out << "\nbootstrap complier estimates (B = " << r.bootstrap_replicates << "):\n";
        for (const auto& cp : r.covariates) {
            for (const auto& e : cp.complier) {
                if (e.method == SeMethod::bootstrap) {
                    out << pad(cp.name, kNameWidth) << cell(e) << "\n";
                }
            }
        }
    }

    std::size_t dropped_total = 0;
    for (const auto& cp : r.covariates) dropped_total += static_cast<std::size_t>(cp.n_dropped);
    if (dropped_total > 0) {
        out << "\nmissing covariate cells (rows dropped per covariate):\n";
        for (const auto& cp : r.covariates) {
            if (cp.n_dropped > 0) {
                out << pad(cp.name, kNameWidth) << cp.n_dropped << "\n";
            }
        }
    }

    Warnings all = r.warnings;
    for (const auto& cp : r.covariates) {
        all.insert(all.end(), cp.warnings.begin(), cp.warnings.end());
        for (const auto& e : cp.complier) {
            all.insert(all.end(), e.warnings.begin(), e.warnings.end());
        }
    }
    if (!all.empty()) {
        out << "\nwarnings:\n";
        for (const auto& w : all) {
            out << "  [" << w.code << "] " << w.message << "\n";
        }
    }
    return out.str();
}

nlohmann::json warnings_to_json(const Warnings& warnings) {
    auto arr = nlohmann::json::array();
    for (const auto& w : warnings) {
        arr.push_back({{"code", w.code}, {"message", w.message}});
    }
    return arr;
}

Warnings warnings_from_json(const nlohmann::json& arr) {
    Warnings out;
    for (const auto& w : arr) {
        out.push_back({w.at("code").get<std::string>(), w.at("message").get<std::string>()});
    }
    return out;
}

nlohmann::json estimate_to_json(const Estimate& e) {
    return {{"point", e.point},       {"se", e.se},
            {"ci_low", e.ci_low},     {"ci_high", e.ci_high},
            {"method", to_string(e.method)}, {"n", e.n},
            {"warnings", warnings_to_json(e.warnings)}};
}

double json_double(const nlohmann::json& v) {
    return v.is_null() ? kNan : v.get<double>();
}

Estimate estimate_from_json(const nlohmann::json& j) {
    Estimate e;
    e.point = json_double(j.at("point"));
    e.se = json_double(j.at("se"));
    e.ci_low = json_double(j.at("ci_low"));
    e.ci_high = json_double(j.at("ci_high"));
    e.method = method_from_string(j.at("method").get<std::string>());
    e.n = j.at("n").get<std::int64_t>();
    e.warnings = warnings_from_json(j.at("warnings"));
    return e;
}

std::string emit_json(const ProfileReport& r) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["tool"] = "ivprof";
    doc["version"] = r.version;
    doc["n"] = r.n;
    doc["instrument"] = r.instrument;
    doc["treatment"] = r.treatment;
    doc["level"] = r.level;
    doc["se_methods"] = r.se_methods;
    doc["bootstrap_replicates"] = r.bootstrap_replicates;
    doc["seed"] = r.seed;
    doc["rng"] = r.rng;
    doc["monotonicity_violation"] = r.any_monotonicity_violation;
    doc["warnings"] = warnings_to_json(r.warnings);
    doc["shares"] = {{"complier", estimate_to_json(r.shares.complier)},
                     {"always_taker", estimate_to_json(r.shares.always_taker)},
                     {"never_taker", estimate_to_json(r.shares.never_taker)},
                     {"sample", estimate_to_json(r.shares.sample)}};
    auto covs = nlohmann::json::array();
    for (const auto& cp : r.covariates) {
        nlohmann::json c;
        c["name"] = cp.name;
        c["n_used"] = cp.n_used;
        c["n_dropped"] = cp.n_dropped;
        c["pi"] = {{"complier", cp.pi_co}, {"always_taker", cp.pi_at}, {"never_taker", cp.pi_nt}};
        c["monotonicity_violation"] = cp.monotonicity_violation;
        auto complier = nlohmann::json::array();
        for (const auto& e : cp.complier) complier.push_back(estimate_to_json(e));
        c["complier"] = complier;
        c["always_taker"] = cp.always_taker ? estimate_to_json(*cp.always_taker) : nlohmann::json();
        c["never_taker"] = cp.never_taker ? estimate_to_json(*cp.never_taker) : nlohmann::json();
        c["sample"] = estimate_to_json(cp.sample);
        c["warnings"] = warnings_to_json(cp.warnings);
        covs.push_back(std::move(c));
    }
    doc["covariates"] = std::move(covs);
    return doc.dump(2) + "\n";
}

std::string emit_csv(const ProfileReport& r) {
    std::ostringstream out;
    out << "kind,covariate,stratum,method,point,se,ci_low,ci_high,n\n";
    auto row = [&](const std::string& kind, const std::string& covariate,
                   const std::string& stratum, const Estimate& e) {
        out << kind << ',' << covariate << ',' << stratum << ',' << to_string(e.method) << ','
            << fmt_full(e.point) << ',' << fmt_full(e.se) << ',' << fmt_full(e.ci_low) << ','
            << fmt_full(e.ci_high) << ',' << e.n << "\n";
    };
    row("share", "", "complier", r.shares.complier);
    row("share", "", "always_taker", r.shares.always_taker);
    row("share", "", "never_taker", r.shares.never_taker);
    row("share", "", "sample", r.shares.sample);
    for (const auto& cp : r.covariates) {
        for (const auto& e : cp.complier) row("mean", cp.name, "complier", e);
        if (cp.always_taker) row("mean", cp.name, "always_taker", *cp.always_taker);
        if (cp.never_taker) row("mean", cp.name, "never_taker", *cp.never_taker);
        if (has_value(cp.sample.point)) row("mean", cp.name, "sample", cp.sample);
    }
    return out.str();
}

}  // namespace

std::string emit_report(const ProfileReport& report, ReportFormat format) {
    verify_decomposition(report);
    switch (format) {
        case ReportFormat::text: return emit_text(report);
        case ReportFormat::json: return emit_json(report);
        case ReportFormat::csv: return emit_csv(report);
    }
    throw Error("invalid-config", "unknown report format");
}

ProfileReport parse_report_json(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) {
        throw Error("bad-report", "unsupported schema version");
    }
    ProfileReport r;
    r.version = doc.at("version").get<std::string>();
    r.n = doc.at("n").get<std::int64_t>();
    r.instrument = doc.at("instrument").get<std::string>();
    r.treatment = doc.at("treatment").get<std::string>();
    r.level = doc.at("level").get<double>();
    r.se_methods = doc.at("se_methods").get<std::vector<std::string>>();
    r.bootstrap_replicates = doc.at("bootstrap_replicates").get<std::int64_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.rng = doc.at("rng").get<std::string>();
    r.any_monotonicity_violation = doc.at("monotonicity_violation").get<bool>();
    r.warnings = warnings_from_json(doc.at("warnings"));
    const auto& sh = doc.at("shares");
    r.shares.complier = estimate_from_json(sh.at("complier"));
    r.shares.always_taker = estimate_from_json(sh.at("always_taker"));
    r.shares.never_taker = estimate_from_json(sh.at("never_taker"));
    r.shares.sample = estimate_from_json(sh.at("sample"));
    for (const auto& c : doc.at("covariates")) {
        CovariateProfile cp;
        cp.name = c.at("name").get<std::string>();
        cp.n_used = c.at("n_used").get<std::int64_t>();
        cp.n_dropped = c.at("n_dropped").get<std::int64_t>();
        cp.pi_co = c.at("pi").at("complier").get<double>();
        cp.pi_at = c.at("pi").at("always_taker").get<double>();
        cp.pi_nt = c.at("pi").at("never_taker").get<double>();
        cp.monotonicity_violation = c.at("monotonicity_violation").get<bool>();
        for (const auto& e : c.at("complier")) cp.complier.push_back(estimate_from_json(e));
        if (!c.at("always_taker").is_null()) cp.always_taker = estimate_from_json(c.at("always_taker"));
        if (!c.at("never_taker").is_null()) cp.never_taker = estimate_from_json(c.at("never_taker"));
        cp.sample = estimate_from_json(c.at("sample"));
        cp.warnings = warnings_from_json(c.at("warnings"));
        r.covariates.push_back(std::move(cp));
    }
    return r;
}

// ---- coverage emission ---------------------------------------------------

std::string emit_coverage_csv(const CoverageResult& result) {
    std::ostringstream out;
    out << "variant,n,method,replications,used,excluded,coverage,mc_half_width,"
           "coverage_low,coverage_high,mean_estimate,empirical_sd,mean_se,rmse_se,"
           "rmse_se_scaled,level,bootstrap_replicates,seed,rng\n";
    for (const auto& r : result.rows) {
        const double lo = std::max(0.0, r.coverage - r.mc_half_width);
        const double hi = std::min(1.0, r.coverage + r.mc_half_width);
        out << r.variant << ',' << r.n << ',' << r.method << ',' << r.replications << ','
            << r.used << ',' << r.excluded << ',' << fmt_full(r.coverage) << ','
            << fmt_full(r.mc_half_width) << ',' << fmt_full(lo) << ',' << fmt_full(hi) << ','
            << fmt_full(r.mean_estimate) << ',' << fmt_full(r.empirical_sd) << ','
            << fmt_full(r.mean_se) << ',' << fmt_full(r.rmse_se) << ','
            << fmt_full(r.rmse_se_scaled) << ',' << fmt_full(result.level) << ','
            << result.bootstrap_replicates << ',' << result.seed << ',' << result.rng << "\n";
    }
    return out.str();
}

std::string emit_coverage_json(const CoverageResult& result) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["tool"] = "ivprof";
    doc["rng"] = result.rng;
    doc["seed"] = result.seed;
    doc["level"] = result.level;
    doc["bootstrap_replicates"] = result.bootstrap_replicates;
    auto rows = nlohmann::json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"variant", r.variant},
                        {"n", r.n},
                        {"method", r.method},
                        {"replications", r.replications},
                        {"used", r.used},
                        {"excluded", r.excluded},
                        {"coverage", r.coverage},
                        {"mc_half_width", r.mc_half_width},
                        {"coverage_low", std::max(0.0, r.coverage - r.mc_half_width)},
                        {"coverage_high", std::min(1.0, r.coverage + r.mc_half_width)},
                        {"mean_estimate", r.mean_estimate},
                        {"empirical_sd", r.empirical_sd},
                        {"mean_se", r.mean_se},
                        {"rmse_se", r.rmse_se},
                        {"rmse_se_scaled", r.rmse_se_scaled}});
    }
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
}

// ---- CLI drivers ---------------------------------------------------------

namespace {

int write_output(const std::string& content, const std::string& path, std::ostream& out,
                 std::ostream& err) {
    if (path.empty()) {
        out << content;
        return 0;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        err << "error [io-error]: cannot open output file '" << path << "'\n";
        return 1;
    }
    f << content;
    return 0;
}

}  // namespace

int run_profile(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        IngestResult ingested = ingest_csv(config.input_path, config.ingest);
        ProfileReport report = profile_dataset(ingested.data, config.profile);
        report.instrument = config.ingest.instrument;
        report.treatment = config.ingest.treatment;
        report.warnings.insert(report.warnings.begin(), ingested.notes.begin(),
                               ingested.notes.end());
        for (const auto& skipped : ingested.skipped_columns) {
            report.warnings.push_back(
                {"non-numeric-column", "column '" + skipped + "' has no numeric cells; skipped"});
        }
        const std::string rendered = emit_report(report, config.format);
        const int io_status = write_output(rendered, config.output_path, out, err);
        if (io_status != 0) return io_status;
        return report.any_monotonicity_violation ? 2 : 0;
    } catch (const Error& e) {
        err << "error [" << e.code() << "]: " << e.what() << "\n";
        return e.code() == "monotonicity-or-relevance-violation" ? 2 : 1;
    }
}

int run_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const CoverageResult result = run_coverage_experiment(args.coverage);
        std::string rendered;
        switch (args.format) {
            case ReportFormat::json: rendered = emit_coverage_json(result); break;
            case ReportFormat::csv:
            case ReportFormat::text: rendered = emit_coverage_csv(result); break;
        }
        return write_output(rendered, args.output_path, out, err);
    } catch (const Error& e) {
        err << "error [" << e.code() << "]: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ivprof
