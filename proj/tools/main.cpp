#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ivprof/report.hpp"
#include "ivprof/version.hpp"

namespace {

ivprof::ReportFormat parse_format(const std::string& name) {
    if (name == "text") return ivprof::ReportFormat::text;
    if (name == "json") return ivprof::ReportFormat::json;
    if (name == "csv") return ivprof::ReportFormat::csv;
    throw CLI::ValidationError("--format", "expected text, json or csv");
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ivprof: profile complier/always-taker/never-taker strata in "
                 "binary-instrument studies"};
    app.set_version_flag("--version", ivprof::kVersion);
    app.require_subcommand(1);

    // ---- profile ----
    ivprof::RunConfig run;
    std::string covariate_list, profile_format = "text", se_choice = "plugin";
    auto* profile = app.add_subcommand("profile", "profile strata covariate means from a CSV file");
    profile->add_option("--input", run.input_path, "input CSV with a header row")->required();
    profile->add_option("--instrument", run.ingest.instrument, "binary instrument column")
        ->capture_default_str();
    profile->add_option("--treatment", run.ingest.treatment, "binary treatment column")
        ->capture_default_str();
    profile->add_option("--covariates", covariate_list,
                        "comma-separated covariate columns (default: all numeric columns)");
    profile->add_option("--match-id", run.ingest.match_id,
                        "pair/match identifier column, accepted and ignored");
    profile->add_option("--se", se_choice, "SE method: plugin, bootstrap or both")
        ->capture_default_str();
    profile->add_option("--boot", run.profile.bootstrap_replicates, "bootstrap replicates")
        ->capture_default_str();
    profile->add_option("--level", run.profile.level, "confidence level")->capture_default_str();
    profile->add_option("--seed", run.profile.seed, "RNG seed for the bootstrap")
        ->capture_default_str();
    profile->add_option("--weak-threshold", run.profile.weak_share_threshold,
                        "complier share below which a weak-identification warning is attached")
        ->capture_default_str();
    profile->add_flag("--percentile", run.profile.percentile_ci,
                      "percentile bootstrap intervals instead of normal approximation");
    profile->add_option("--format", profile_format, "output format: text, json or csv")
        ->capture_default_str();
    profile->add_option("--output", run.output_path, "write the report here instead of stdout");

    // ---- simulate ----
    ivprof::SimulateArgs sim;
    std::string variant = "fixed", sizes_list, sim_format = "csv";
    bool no_bootstrap = false;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage experiment for the "
                                                    "complier-mean CIs");
    simulate->add_option("--variant", variant, "DGP variant: fixed or random")
        ->capture_default_str();
    simulate->add_option("--sizes", sizes_list,
                         "comma-separated sample sizes (default: the 13-size benchmark grid)");
    simulate->add_option("--reps", sim.coverage.replications, "replications per size")
        ->capture_default_str();
    simulate->add_option("--boot", sim.coverage.bootstrap_replicates,
                         "bootstrap replicates per replication")
        ->capture_default_str();
    simulate->add_flag("--no-bootstrap", no_bootstrap, "skip the bootstrap method entirely");
    simulate->add_option("--level", sim.coverage.level, "confidence level")->capture_default_str();
    simulate->add_option("--seed", sim.coverage.seed, "master RNG seed")->capture_default_str();
    simulate->add_option("--threads", sim.coverage.threads,
                         "worker threads (0 = hardware concurrency; result is identical either way)")
        ->capture_default_str();
    simulate->add_option("--format", sim_format, "output format: csv or json")
        ->capture_default_str();
    simulate->add_option("--output", sim.output_path, "write results here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (profile->parsed()) {
            run.ingest.covariates = split_csv_list(covariate_list);
            run.format = parse_format(profile_format);
            if (se_choice == "plugin") {
                run.profile.se = ivprof::SeChoice::plugin;
            } else if (se_choice == "bootstrap") {
                run.profile.se = ivprof::SeChoice::bootstrap;
            } else if (se_choice == "both") {
                run.profile.se = ivprof::SeChoice::both;
            } else {
                std::cerr << "error [invalid-config]: --se expects plugin, bootstrap or both\n";
                return 1;
            }
            return ivprof::run_profile(run, std::cout, std::cerr);
        }
        if (variant == "fixed") {
            sim.coverage.variant = ivprof::DgpVariant::fixed;
        } else if (variant == "random") {
            sim.coverage.variant = ivprof::DgpVariant::random;
        } else {
            std::cerr << "error [invalid-config]: --variant expects fixed or random\n";
            return 1;
        }
        if (!sizes_list.empty()) {
            sim.coverage.sizes.clear();
            for (const auto& tok : split_csv_list(sizes_list)) {
                sim.coverage.sizes.push_back(std::stoll(tok));
            }
        }
        sim.coverage.with_bootstrap = !no_bootstrap;
        sim.format = parse_format(sim_format);
        return ivprof::run_simulate(sim, std::cout, std::cerr);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error [invalid-config]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error [invalid-config]: " << e.what() << "\n";
        return 1;
    }
}
