#include "ivprof/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ivprof/moments.hpp"
#include "ivprof/stable_sum.hpp"
#include "ivprof/stats.hpp"
#include "ivprof/variance.hpp"

namespace ivprof {

std::vector<std::int64_t> default_size_grid() {
    return {500, 750, 1000, 1500, 2000, 3000, 4000, 6000, 8000, 12000, 16000, 20000, 24000};
}

namespace {

// Streams per dataset seed: 0 draws DGP parameters, 1 draws the units.
constexpr std::uint64_t kParamStream = 0;
constexpr std::uint64_t kUnitStream = 1;

int treatment_for(Stratum s, int z) {
    switch (s) {
        case Stratum::never_taker: return 0;
        case Stratum::always_taker: return 1;
        case Stratum::complier: return z;
    }
    return z;
}

LabeledDataset generate_units(std::int64_t n, const DgpParams& params, std::uint64_t seed) {
    Philox rng(seed, kUnitStream);
    std::vector<std::uint8_t> z(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> d(static_cast<std::size_t>(n));
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<Stratum> strata(static_cast<std::size_t>(n));
    const double cum_co = params.shares[0];
    const double cum_at = cum_co + params.shares[1];
    for (std::int64_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const Stratum s = u < cum_co  ? Stratum::complier
                          : u < cum_at ? Stratum::always_taker
                                       : Stratum::never_taker;
        const int zi = rng.bernoulli(params.pi_z) ? 1 : 0;
        const auto& sp = params.strata[static_cast<int>(s)];
        const auto idx = static_cast<std::size_t>(i);
        strata[idx] = s;
        z[idx] = static_cast<std::uint8_t>(zi);
        d[idx] = static_cast<std::uint8_t>(treatment_for(s, zi));
        x[idx] = rng.normal(sp.mean, sp.sd);
    }
    LabeledDataset out;
    out.data = Dataset(std::move(z), std::move(d), {std::move(x)}, {"x"});
    out.strata = std::move(strata);
    out.params = params;
    out.true_mu_co = params.strata[static_cast<int>(Stratum::complier)].mean;
    return out;
}

}  // namespace

LabeledDataset generate_fixed(const FixedDgpConfig& config) {
    if (config.n < 1) throw Error("invalid-config", "sample size must be at least 1");
    if (!(config.pi_z > 0.0 && config.pi_z < 1.0)) {
        throw Error("invalid-config", "pi_z must lie strictly between 0 and 1");
    }
    double total = 0.0;
    for (double s : config.shares) {
        if (s < 0.0) throw Error("invalid-config", "strata shares must be nonnegative");
        total += s;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error("invalid-config", "strata shares must sum to 1");
    for (const auto& sp : {config.complier, config.always_taker, config.never_taker}) {
        if (!(sp.sd > 0.0)) throw Error("invalid-config", "strata SDs must be positive");
    }
    DgpParams params;
    params.shares = config.shares;
    params.pi_z = config.pi_z;
    params.strata[static_cast<int>(Stratum::complier)] = config.complier;
    params.strata[static_cast<int>(Stratum::always_taker)] = config.always_taker;
    params.strata[static_cast<int>(Stratum::never_taker)] = config.never_taker;
    return generate_units(config.n, params, config.seed);
}

LabeledDataset generate_random(const RandomDgpConfig& config) {
    if (config.n < 1) throw Error("invalid-config", "sample size must be at least 1");
    if (!(config.min_share >= 0.0 && config.min_share < 1.0 / 3.0)) {
        throw Error("invalid-config", "min share must be feasible for three strata");
    }
    Philox rng(config.seed, kParamStream);
    DgpParams params;
    // Uniform Dirichlet via normalized exponentials, rejected until every
    // share clears the floor.
    constexpr int kMaxRejections = 10000;
    int attempt = 0;
    for (;; ++attempt) {
        if (attempt >= kMaxRejections) {
            throw Error("dgp-rejection-overflow", "Dirichlet rejection loop exceeded 10000 draws");
        }
        std::array<double, 3> e;
        double total = 0.0;
        for (auto& v : e) {
            v = -std::log(rng.uniform_open());
            total += v;
        }
        for (int j = 0; j < 3; ++j) params.shares[j] = e[j] / total;
        if (*std::min_element(params.shares.begin(), params.shares.end()) >= config.min_share) break;
    }
    params.pi_z = rng.uniform(config.pi_z_low, config.pi_z_high);
    for (auto& sp : params.strata) sp.mean = rng.uniform(config.mean_low, config.mean_high);
    for (auto& sp : params.strata) sp.sd = rng.uniform(config.sd_low, config.sd_high);
    return generate_units(config.n, params, config.seed);
}

double oracle_complier_mean(const LabeledDataset& d) {
    const auto x = d.data.covariate(0);
    StableSum sum;
    std::int64_t count = 0;
    for (std::size_t i = 0; i < d.strata.size(); ++i) {
        if (d.strata[i] == Stratum::complier) {
            sum.add(x[i]);
            ++count;
        }
    }
    if (count == 0) throw Error("empty-stratum", "no units carry the complier label");
    return sum.value() / static_cast<double>(count);
}

// ---- coverage experiment ----------------------------------------------

namespace {

struct RepOutcome {
    bool excluded = true;  // monotonicity/relevance or degenerate instrument
    double estimate = 0.0;
    double se_plugin = 0.0;
    bool covered_plugin = false;
    bool boot_ok = false;
    double se_boot = 0.0;
    bool covered_boot = false;
};

RepOutcome run_replication(const CoverageConfig& config, std::int64_t n,
                           std::uint64_t rep_seed) {
    RepOutcome out;
    LabeledDataset ld = config.variant == DgpVariant::fixed
                            ? generate_fixed({.n = n, .seed = rep_seed})
                            : [&] {
                                  RandomDgpConfig rc;
                                  rc.n = n;
                                  rc.seed = rep_seed;
                                  return generate_random(rc);
                              }();
    const double true_mu = ld.true_mu_co;
    MomentVector m;
    double estimate = 0.0;
    try {
        m = compute_moments(ld.data, 0);
        estimate = complier_mean(m);
    } catch (const Error&) {
        return out;  // excluded, counted by the caller
    }
    const Matrix6 sigma = sample_covariance(ld.data, 0);
    out.excluded = false;
    out.estimate = estimate;
    out.se_plugin = plugin_se(m, sigma);
    const auto [lo, hi] = confidence_interval(estimate, out.se_plugin, config.level);
    out.covered_plugin = lo <= true_mu && true_mu <= hi;
    if (config.with_bootstrap) {
        try {
            BootstrapOptions bo;
            bo.replicates = config.bootstrap_replicates;
            bo.seed = derive_seed(rep_seed, 0x626f6f74ULL);  // "boot"
            bo.level = config.level;
            const BootstrapResult br = bootstrap_se(ld.data, 0, bo);
            out.boot_ok = true;
            out.se_boot = br.estimate.se;
            out.covered_boot = br.estimate.ci_low <= true_mu && true_mu <= br.estimate.ci_high;
        } catch (const Error&) {
            out.boot_ok = false;
        }
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : stable_sum(v) / static_cast<double>(v.size());
}

CoverageRow summarize(const CoverageConfig& config, std::int64_t n, const char* method,
                      const std::vector<double>& estimates, const std::vector<double>& ses,
                      std::int64_t covered, std::int64_t excluded) {
    CoverageRow row;
    row.variant = config.variant == DgpVariant::fixed ? "fixed" : "random";
    row.n = n;
    row.method = method;
    row.replications = config.replications;
    row.used = static_cast<std::int64_t>(estimates.size());
    row.excluded = excluded;
    if (row.used > 0) {
        const double p = static_cast<double>(covered) / static_cast<double>(row.used);
        row.coverage = p;
        // Degenerate tallies (p in {0,1}) report the maximum-variance width
        // instead of a zero ribbon.
        const double pq = (p == 0.0 || p == 1.0) ? 0.25 : p * (1.0 - p);
        row.mc_half_width = 1.96 * std::sqrt(pq / static_cast<double>(row.used));
        row.mean_estimate = mean_of(estimates);
        row.empirical_sd = row.used > 1 ? sample_sd(estimates) : 0.0;
        row.mean_se = mean_of(ses);
        StableSum sq;
        for (double se : ses) {
            const double dev = se - row.empirical_sd;
            sq.add(dev * dev);
        }
        row.rmse_se = std::sqrt(sq.value() / static_cast<double>(row.used));
        row.rmse_se_scaled = row.rmse_se * static_cast<double>(n);
    }
    return row;
}

}  // namespace

CoverageResult run_coverage_experiment(const CoverageConfig& config) {
    if (config.replications < 1) throw Error("invalid-config", "at least one replication required");
    if (config.sizes.empty()) throw Error("invalid-config", "no sample sizes given");
    if (!(config.level > 0.0 && config.level < 1.0)) {
        throw Error("invalid-config", "confidence level must lie in (0,1)");
    }

    unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
    CoverageResult result;
    result.seed = config.seed;
    result.level = config.level;
    result.bootstrap_replicates = config.with_bootstrap ? config.bootstrap_replicates : 0;

    for (std::size_t si = 0; si < config.sizes.size(); ++si) {
        const std::int64_t n = config.sizes[si];
        const auto reps = static_cast<std::size_t>(config.replications);
        std::vector<RepOutcome> outcomes(reps);

        // Each replication writes its own slot; tallies below walk the slots
        // in replication order, so worker count never changes the result.
        auto worker = [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                const std::uint64_t rep_seed =
                    derive_seed(config.seed, static_cast<std::uint64_t>(si),
                                static_cast<std::uint64_t>(r));
                outcomes[r] = run_replication(config, n, rep_seed);
            }
        };
        const std::size_t chunk = (reps + threads - 1) / threads;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(reps, t * chunk);
            const std::size_t end = std::min(reps, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();

        std::vector<double> est_p, se_p, est_b, se_b;
        std::int64_t covered_p = 0, covered_b = 0, excluded = 0, boot_failed = 0;
        for (const auto& o : outcomes) {
            if (o.excluded) {
                ++excluded;
                continue;
            }
            est_p.push_back(o.estimate);
            se_p.push_back(o.se_plugin);
            covered_p += o.covered_plugin ? 1 : 0;
            if (config.with_bootstrap) {
                if (o.boot_ok) {
                    est_b.push_back(o.estimate);
                    se_b.push_back(o.se_boot);
                    covered_b += o.covered_boot ? 1 : 0;
                } else {
                    ++boot_failed;
                }
            }
        }
        result.rows.push_back(summarize(config, n, "plugin", est_p, se_p, covered_p, excluded));
        if (config.with_bootstrap) {
            result.rows.push_back(
                summarize(config, n, "bootstrap", est_b, se_b, covered_b, excluded + boot_failed));
        }
    }
    return result;
}

}  // namespace ivprof
