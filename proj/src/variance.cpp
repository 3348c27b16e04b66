#include "ivprof/variance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ivprof/rng.hpp"
#include "ivprof/stable_sum.hpp"
#include "ivprof/stats.hpp"

namespace ivprof {

std::string to_string(SeMethod m) {
    switch (m) {
        case SeMethod::plugin: return "plugin";
        case SeMethod::bootstrap: return "bootstrap";
        case SeMethod::within_cell: return "within-cell";
    }
    return "unknown";
}

Vector6 gradient(const MomentVector& m) {
    if (!(m.pi_z > 0.0 && m.pi_z < 1.0)) {
        throw Error("gradient-undefined", "gradient requires pi_z strictly inside (0,1)");
    }
    const double pi_z = m.pi_z;
    const double q_z = 1.0 - pi_z;
    const double pi_co = (1.0 - m.pi_vnt / pi_z) - m.pi_vat / q_z;
    if (pi_co == 0.0) {
        throw Error("gradient-undefined", "gradient requires a nonzero complier share");
    }
    const double num = m.mu - m.mu_vnt / pi_z - m.mu_vat / q_z;
    // d(num)/d(pi_z) and d(pi_co)/d(pi_z); the sixth entry is the quotient rule.
    const double dnum = m.mu_vnt / (pi_z * pi_z) - m.mu_vat / (q_z * q_z);
    const double dden = m.pi_vnt / (pi_z * pi_z) - m.pi_vat / (q_z * q_z);
    Vector6 g;
    g(0) = 1.0 / pi_co;
    g(1) = -1.0 / (pi_co * pi_z);
    g(2) = -1.0 / (pi_co * q_z);
    g(3) = num / (pi_z * pi_co * pi_co);
    g(4) = num / (q_z * pi_co * pi_co);
    g(5) = (dnum * pi_co - num * dden) / (pi_co * pi_co);
    return g;
}

namespace {

Matrix6 covariance_impl(std::span<const std::uint8_t> z, std::span<const std::uint8_t> d,
                        const double* x, std::int64_t n_rows, const MomentVector& m) {
    if (m.n < 2) {
        throw Error("insufficient-data", "sample covariance requires at least 2 usable rows");
    }
    // Two-pass: the moment vector is exactly the mean of the contribution
    // vectors, so only the centered cross-products remain.
    const double means[6] = {m.mu, m.mu_vnt, m.mu_vat, m.pi_vnt, m.pi_vat, m.pi_z};
    StableSum acc[6][6];
    for (std::int64_t i = 0; i < n_rows; ++i) {
        const double xi = x ? x[i] : 0.0;
        if (std::isnan(xi)) continue;
        const int zi = z[static_cast<std::size_t>(i)];
        const int di = d[static_cast<std::size_t>(i)];
        const int vnt = zi & (1 - di);
        const int vat = (1 - zi) & di;
        const double c[6] = {xi, vnt ? xi : 0.0, vat ? xi : 0.0,
                             static_cast<double>(vnt), static_cast<double>(vat),
                             static_cast<double>(zi)};
        for (int a = 0; a < 6; ++a) {
            const double da = c[a] - means[a];
            for (int b = a; b < 6; ++b) {
                acc[a][b].add(da * (c[b] - means[b]));
            }
        }
    }
    Matrix6 sigma;
    const double denom = static_cast<double>(m.n - 1);
    for (int a = 0; a < 6; ++a) {
        for (int b = a; b < 6; ++b) {
            const double v = acc[a][b].value() / denom;
            sigma(a, b) = v;
            sigma(b, a) = v;
        }
    }
    return sigma;
}

}  // namespace

Matrix6 sample_covariance(const Dataset& data, int covariate_index) {
    const auto x = data.covariate(covariate_index);
    const MomentVector m = compute_moments(data, covariate_index);
    return covariance_impl(data.z(), data.d(), x.data(), data.n(), m);
}

Matrix6 sample_covariance(const Dataset& data) {
    const MomentVector m = compute_moments(data);
    return covariance_impl(data.z(), data.d(), nullptr, data.n(), m);
}

namespace {

double quadratic_form_se(double q, std::int64_t n) {
    if (q < -1e-10) {
        std::ostringstream msg;
        msg << "quadratic form is negative (" << q << "); covariance matrix is invalid";
        throw Error("invalid-covariance", msg.str());
    }
    return std::sqrt(std::max(q, 0.0) / static_cast<double>(n));
}

}  // namespace

double plugin_se(const MomentVector& m, const Matrix6& sigma) {
    const Vector6 g = gradient(m);
    return quadratic_form_se(g.dot(sigma * g), m.n);
}

std::pair<double, double> confidence_interval(double point, double se, double level) {
    if (se < 0.0) throw Error("invalid-data", "standard error must be nonnegative");
    if (!(level > 0.0 && level < 1.0)) throw Error("invalid-level", "confidence level must lie in (0,1)");
    const double zq = normal_quantile(0.5 * (1.0 + level));
    return {point - zq * se, point + zq * se};
}

ShareSes strata_share_se(const MomentVector& m, const Matrix6& sigma) {
    if (!(m.pi_z > 0.0 && m.pi_z < 1.0)) {
        throw Error("gradient-undefined", "share SEs require pi_z strictly inside (0,1)");
    }
    const double pi_z = m.pi_z;
    const double q_z = 1.0 - pi_z;
    const Eigen::Matrix3d s3 = sigma.bottomRightCorner<3, 3>();
    const Eigen::Vector3d g_nt(1.0 / pi_z, 0.0, -m.pi_vnt / (pi_z * pi_z));
    const Eigen::Vector3d g_at(0.0, 1.0 / q_z, m.pi_vat / (q_z * q_z));
    const Eigen::Vector3d g_co = -(g_nt + g_at);
    ShareSes out;
    out.se_pi_nt = quadratic_form_se(g_nt.dot(s3 * g_nt), m.n);
    out.se_pi_at = quadratic_form_se(g_at.dot(s3 * g_at), m.n);
    out.se_pi_co = quadratic_form_se(g_co.dot(s3 * g_co), m.n);
    return out;
}

CellSes observable_strata_se(const Dataset& data, int covariate_index) {
    const auto x = data.covariate(covariate_index);
    const auto z = data.z();
    const auto d = data.d();
    std::vector<double> cell_nt, cell_at, pooled;
    pooled.reserve(static_cast<std::size_t>(data.n()));
    for (std::int64_t i = 0; i < data.n(); ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        if (std::isnan(xi)) continue;
        pooled.push_back(xi);
        const auto zi = z[static_cast<std::size_t>(i)];
        const auto di = d[static_cast<std::size_t>(i)];
        if (zi == 1 && di == 0) cell_nt.push_back(xi);
        if (zi == 0 && di == 1) cell_at.push_back(xi);
    }
    CellSes out;
    out.n_nt = static_cast<std::int64_t>(cell_nt.size());
    out.n_at = static_cast<std::int64_t>(cell_at.size());
    if (pooled.size() < 2) {
        throw Error("insufficient-data", "pooled SE requires at least 2 usable rows");
    }
    out.se_sample = sample_sd(pooled) / std::sqrt(static_cast<double>(pooled.size()));
    if (cell_nt.size() >= 2) {
        out.se_nt = sample_sd(cell_nt) / std::sqrt(static_cast<double>(cell_nt.size()));
    } else {
        out.warnings.push_back({"small-cell",
                                "never-taker cell has fewer than 2 units; within-cell SE undefined"});
    }
    if (cell_at.size() >= 2) {
        out.se_at = sample_sd(cell_at) / std::sqrt(static_cast<double>(cell_at.size()));
    } else {
        out.warnings.push_back({"small-cell",
                                "always-taker cell has fewer than 2 units; within-cell SE undefined"});
    }
    return out;
}

// ---- bootstrap --------------------------------------------------------

namespace {

// Complete-case copy of one covariate; resampling then works on dense rows.
struct BootRows {
    std::vector<std::uint8_t> z, d;
    std::vector<double> x;
    std::int64_t n() const { return static_cast<std::int64_t>(z.size()); }
};

BootRows complete_cases(const Dataset& data, int covariate_index) {
    BootRows rows;
    const auto z = data.z();
    const auto d = data.d();
    if (covariate_index >= 0) {
        const auto x = data.covariate(covariate_index);
        for (std::int64_t i = 0; i < data.n(); ++i) {
            const double xi = x[static_cast<std::size_t>(i)];
            if (std::isnan(xi)) continue;
            rows.z.push_back(z[static_cast<std::size_t>(i)]);
            rows.d.push_back(d[static_cast<std::size_t>(i)]);
            rows.x.push_back(xi);
        }
    } else {
        rows.z.assign(z.begin(), z.end());
        rows.d.assign(d.begin(), d.end());
        rows.x.assign(z.size(), 0.0);
    }
    return rows;
}

struct ReplicateStats {
    double mu_co = 0.0;
    double pi_nt = 0.0, pi_at = 0.0, pi_co = 0.0;
    bool valid = false;
};

// One resample, plain summation: replicate noise dwarfs accumulation error
// and the fixed evaluation order keeps results bit-reproducible.
ReplicateStats resample_once(const BootRows& rows, Philox& rng) {
    const std::int64_t n = rows.n();
    double s_mu = 0.0, s_mu_vnt = 0.0, s_mu_vat = 0.0;
    std::int64_t c_vnt = 0, c_vat = 0, c_z = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(n)));
        const int zi = rows.z[j];
        const int di = rows.d[j];
        const double xi = rows.x[j];
        const int vnt = zi & (1 - di);
        const int vat = (1 - zi) & di;
        s_mu += xi;
        if (vnt) s_mu_vnt += xi;
        if (vat) s_mu_vat += xi;
        c_vnt += vnt;
        c_vat += vat;
        c_z += zi;
    }
    ReplicateStats r;
    if (c_z == 0 || c_z == n) return r;  // degenerate instrument
    const auto fn = static_cast<double>(n);
    const double pi_z = static_cast<double>(c_z) / fn;
    const double q_z = 1.0 - pi_z;
    r.pi_nt = static_cast<double>(c_vnt) / fn / pi_z;
    r.pi_at = static_cast<double>(c_vat) / fn / q_z;
    r.pi_co = (1.0 - r.pi_nt) - r.pi_at;
    if (r.pi_co <= 0.0) return r;  // monotonicity/relevance fails in resample
    r.mu_co = (s_mu / fn - s_mu_vnt / fn / pi_z - s_mu_vat / fn / q_z) / r.pi_co;
    r.valid = true;
    return r;
}

// Shared driver: runs attempt-indexed substreams until B valid replicates.
std::vector<ReplicateStats> bootstrap_stats(const BootRows& rows, const BootstrapOptions& options,
                                            std::int64_t& discarded) {
    if (options.replicates < 2) {
        throw Error("insufficient-data", "bootstrap requires at least 2 replicates");
    }
    const std::int64_t cap = 10 * options.replicates;
    std::vector<ReplicateStats> stats;
    stats.reserve(static_cast<std::size_t>(options.replicates));
    std::int64_t attempts = 0;
    discarded = 0;
    while (static_cast<std::int64_t>(stats.size()) < options.replicates && attempts < cap) {
        Philox rng(options.seed, static_cast<std::uint64_t>(attempts));
        ++attempts;
        const ReplicateStats r = resample_once(rows, rng);
        if (!r.valid) {
            ++discarded;
            continue;
        }
        stats.push_back(r);
    }
    if (static_cast<std::int64_t>(stats.size()) < options.replicates) {
        std::ostringstream msg;
        msg << "bootstrap exhausted " << cap << " draws with only " << stats.size()
            << " valid replicates (" << discarded << " degenerate resamples discarded)";
        throw Error("bootstrap-degenerate", msg.str());
    }
    return stats;
}

std::vector<double> extract_field(const std::vector<ReplicateStats>& stats,
                                  double ReplicateStats::* field) {
    std::vector<double> out;
    out.reserve(stats.size());
    for (const auto& s : stats) out.push_back(s.*field);
    return out;
}

}  // namespace

BootstrapResult bootstrap_se(const Dataset& data, int covariate_index,
                             const BootstrapOptions& options) {
    const MomentVector m = compute_moments(data, covariate_index);
    const BootRows rows = complete_cases(data, covariate_index);

    // Resample before touching the point estimate: a dataset that violates
    // monotonicity in-sample discards (nearly) every resample and surfaces
    // as bootstrap-degenerate, which is the contract for this path.
    BootstrapResult result;
    const auto stats = bootstrap_stats(rows, options, result.discarded);
    const std::vector<double> estimates = extract_field(stats, &ReplicateStats::mu_co);
    result.replicates = static_cast<std::int64_t>(estimates.size());
    const double point = complier_mean(m);

    Estimate& e = result.estimate;
    e.point = point;
    e.se = sample_sd(estimates);
    e.method = SeMethod::bootstrap;
    e.n = m.n;
    if (options.percentile_ci) {
        const double alpha = 1.0 - options.level;
        e.ci_low = sample_quantile(estimates, alpha / 2.0);
        e.ci_high = sample_quantile(estimates, 1.0 - alpha / 2.0);
    } else {
        std::tie(e.ci_low, e.ci_high) = confidence_interval(point, e.se, options.level);
    }
    if (result.discarded > 0) {
        std::ostringstream msg;
        msg << result.discarded << " degenerate resamples discarded and redrawn";
        e.warnings.push_back({"bootstrap-discards", msg.str()});
    }
    return result;
}

ShareSes bootstrap_share_se(const Dataset& data, const BootstrapOptions& options) {
    const BootRows rows = complete_cases(data, -1);
    std::int64_t discarded = 0;
    const auto stats = bootstrap_stats(rows, options, discarded);
    return {sample_sd(extract_field(stats, &ReplicateStats::pi_nt)),
            sample_sd(extract_field(stats, &ReplicateStats::pi_at)),
            sample_sd(extract_field(stats, &ReplicateStats::pi_co))};
}

}  // namespace ivprof
