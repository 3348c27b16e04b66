#include "ivprof/moments.hpp"

#include <cmath>
#include <sstream>

#include "ivprof/stable_sum.hpp"

namespace ivprof {

namespace {

MomentVector moments_impl(std::span<const std::uint8_t> z, std::span<const std::uint8_t> d,
                          const double* x, std::int64_t n_rows) {
    StableSum s_mu, s_mu_vnt, s_mu_vat, s_pi_vnt, s_pi_vat, s_pi_z;
    std::int64_t used = 0, dropped = 0;
    bool seen_z0 = false, seen_z1 = false;
    for (std::int64_t i = 0; i < n_rows; ++i) {
        const double xi = x ? x[i] : 0.0;
        if (std::isnan(xi)) {
            ++dropped;
            continue;
        }
        ++used;
        const int zi = z[static_cast<std::size_t>(i)];
        const int di = d[static_cast<std::size_t>(i)];
        (zi ? seen_z1 : seen_z0) = true;
        const int vnt = zi & (1 - di);
        const int vat = (1 - zi) & di;
        s_mu.add(xi);
        s_mu_vnt.add(vnt ? xi : 0.0);
        s_mu_vat.add(vat ? xi : 0.0);
        s_pi_vnt.add(vnt);
        s_pi_vat.add(vat);
        s_pi_z.add(zi);
    }
    if (used == 0) throw Error("empty-data", "no usable observations");
    if (!seen_z0 || !seen_z1) {
        throw Error("degenerate-instrument", "instrument takes a single value across the usable rows");
    }
    const auto denom = static_cast<double>(used);
    MomentVector m;
    m.mu = s_mu.value() / denom;
    m.mu_vnt = s_mu_vnt.value() / denom;
    m.mu_vat = s_mu_vat.value() / denom;
    m.pi_vnt = s_pi_vnt.value() / denom;
    m.pi_vat = s_pi_vat.value() / denom;
    m.pi_z = s_pi_z.value() / denom;
    m.n = used;
    m.n_dropped = dropped;
    return m;
}

}  // namespace

MomentVector compute_moments(const Dataset& data, int covariate_index) {
    const auto x = data.covariate(covariate_index);
    return moments_impl(data.z(), data.d(), x.data(), data.n());
}

MomentVector compute_moments(const Dataset& data) {
    return moments_impl(data.z(), data.d(), nullptr, data.n());
}

ObservableMeans observable_strata_means(const Dataset& data, int covariate_index) {
    const auto x = data.covariate(covariate_index);
    const auto z = data.z();
    const auto d = data.d();
    StableSum sum_nt, sum_at;
    ObservableMeans result;
    for (std::int64_t i = 0; i < data.n(); ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        if (std::isnan(xi)) continue;
        const auto zi = z[static_cast<std::size_t>(i)];
        const auto di = d[static_cast<std::size_t>(i)];
        if (zi == 1 && di == 0) {
            sum_nt.add(xi);
            ++result.n_nt;
        } else if (zi == 0 && di == 1) {
            sum_at.add(xi);
            ++result.n_at;
        }
    }
    if (result.n_nt > 0) {
        result.mu_nt = sum_nt.value() / static_cast<double>(result.n_nt);
    } else {
        result.warnings.push_back({"one-sided-compliance",
                                   "observable never-taker cell (Z=1,D=0) is empty; never-taker mean undefined"});
    }
    if (result.n_at > 0) {
        result.mu_at = sum_at.value() / static_cast<double>(result.n_at);
    } else {
        result.warnings.push_back({"one-sided-compliance",
                                   "observable always-taker cell (Z=0,D=1) is empty; always-taker mean undefined"});
    }
    return result;
}

StrataShares strata_shares_unchecked(const MomentVector& m) {
    if (!(m.pi_z > 0.0 && m.pi_z < 1.0)) {
        throw Error("degenerate-instrument", "pi_z must lie strictly between 0 and 1");
    }
    StrataShares s;
    s.pi_nt = m.pi_vnt / m.pi_z;
    s.pi_at = m.pi_vat / (1.0 - m.pi_z);
    s.pi_co = (1.0 - s.pi_nt) - s.pi_at;
    s.first_stage = (1.0 - m.pi_vnt / m.pi_z) - m.pi_vat / (1.0 - m.pi_z);
    return s;
}

StrataShares strata_shares(const MomentVector& m) {
    const StrataShares s = strata_shares_unchecked(m);
    if (s.pi_co <= 0.0) {
        std::ostringstream msg;
        msg << "estimated complier share is not positive (pi_nt=" << s.pi_nt
            << ", pi_at=" << s.pi_at << ", pi_co=" << s.pi_co
            << "); monotonicity or relevance fails in-sample";
        throw Error("monotonicity-or-relevance-violation", msg.str());
    }
    return s;
}

double complier_mean(const MomentVector& m) {
    const StrataShares s = strata_shares(m);
    const double numerator = m.mu - m.mu_vnt / m.pi_z - m.mu_vat / (1.0 - m.pi_z);
    return numerator / s.pi_co;
}

}  // namespace ivprof
