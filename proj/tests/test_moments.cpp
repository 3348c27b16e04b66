#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ivprof/moments.hpp"
#include "ivprof/rng.hpp"
#include "ivprof/simulate.hpp"
#include "test_util.hpp"

using namespace ivprof;
using namespace ivprof::testutil;

TEST_CASE("six moments of the reference dataset") {
    const auto m = compute_moments(ten_obs(), 0);
    CHECK(m.mu == doctest::Approx(2.8).epsilon(1e-15));
    CHECK(m.mu_vnt == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m.mu_vat == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m.pi_vnt == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m.pi_vat == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(m.pi_z == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.n == 10);
    CHECK(m.n_dropped == 0);
}

TEST_CASE("perfect compliance empties the off-diagonal moments") {
    const auto m = compute_moments(perfect_compliance(), 0);
    CHECK(m.mu_vnt == 0.0);
    CHECK(m.mu_vat == 0.0);
    CHECK(m.pi_vnt == 0.0);
    CHECK(m.pi_vat == 0.0);
}

TEST_CASE("constant covariate factors out") {
    std::vector<Observation> rows;
    for (int i = 0; i < 12; ++i) rows.push_back({i % 2, (i / 2) % 2, {7.5}});
    const auto m = compute_moments(Dataset::from_observations(rows), 0);
    CHECK(m.mu == 7.5);
    CHECK(m.mu_vnt == doctest::Approx(7.5 * m.pi_vnt).epsilon(1e-15));
    CHECK(m.mu_vat == doctest::Approx(7.5 * m.pi_vat).epsilon(1e-15));
}

TEST_CASE("moment error paths") {
    const std::vector<Observation> all_z1{{1, 1, {1.0}}, {1, 0, {2.0}}};
    try {
        (void)compute_moments(Dataset::from_observations(all_z1), 0);
        FAIL("expected degenerate-instrument");
    } catch (const Error& e) {
        CHECK(e.code() == "degenerate-instrument");
    }
    // All covariate cells missing -> empty-data for this covariate.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<Observation> all_missing{{1, 1, {nan}}, {0, 0, {nan}}};
    try {
        (void)compute_moments(Dataset::from_observations(all_missing), 0);
        FAIL("expected empty-data");
    } catch (const Error& e) {
        CHECK(e.code() == "empty-data");
    }
}

TEST_CASE("missing cells drop per covariate and keep the rest") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto data = Dataset::from_observations({
        {1, 1, {3.0, nan}}, {1, 0, {1.0, 2.0}}, {0, 0, {2.0, 4.0}}, {0, 1, {nan, 6.0}},
    });
    const auto m0 = compute_moments(data, 0);
    CHECK(m0.n == 3);
    CHECK(m0.n_dropped == 1);
    CHECK(m0.mu == doctest::Approx(2.0));
    const auto m1 = compute_moments(data, 1);
    CHECK(m1.n == 3);
    CHECK(m1.mu == doctest::Approx(4.0));
    // The shares-only overload sees every row.
    CHECK(compute_moments(data).n == 4);
}

TEST_CASE("observable strata means") {
    const auto r = observable_strata_means(ten_obs(), 0);
    REQUIRE(r.mu_nt.has_value());
    REQUIRE(r.mu_at.has_value());
    CHECK(*r.mu_nt == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*r.mu_at == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(r.n_nt == 2);
    CHECK(r.n_at == 1);
    CHECK(r.warnings.empty());

    const auto p = observable_strata_means(perfect_compliance(), 0);
    CHECK_FALSE(p.mu_nt.has_value());
    CHECK_FALSE(p.mu_at.has_value());
    REQUIRE(p.warnings.size() == 2);
    CHECK(p.warnings[0].code == "one-sided-compliance");

    const auto singleton = observable_strata_means(
        Dataset::from_observations({{1, 0, {7.0}}, {1, 1, {1.0}}, {0, 0, {2.0}}}), 0);
    CHECK(*singleton.mu_nt == 7.0);
}

TEST_CASE("strata shares of the reference dataset") {
    const auto s = strata_shares(compute_moments(ten_obs(), 0));
    CHECK(s.pi_nt == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(s.pi_at == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(s.pi_co == doctest::Approx(0.4).epsilon(1e-14));
    // The first-stage difference is the same expression evaluated the same
    // way; require bit equality.
    CHECK(s.first_stage == s.pi_co);
    CHECK(s.pi_nt + s.pi_at + s.pi_co == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("perfect compliance shares") {
    const auto s = strata_shares(compute_moments(perfect_compliance(), 0));
    CHECK(s.pi_nt == 0.0);
    CHECK(s.pi_at == 0.0);
    CHECK(s.pi_co == 1.0);
}

TEST_CASE("monotonicity violation halts share estimation") {
    // Off-diagonal cells only: both observable strata exhaust their arm.
    std::vector<Observation> rows;
    for (int i = 0; i < 5; ++i) rows.push_back({1, 0, {1.0 * i}});
    for (int i = 0; i < 5; ++i) rows.push_back({0, 1, {2.0 * i}});
    try {
        (void)strata_shares(compute_moments(Dataset::from_observations(rows), 0));
        FAIL("expected monotonicity-or-relevance-violation");
    } catch (const Error& e) {
        CHECK(e.code() == "monotonicity-or-relevance-violation");
        CHECK(std::string(e.what()).find("pi_co=-1") != std::string::npos);
    }
    const auto raw = strata_shares_unchecked(compute_moments(Dataset::from_observations(rows), 0));
    CHECK(raw.pi_co == doctest::Approx(-1.0));
}

TEST_CASE("complier mean of the reference dataset") {
    CHECK(complier_mean(compute_moments(ten_obs(), 0)) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("perfect compliance gives the sample mean exactly") {
    const auto m = compute_moments(perfect_compliance(), 0);
    CHECK(complier_mean(m) == m.mu);
}

TEST_CASE("constant covariate gives the constant for any compliance pattern") {
    Philox rng(99, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Observation> rows;
        for (int i = 0; i < 40; ++i) {
            const int z = rng.bernoulli(0.5) ? 1 : 0;
            const int d = rng.bernoulli(0.6) ? 1 : 0;
            rows.push_back({z, d, {-3.25}});
        }
        const auto m = compute_moments(Dataset::from_observations(rows), 0);
        double mu_co = 0.0;
        try {
            mu_co = complier_mean(m);
        } catch (const Error&) {
            continue;  // random pattern may violate monotonicity; not under test
        }
        CHECK(mu_co == doctest::Approx(-3.25).epsilon(1e-12));
    }
}

namespace {

// Random labeled dataset via the fixed-DGP machinery; the properties below
// only need a valid (Z, D, X) law, not any particular parameter values.
Dataset random_dataset(std::uint64_t seed, std::int64_t n) {
    RandomDgpConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    return generate_random(cfg).data;
}

}  // namespace

TEST_CASE("decomposition identity holds on random datasets") {
    Philox meta(2024, 0);
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = static_cast<std::int64_t>(20 + meta.bounded(2000));
        const auto data = random_dataset(derive_seed(77, trial), n);
        MomentVector m;
        StrataShares s;
        try {
            m = compute_moments(data, 0);
            s = strata_shares(m);
        } catch (const Error&) {
            continue;
        }
        const auto obs = observable_strata_means(data, 0);
        double lhs = s.pi_co * complier_mean(m);
        if (obs.mu_at) lhs += s.pi_at * *obs.mu_at;
        if (obs.mu_nt) lhs += s.pi_nt * *obs.mu_nt;
        CHECK(close_rel(lhs, m.mu, 1e-10));
    }
}

TEST_CASE("first-stage identity is exact") {
    for (int trial = 0; trial < 100; ++trial) {
        const auto data = random_dataset(derive_seed(78, trial), 500);
        const auto s = strata_shares_unchecked(compute_moments(data, 0));
        CHECK(s.first_stage == s.pi_co);
        CHECK(s.pi_nt + s.pi_at + s.pi_co == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("affine equivariance of all strata means") {
    Philox rng(31337, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto base = random_dataset(derive_seed(79, trial), 400);
        const double a = rng.uniform(-4.0, 4.0);
        const double b = rng.uniform(-10.0, 10.0);
        if (std::abs(a) < 0.05) continue;
        std::vector<double> mapped(base.covariate(0).begin(), base.covariate(0).end());
        for (auto& v : mapped) v = a * v + b;
        const Dataset scaled({base.z().begin(), base.z().end()},
                             {base.d().begin(), base.d().end()}, {mapped}, {"x"});
        const auto m0 = compute_moments(base, 0);
        const auto m1 = compute_moments(scaled, 0);
        CHECK(close_rel(complier_mean(m1), a * complier_mean(m0) + b, 1e-9));
        const auto obs0 = observable_strata_means(base, 0);
        const auto obs1 = observable_strata_means(scaled, 0);
        if (obs0.mu_nt) CHECK(close_rel(*obs1.mu_nt, a * *obs0.mu_nt + b, 1e-9));
        if (obs0.mu_at) CHECK(close_rel(*obs1.mu_at, a * *obs0.mu_at + b, 1e-9));
        CHECK(close_rel(m1.mu, a * m0.mu + b, 1e-9));
    }
}

TEST_CASE("moments are stable under row shuffling") {
    const auto base = random_dataset(4242, 3000);
    std::vector<std::size_t> order(3000);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Philox rng(17, 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.bounded(i))]);
    }
    std::vector<std::uint8_t> z, d;
    std::vector<double> x;
    for (const auto i : order) {
        z.push_back(base.z()[i]);
        d.push_back(base.d()[i]);
        x.push_back(base.covariate(0)[i]);
    }
    const auto m0 = compute_moments(base, 0);
    const auto m1 = compute_moments(Dataset(std::move(z), std::move(d), {std::move(x)}, {"x"}), 0);
    CHECK(close_rel(m0.mu, m1.mu, 1e-13));
    CHECK(close_rel(m0.mu_vnt, m1.mu_vnt, 1e-13));
    CHECK(close_rel(m0.mu_vat, m1.mu_vat, 1e-13));
    CHECK(m0.pi_vnt == m1.pi_vnt);
    CHECK(m0.pi_vat == m1.pi_vat);
    CHECK(m0.pi_z == m1.pi_z);
}
