#include <doctest.h>

#include <cmath>

#include "ivprof/moments.hpp"
#include "ivprof/report.hpp"
#include "ivprof/simulate.hpp"
#include "test_util.hpp"

using namespace ivprof;
using namespace ivprof::testutil;

TEST_CASE("fixed DGP determinism and treatment map") {
    FixedDgpConfig cfg;
    cfg.n = 5000;
    cfg.seed = 42;
    const auto a = generate_fixed(cfg);
    const auto b = generate_fixed(cfg);
    CHECK(a.true_mu_co == 2.0);
    REQUIRE(a.data.n() == 5000);
    const auto xa = a.data.covariate(0);
    const auto xb = b.data.covariate(0);
    for (std::int64_t i = 0; i < 5000; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        CHECK(xa[idx] == xb[idx]);
        CHECK(a.data.z()[idx] == b.data.z()[idx]);
        // The strata map: nt -> 0, at -> 1, co -> z.
        const int z = a.data.z()[idx];
        const int d = a.data.d()[idx];
        switch (a.strata[idx]) {
            case Stratum::never_taker: CHECK(d == 0); break;
            case Stratum::always_taker: CHECK(d == 1); break;
            case Stratum::complier: CHECK(d == z); break;
        }
    }
    cfg.seed = 43;
    const auto c = generate_fixed(cfg);
    CHECK(c.data.covariate(0)[0] != xa[0]);
}

TEST_CASE("fixed DGP hits its shares and instrument rate at scale") {
    FixedDgpConfig cfg;
    cfg.n = 100000;
    cfg.seed = 7;
    const auto ld = generate_fixed(cfg);
    double z_rate = 0.0;
    std::array<double, 3> shares{0, 0, 0};
    for (std::int64_t i = 0; i < cfg.n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        z_rate += ld.data.z()[idx];
        shares[static_cast<int>(ld.strata[idx])] += 1.0;
    }
    z_rate /= static_cast<double>(cfg.n);
    CHECK(z_rate == doctest::Approx(0.75).epsilon(0.01));
    for (double s : shares) {
        CHECK(s / static_cast<double>(cfg.n) == doctest::Approx(1.0 / 3.0).epsilon(0.03));
    }
}

TEST_CASE("fixed DGP config validation") {
    FixedDgpConfig cfg;
    cfg.n = 0;
    CHECK_THROWS_AS((void)generate_fixed(cfg), Error);
    cfg.n = 10;
    cfg.pi_z = 1.0;
    CHECK_THROWS_AS((void)generate_fixed(cfg), Error);
    cfg.pi_z = 0.75;
    cfg.shares = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS((void)generate_fixed(cfg), Error);
    cfg.shares = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    cfg.complier.sd = 0.0;
    CHECK_THROWS_AS((void)generate_fixed(cfg), Error);
}

TEST_CASE("random DGP respects its parameter bounds") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RandomDgpConfig cfg;
        cfg.n = 50;
        cfg.seed = seed;
        const auto ld = generate_random(cfg);
        double total = 0.0;
        for (double s : ld.params.shares) {
            CHECK(s >= 0.1);
            total += s;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ld.params.pi_z >= 0.1);
        CHECK(ld.params.pi_z <= 0.9);
        for (const auto& sp : ld.params.strata) {
            CHECK(sp.mean >= -2.0);
            CHECK(sp.mean <= 2.0);
            CHECK(sp.sd >= 0.25);
            CHECK(sp.sd <= 2.0);
        }
        // The recorded truth is the drawn complier-stratum mean.
        CHECK(ld.true_mu_co == ld.params.strata[static_cast<int>(Stratum::complier)].mean);
    }
}

TEST_CASE("oracle complier mean") {
    Dataset data = Dataset::from_observations({{1, 1, {1.0}}, {0, 0, {2.0}}, {1, 1, {3.0}}});
    LabeledDataset ld;
    ld.data = data;
    ld.strata = {Stratum::complier, Stratum::complier, Stratum::complier};
    CHECK(oracle_complier_mean(ld) == doctest::Approx(2.0).epsilon(1e-15));
    // All compliers: oracle == sample mean == plug-in estimate.
    const auto m = compute_moments(data, 0);
    CHECK(oracle_complier_mean(ld) == m.mu);
    CHECK(complier_mean(m) == m.mu);

    ld.strata = {Stratum::never_taker, Stratum::never_taker, Stratum::never_taker};
    try {
        (void)oracle_complier_mean(ld);
        FAIL("expected empty-stratum");
    } catch (const Error& e) {
        CHECK(e.code() == "empty-stratum");
    }
}

TEST_CASE("plug-in tracks the oracle at moderate size") {
    FixedDgpConfig cfg;
    cfg.n = 20000;
    cfg.seed = 1234;
    const auto ld = generate_fixed(cfg);
    const auto m = compute_moments(ld.data, 0);
    const double gap = std::abs(complier_mean(m) - oracle_complier_mean(ld));
    CHECK(gap < 0.1);  // both estimate mu_co = 2; SE here is ~0.02
}

TEST_CASE("coverage experiment is deterministic across runs and workers") {
    CoverageConfig cfg;
    cfg.variant = DgpVariant::fixed;
    cfg.sizes = {300};
    cfg.replications = 60;
    cfg.bootstrap_replicates = 40;
    cfg.with_bootstrap = true;
    cfg.seed = 5;
    cfg.threads = 1;
    const auto r1 = run_coverage_experiment(cfg);
    cfg.threads = 4;
    const auto r2 = run_coverage_experiment(cfg);
    const auto r3 = run_coverage_experiment(cfg);
    CHECK(emit_coverage_csv(r1) == emit_coverage_csv(r2));
    CHECK(emit_coverage_csv(r2) == emit_coverage_csv(r3));
    REQUIRE(r1.rows.size() == 2);
    CHECK(r1.rows[0].method == "plugin");
    CHECK(r1.rows[1].method == "bootstrap");
    CHECK(r1.rows[0].used + r1.rows[0].excluded == 60);
    CHECK(r1.rows[0].coverage >= 0.0);
    CHECK(r1.rows[0].coverage <= 1.0);
}

TEST_CASE("coverage experiment sane at small scale") {
    CoverageConfig cfg;
    cfg.variant = DgpVariant::fixed;
    cfg.sizes = {500};
    cfg.replications = 200;
    cfg.with_bootstrap = false;
    cfg.seed = 9;
    const auto r = run_coverage_experiment(cfg);
    REQUIRE(r.rows.size() == 1);
    const auto& row = r.rows[0];
    CHECK(row.used == 200);
    CHECK(row.coverage > 0.85);
    CHECK(row.coverage < 1.0);
    CHECK(row.mean_estimate == doctest::Approx(2.0).epsilon(0.02));
    CHECK(row.mean_se == doctest::Approx(row.empirical_sd).epsilon(0.2));
    CHECK(row.rmse_se_scaled == doctest::Approx(row.rmse_se * 500).epsilon(1e-12));
}

TEST_CASE("single-replication tally degenerates gracefully") {
    CoverageConfig cfg;
    cfg.variant = DgpVariant::fixed;
    cfg.sizes = {500};
    cfg.replications = 1;
    cfg.with_bootstrap = false;
    cfg.seed = 2;
    const auto r = run_coverage_experiment(cfg);
    const auto& row = r.rows[0];
    CHECK((row.coverage == 0.0 || row.coverage == 1.0));
    CHECK(row.mc_half_width == doctest::Approx(0.98).epsilon(1e-12));
}

TEST_CASE("random-variant experiment reports exclusions consistently") {
    CoverageConfig cfg;
    cfg.variant = DgpVariant::random;
    cfg.sizes = {40, 200};
    cfg.replications = 150;
    cfg.with_bootstrap = false;
    cfg.seed = 31;
    const auto r = run_coverage_experiment(cfg);
    REQUIRE(r.rows.size() == 2);
    for (const auto& row : r.rows) {
        CHECK(row.used + row.excluded == 150);
        CHECK(row.replications == 150);
        if (row.used > 0) {
            CHECK(row.coverage >= 0.0);
            CHECK(row.coverage <= 1.0);
        }
    }
}

TEST_CASE("config validation") {
    CoverageConfig cfg;
    cfg.replications = 0;
    CHECK_THROWS_AS((void)run_coverage_experiment(cfg), Error);
    cfg.replications = 10;
    cfg.sizes = {};
    CHECK_THROWS_AS((void)run_coverage_experiment(cfg), Error);
}
