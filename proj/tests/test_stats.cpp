#include <doctest.h>

#include <vector>

#include "ivprof/rng.hpp"
#include "ivprof/stable_sum.hpp"
#include "ivprof/stats.hpp"

using namespace ivprof;

TEST_CASE("normal quantile reference values") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-9));
    CHECK_THROWS_AS((void)normal_quantile(0.0), Error);
    CHECK_THROWS_AS((void)normal_quantile(1.0), Error);
}

TEST_CASE("quantile and cdf invert each other") {
    Philox rng(5, 0);
    for (int i = 0; i < 500; ++i) {
        const double p = rng.uniform(0.001, 0.999);
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    }
}

TEST_CASE("stable sum beats naive summation") {
    // 1 + 1e-16 added 1e7 times loses the small term entirely when summed
    // naively; the compensated sum keeps it.
    StableSum s;
    s.add(1.0);
    for (int i = 0; i < 10000000; ++i) s.add(1e-16);
    CHECK(s.value() == doctest::Approx(1.0 + 1e-9).epsilon(1e-12));
}

TEST_CASE("sample moments") {
    const std::vector<double> v{3, 5, 1, 1, 4, 2, 2, 6, 3, 1};
    CHECK(sample_mean(v) == doctest::Approx(2.8).epsilon(1e-15));
    // Sum of squared deviations is 27.6; unbiased variance divides by 9.
    CHECK(sample_variance(v) == doctest::Approx(27.6 / 9.0).epsilon(1e-14));
    CHECK(sample_sd(v) / std::sqrt(10.0) == doctest::Approx(0.5537749241945384).epsilon(1e-14));
    CHECK_THROWS_AS((void)sample_variance(std::vector<double>{1.0}), Error);
}

TEST_CASE("ks distance is small for normal data and large otherwise") {
    Philox rng(11, 0);
    std::vector<double> normal, shifted;
    for (int i = 0; i < 4000; ++i) {
        normal.push_back(rng.normal(0.0, 1.0));
        shifted.push_back(rng.normal(1.0, 1.0));
    }
    CHECK(ks_distance_normal(normal) < 0.03);
    CHECK(ks_distance_normal(shifted) > 0.3);
}

TEST_CASE("interpolated quantiles") {
    std::vector<double> v{1, 2, 3, 4};
    CHECK(sample_quantile(v, 0.0) == 1.0);
    CHECK(sample_quantile(v, 1.0) == 4.0);
    CHECK(sample_quantile(v, 0.5) == doctest::Approx(2.5));
}
