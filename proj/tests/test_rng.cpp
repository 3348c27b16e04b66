#include <doctest.h>

#include <set>

#include "ivprof/rng.hpp"

using namespace ivprof;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 test suite.
    auto out = Philox::block({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    out = Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    out = Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are deterministic and distinct") {
    Philox a(42, 0), b(42, 0), c(42, 1), d(43, 0);
    std::uint64_t first_a = 0;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        if (i == 0) first_a = va;
        CHECK(va == b.next_u64());
    }
    CHECK(c.next_u64() != first_a);
    CHECK(d.next_u64() != first_a);
}

TEST_CASE("uniform and bounded ranges") {
    Philox rng(7, 3);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_open();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        CHECK(rng.bounded(17) < 17);
    }
}

TEST_CASE("normal sampling matches its distribution roughly") {
    Philox rng(123, 0);
    const int n = 50000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(2.0, 0.5);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
    CHECK(var == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("derive_seed separates indices") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 50; ++a) {
        for (std::uint64_t b = 0; b < 50; ++b) {
            seen.insert(derive_seed(1, a, b));
        }
    }
    CHECK(seen.size() == 2500);
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}
