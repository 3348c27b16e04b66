#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ivprof/error.hpp"
#include "ivprof/stable_sum.hpp"

namespace ivprof {

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Standard normal quantile, Wichura's AS241 (PPND16). Accurate to ~1e-16
// relative over (0,1); used both for CI critical values and for inverse-CDF
// normal sampling so every stream is fully specified.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error("invalid-level", "normal_quantile requires p in (0,1)");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return (q < 0.0) ? -value : value;
}

inline double sample_mean(std::span<const double> values) {
    if (values.empty()) throw Error("empty-data", "mean of an empty sample");
    return stable_sum(values) / static_cast<double>(values.size());
}

// Unbiased (N-1) sample variance, two-pass.
inline double sample_variance(std::span<const double> values) {
    if (values.size() < 2) {
        throw Error("insufficient-data", "sample variance requires at least 2 values");
    }
    const double m = sample_mean(values);
    StableSum ss;
    for (double v : values) {
        const double dev = v - m;
        ss.add(dev * dev);
    }
    return ss.value() / static_cast<double>(values.size() - 1);
}

inline double sample_sd(std::span<const double> values) {
    return std::sqrt(sample_variance(values));
}

// Kolmogorov-Smirnov distance between a sample and the standard normal.
inline double ks_distance_normal(std::span<const double> sample) {
    if (sample.empty()) throw Error("empty-data", "KS distance of an empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = normal_cdf(sorted[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - cdf);
        d = std::max(d, cdf - static_cast<double>(i) / n);
    }
    return d;
}

// Quantile with linear interpolation between order statistics (R type 7).
inline double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("empty-data", "quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw Error("invalid-level", "quantile level outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = q * (static_cast<double>(values.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

}  // namespace ivprof
