#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace ivprof {

// Neumaier-compensated accumulator. Tracks the rounding error of each
// addition and folds it back in when the total is read, so sums of
// moderately sized inputs are correct to the last ulp regardless of N.
class StableSum {
public:
    StableSum() = default;
    explicit StableSum(double init) : sum_(init) {}

    void add(double value) {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value)) {
            comp_ += (sum_ - t) + value;
        } else {
            comp_ += (value - t) + sum_;
        }
        sum_ = t;
    }

    StableSum& operator+=(double value) {
        add(value);
        return *this;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double stable_sum(std::span<const double> values) {
    StableSum s;
    for (double v : values) s.add(v);
    return s.value();
}

}  // namespace ivprof
