#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ivprof/error.hpp"

namespace ivprof {

// One unit: binary instrument, binary treatment, K profiling covariates.
// Binary covariates are plain 0/1 doubles so their means are proportions.
struct Observation {
    int z = 0;
    int d = 0;
    std::vector<double> x;
};

// Column-oriented study data. Covariate cells may be NaN, the missing-value
// marker: estimators drop such rows per covariate (complete-case per column)
// and report the count. Infinities are invalid everywhere.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::uint8_t> z, std::vector<std::uint8_t> d,
            std::vector<std::vector<double>> covariates,
            std::vector<std::string> covariate_names);

    static Dataset from_observations(const std::vector<Observation>& rows,
                                     std::vector<std::string> covariate_names = {});

    std::int64_t n() const { return static_cast<std::int64_t>(z_.size()); }
    int num_covariates() const { return static_cast<int>(covariates_.size()); }

    std::span<const std::uint8_t> z() const { return z_; }
    std::span<const std::uint8_t> d() const { return d_; }
    std::span<const double> covariate(int index) const;
    const std::string& covariate_name(int index) const;
    const std::vector<std::string>& covariate_names() const { return names_; }

    // Throws Error("invalid-data", ...) on shape mismatches, non-binary z/d,
    // infinite covariate cells, or an empty dataset.
    void validate() const;

private:
    std::vector<std::uint8_t> z_;
    std::vector<std::uint8_t> d_;
    std::vector<std::vector<double>> covariates_;
    std::vector<std::string> names_;
};

}  // namespace ivprof
