#include "ivprof/dataset.hpp"

#include <cmath>
#include <utility>

namespace ivprof {

Dataset::Dataset(std::vector<std::uint8_t> z, std::vector<std::uint8_t> d,
                 std::vector<std::vector<double>> covariates,
                 std::vector<std::string> covariate_names)
    : z_(std::move(z)), d_(std::move(d)), covariates_(std::move(covariates)),
      names_(std::move(covariate_names)) {
    if (names_.empty()) {
        names_.reserve(covariates_.size());
        for (std::size_t j = 0; j < covariates_.size(); ++j) {
            names_.push_back("x" + std::to_string(j + 1));
        }
    }
    validate();
}

Dataset Dataset::from_observations(const std::vector<Observation>& rows,
                                   std::vector<std::string> covariate_names) {
    std::vector<std::uint8_t> z, d;
    z.reserve(rows.size());
    d.reserve(rows.size());
    const std::size_t k = rows.empty() ? 0 : rows.front().x.size();
    std::vector<std::vector<double>> cols(k);
    for (auto& col : cols) col.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.x.size() != k) {
            throw Error("invalid-data", "observations disagree on covariate dimension");
        }
        z.push_back(static_cast<std::uint8_t>(row.z));
        d.push_back(static_cast<std::uint8_t>(row.d));
        for (std::size_t j = 0; j < k; ++j) cols[j].push_back(row.x[j]);
    }
    return Dataset(std::move(z), std::move(d), std::move(cols), std::move(covariate_names));
}

std::span<const double> Dataset::covariate(int index) const {
    if (index < 0 || index >= num_covariates()) {
        throw Error("invalid-data", "covariate index " + std::to_string(index) + " out of range");
    }
    return covariates_[static_cast<std::size_t>(index)];
}

const std::string& Dataset::covariate_name(int index) const {
    if (index < 0 || index >= num_covariates()) {
        throw Error("invalid-data", "covariate index " + std::to_string(index) + " out of range");
    }
    return names_[static_cast<std::size_t>(index)];
}

void Dataset::validate() const {
    if (z_.empty()) throw Error("empty-data", "dataset has no observations");
    if (d_.size() != z_.size()) {
        throw Error("invalid-data", "instrument and treatment columns differ in length");
    }
    if (names_.size() != covariates_.size()) {
        throw Error("invalid-data", "covariate name count does not match column count");
    }
    for (std::size_t i = 0; i < z_.size(); ++i) {
        if (z_[i] > 1) throw Error("invalid-data", "instrument value outside {0,1} at row " + std::to_string(i + 1));
        if (d_[i] > 1) throw Error("invalid-data", "treatment value outside {0,1} at row " + std::to_string(i + 1));
    }
    for (std::size_t j = 0; j < covariates_.size(); ++j) {
        if (covariates_[j].size() != z_.size()) {
            throw Error("invalid-data", "covariate '" + names_[j] + "' has wrong length");
        }
        for (double v : covariates_[j]) {
            if (std::isinf(v)) {
                throw Error("invalid-data", "covariate '" + names_[j] + "' contains an infinite value");
            }
        }
    }
}

}  // namespace ivprof
