#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ivprof/dataset.hpp"

namespace ivprof {

struct IngestOptions {
    std::string instrument = "z";
    std::string treatment = "d";
    std::vector<std::string> covariates;  // empty = all remaining numeric columns
    std::string match_id;                 // accepted and ignored by estimation
};

struct IngestResult {
    Dataset data;                           // missing covariate cells stored as NaN
    std::vector<std::int64_t> missing_per_covariate;
    std::vector<std::string> skipped_columns;  // non-numeric columns left out of auto-selection
    Warnings notes;
};

// Parses a header-row CSV into a Dataset. Instrument/treatment cells must be
// exactly 0 or 1 (hard error naming the data row and column otherwise);
// covariate cells that do not parse as numbers become missing values and are
// counted. Quoted fields and CRLF endings are handled; ragged rows are hard
// errors.
IngestResult ingest_csv(const std::string& path, const IngestOptions& options);
IngestResult ingest_csv_stream(std::istream& in, const IngestOptions& options,
                               const std::string& display_name = "<stream>");

}  // namespace ivprof
