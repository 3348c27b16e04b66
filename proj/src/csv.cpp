#include "ivprof/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

namespace ivprof {

namespace {

// One CSV record; supports quoted fields ("" escapes a quote) and CRLF.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !std::isnan(out);
}

int parse_binary(const std::string& cell, const std::string& column, std::int64_t row) {
    double v = 0.0;
    if (!parse_double(cell, v) || (v != 0.0 && v != 1.0)) {
        std::ostringstream msg;
        msg << "invalid value '" << trim(cell) << "' at row " << row << ", column '"
            << column << "' (expected 0 or 1)";
        throw Error("invalid-binary-column", msg.str());
    }
    return static_cast<int>(v);
}

}  // namespace

IngestResult ingest_csv_stream(std::istream& in, const IngestOptions& options,
                               const std::string& display_name) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("empty-file", display_name + ": file is empty");
    }
    std::vector<std::string> header = split_record(line);
    for (auto& h : header) h = trim(h);

    auto column_of = [&](const std::string& name) -> int {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };

    if (options.instrument == options.treatment) {
        throw Error("invalid-config", "instrument and treatment columns must be distinct");
    }
    const int z_col = column_of(options.instrument);
    if (z_col < 0) {
        throw Error("missing-column",
                    display_name + ": instrument column '" + options.instrument +
                        "' not found in header (is the header row present?)");
    }
    const int d_col = column_of(options.treatment);
    if (d_col < 0) {
        throw Error("missing-column",
                    display_name + ": treatment column '" + options.treatment + "' not found in header");
    }
    int match_col = -1;
    IngestResult result;
    if (!options.match_id.empty()) {
        match_col = column_of(options.match_id);
        if (match_col < 0) {
            throw Error("missing-column",
                        display_name + ": match-id column '" + options.match_id + "' not found in header");
        }
        result.notes.push_back({"match-id-ignored",
                                "column '" + options.match_id + "' is accepted but ignored by estimation"});
    }

    std::vector<std::vector<std::string>> records;
    std::int64_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;  // trailing newline
        auto fields = split_record(line);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << display_name << ": row " << row << " has " << fields.size()
                << " fields, expected " << header.size();
            throw Error("bad-csv", msg.str());
        }
        records.push_back(std::move(fields));
    }
    if (records.empty()) {
        throw Error("empty-data", display_name + ": no data rows after the header");
    }

    // Resolve covariate columns: an explicit list, or every non-reserved
    // column holding at least one numeric cell.
    std::vector<int> cov_cols;
    std::vector<std::string> cov_names;
    if (!options.covariates.empty()) {
        for (const auto& name : options.covariates) {
            const int col = column_of(name);
            if (col < 0) {
                throw Error("missing-column", display_name + ": covariate column '" + name + "' not found");
            }
            if (col == z_col || col == d_col) {
                throw Error("invalid-config", "column '" + name + "' is already the instrument or treatment");
            }
            cov_cols.push_back(col);
            cov_names.push_back(name);
        }
    } else {
        for (int col = 0; col < static_cast<int>(header.size()); ++col) {
            if (col == z_col || col == d_col || col == match_col) continue;
            const bool numeric = std::any_of(records.begin(), records.end(), [&](const auto& rec) {
                double v;
                return parse_double(rec[static_cast<std::size_t>(col)], v);
            });
            if (numeric) {
                cov_cols.push_back(col);
                cov_names.push_back(header[static_cast<std::size_t>(col)]);
            } else {
                result.skipped_columns.push_back(header[static_cast<std::size_t>(col)]);
            }
        }
    }

    const auto n = static_cast<std::size_t>(records.size());
    std::vector<std::uint8_t> z(n), d(n);
    std::vector<std::vector<double>> columns(cov_cols.size(), std::vector<double>(n));
    result.missing_per_covariate.assign(cov_cols.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = records[i];
        const auto data_row = static_cast<std::int64_t>(i) + 1;
        z[i] = static_cast<std::uint8_t>(
            parse_binary(rec[static_cast<std::size_t>(z_col)], options.instrument, data_row));
        d[i] = static_cast<std::uint8_t>(
            parse_binary(rec[static_cast<std::size_t>(d_col)], options.treatment, data_row));
        for (std::size_t j = 0; j < cov_cols.size(); ++j) {
            double v;
            if (parse_double(rec[static_cast<std::size_t>(cov_cols[j])], v)) {
                if (std::isinf(v)) {
                    std::ostringstream msg;
                    msg << display_name << ": infinite value at row " << data_row << ", column '"
                        << cov_names[j] << "'";
                    throw Error("invalid-data", msg.str());
                }
                columns[j][i] = v;
            } else {
                columns[j][i] = std::numeric_limits<double>::quiet_NaN();
                ++result.missing_per_covariate[j];
            }
        }
    }
    result.data = Dataset(std::move(z), std::move(d), std::move(columns), std::move(cov_names));
    return result;
}

IngestResult ingest_csv(const std::string& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw Error("io-error", "cannot open input file '" + path + "'");
    }
    return ingest_csv_stream(in, options, path);
}

}  // namespace ivprof
