#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ivprof {

// Exception carrying a stable machine-readable code alongside the human
// message. Codes are part of the CLI contract (they surface in report
// metadata and drive exit statuses).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Non-fatal diagnostics attached to results instead of thrown.
struct Warning {
    std::string code;
    std::string message;

    bool operator==(const Warning&) const = default;
};

using Warnings = std::vector<Warning>;

}  // namespace ivprof
