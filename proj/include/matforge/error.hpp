// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matforge {

enum class ErrorCode {
    InvalidArgument,
    Io,
    Parse,
    MissingUVs,
    UnsupportedFormat,
    DimensionOverflow,
    NonFinite,
    ShapeMismatch,
    DegenerateFit,
    IllPosed,
    EmptyInput,
    ExternalTool,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type. `stage` is filled in by
// the pipeline when an error crosses a stage boundary.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    Error(ErrorCode code, std::string stage, const std::string& message)
        : std::runtime_error("[" + stage + "] " + message), code_(code), stage_(std::move(stage)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    ErrorCode code_;
    std::string stage_;
};

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) throw Error(code, message);
}

}  // namespace matforge
