// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/error.hpp"

namespace matforge {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::Io: return "io";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::MissingUVs: return "missing_uvs";
        case ErrorCode::UnsupportedFormat: return "unsupported_format";
        case ErrorCode::DimensionOverflow: return "dimension_overflow";
        case ErrorCode::NonFinite: return "non_finite";
        case ErrorCode::ShapeMismatch: return "shape_mismatch";
        case ErrorCode::DegenerateFit: return "degenerate_fit";
        case ErrorCode::IllPosed: return "ill_posed";
        case ErrorCode::EmptyInput: return "empty_input";
        case ErrorCode::ExternalTool: return "external_tool";
    }
    return "unknown";
}

}  // namespace matforge
