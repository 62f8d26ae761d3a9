// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "matforge/camera.hpp"
#include "matforge/image.hpp"
#include "matforge/mesh.hpp"
#include "matforge/raster.hpp"
#include "matforge/shading.hpp"

namespace matforge {

// Texel (x, y) of an R x R atlas is centered at uv = ((x + 0.5) / R, 1 - (y + 0.5) / R),
// so atlas row 0 holds v near 1 like an image file of the texture.
struct UvAtlas {
    int resolution = 0;
    ImageF position;  // 3ch world position
    ImageF normal;    // 3ch unit surface normal
    ImageF valid;     // 1ch {0,1}
    std::size_t overlap_texels = 0;

    bool is_valid(int x, int y) const { return valid.at(x, y) > 0.5f; }
    double valid_fraction() const;
};

// Rasterizes every triangle in UV space. Texels claimed by more than one
// triangle keep the last writer and are counted in overlap_texels.
// Throws MissingUVs when the mesh has no texture coordinates.
UvAtlas bake_uv_geometry(const TriMesh& mesh, int resolution);

// One view's contribution: materials at seen texels (0 elsewhere) and the
// binary seen count.
struct ViewPartial {
    MaterialMaps materials;
    ImageF count;  // 1ch {0,1}
};

struct BackprojectOptions {
    double depth_bias = 1e-3;  // world units
    double min_cos = -1.0;     // reject texels with n . to_eye below this; <= -1 disables
};

// Projects every valid texel into the view and keeps it when its depth is
// within depth_bias of the G-buffer depth there. The reference depth is the
// bilinear depth when all four neighbouring pixels are covered and the
// nearest covered depth otherwise. Materials are read bilinearly from
// covered pixels only.
ViewPartial backproject_view(const UvAtlas& atlas, const GBuffer& gbuf, const Camera& camera,
                             const MaterialMaps& view_materials, const BackprojectOptions& options = {});

enum class BlendMode {
    Literal,   // sum / (count + eps)
    Debiased,  // sum / max(count, 1)
};

struct BlendResult {
    MaterialMaps materials;
    ImageF count;  // 1ch view counts
};

// Sums partials in list order. Throws EmptyInput for an empty list and
// ShapeMismatch when resolutions differ.
BlendResult blend_views(std::span<const ViewPartial> partials, BlendMode mode = BlendMode::Literal,
                        double eps = 1e-4);

struct RefineRequest {
    ImageF material;  // partial map, any channel count
    ImageF mask;      // 1ch {0,1}
    ImageF position;  // 3ch
};

// Pull-push fill: masked texels are kept exactly and holes are filled from a
// weighted mip pyramid. Throws EmptyInput when the mask is empty.
ImageF refine_pullpush(const RefineRequest& req);

// Writes <stem>.material.pfm, <stem>.mask.png and <stem>.position.pfm into
// `workdir`, runs `command <workdir>/<stem>` and reads <stem>.refined.pfm.
// Throws ExternalTool on a non-zero exit or a missing/mis-shaped result.
ImageF refine_external(const RefineRequest& req, const std::string& command, const std::filesystem::path& workdir,
                       const std::string& stem);

void write_refine_request(const RefineRequest& req, const std::filesystem::path& stem_path);
RefineRequest read_refine_request(const std::filesystem::path& stem_path);

}  // namespace matforge
