// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "matforge/pipeline.hpp"

namespace matforge {

// Built-in mesh name ("quad", "sphere", "torus") or an OBJ path.
TriMesh mesh_from_spec(const std::string& name_or_path);

// Reads PrefilterSettings fields present in `j`; others keep defaults.
PrefilterSettings prefilter_settings_from_json(const nlohmann::json& j);
RecoverConfig recover_config_from_json(const nlohmann::json& j);

// Material textures from {"albedo": path, "rm": path}; missing maps are
// procedural at `resolution` from `seed`.
UvMaterials materials_from_json(const nlohmann::json& j, std::uint64_t seed, int resolution);
// A list of PFM paths, a single path, or {"procedural": count, "height": h}.
std::vector<EnvMap> envs_from_json(const nlohmann::json& j, std::uint64_t seed);
std::vector<PrefilteredEnv> prefilter_all(const std::vector<EnvMap>& envs, const PrefilterSettings& settings);
// A camera file path, or an inline {"cameras": [...]} document.
std::vector<Camera> cameras_from_json(const nlohmann::json& j);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

// Full decomposition job as driven by `matforge decompose`. Recognized keys:
//   mesh, atlas_resolution, view_resolution, projection, blend, blend_eps,
//   refine, refine_command, materials {albedo, rm} (image paths; procedural
//   when absent), envs (list of PFM paths, or {"procedural": count,
//   "height": h}), prefilter {...}, decomposer (oracle|gradient|constant),
//   recover {...}, appearance (pbr|textured), evaluate (bool).
// Procedural inputs are derived from `seed`. Returns the written manifest.
nlohmann::json run_decompose_job(const nlohmann::json& config, const std::filesystem::path& out_dir,
                                 std::uint64_t seed);

}  // namespace matforge
