// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "matforge/camera.hpp"
#include "matforge/envlight.hpp"
#include "matforge/feature_stack.hpp"
#include "matforge/mesh.hpp"
#include "matforge/raster.hpp"
#include "matforge/shading.hpp"
#include "matforge/uvspace.hpp"

namespace matforge {

// Cameras on the +X, -X, +Y, -Y, +Z, -Z axes around the bounding sphere,
// framing it with a 5% margin. Up is +Y except for the +-Y views, which use +Z.
std::vector<Camera> six_view_cameras(const TriMesh& mesh, Projection mode, int resolution);

// Bilinear lookup of an atlas-layout texture at mesh texture coordinates.
Vec3 sample_texture(const ImageF& tex, const Vec2& uv);

// Ground-truth material textures in atlas layout.
struct UvMaterials {
    ImageF albedo;  // 3ch
    ImageF rm;      // 3ch (roughness, metallic, 0)
};

// Rasterizes UV textures into a view through the G-buffer's texture
// coordinates; uncovered pixels are 0.
MaterialMaps view_materials_from_uv(const UvMaterials& tex, const GBuffer& gbuf);

struct ViewInput {
    std::vector<ImageF> observed;  // one image per lighting condition
    const GBuffer* gbuf = nullptr;
    const Camera* camera = nullptr;
};

// Maps a batch of views to per-view material maps in one call. Outputs are
// in [0,1] and match each view's resolution.
class Decomposer {
public:
    virtual ~Decomposer() = default;
    virtual std::vector<MaterialMaps> decompose(std::span<const ViewInput> views) = 0;
    virtual std::string name() const = 0;
    virtual nlohmann::json diagnostics() const { return nlohmann::json::object(); }
};

// Reads the true materials through each view's texture coordinates.
class OracleDecomposer final : public Decomposer {
public:
    explicit OracleDecomposer(UvMaterials truth);
    std::vector<MaterialMaps> decompose(std::span<const ViewInput> views) override;
    std::string name() const override { return "oracle"; }

private:
    UvMaterials truth_;
};

// Returns the same material everywhere a view is covered.
class ConstantDecomposer final : public Decomposer {
public:
    explicit ConstantDecomposer(MaterialSample value) : value_(value) {}
    std::vector<MaterialMaps> decompose(std::span<const ViewInput> views) override;
    std::string name() const override { return "constant"; }

private:
    MaterialSample value_;
};

enum class RecoverLoss { L1, Perceptual, RerenderComposite };
RecoverLoss parse_recover_loss(std::string_view s);
std::string_view to_string(RecoverLoss l);

struct RecoverConfig {
    int max_iterations = 2000;
    double step_size = 0.02;       // initial Adam step, cosine-decayed to 1% of it
    RecoverLoss loss = RecoverLoss::L1;
    int n_lights = 3;              // how many of the supplied environments to use
    double tolerance = 0.0;        // stop after 20 iterations with |delta loss| below this
    MaterialSample init{{0.5, 0.5, 0.5}, 0.2, 0.5};

    void validate() const;
};

struct RecoverStats {
    int iterations = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    // Parameters whose Jacobian column lies in the span of the others at most
    // covered pixels ("albedo", "metallic", "roughness").
    std::vector<std::string> non_identifiable;
};

// Inverse rendering under known lights and geometry: per-pixel Adam on
// (albedo, metallic, roughness) with projection onto [0,1].
RecoverStats recover_materials(MaterialMaps& materials, const GBuffer& gbuf, const Camera& camera,
                               std::span<const PrefilteredEnv* const> lights, std::span<const ImageF> observed,
                               const RecoverConfig& config, const FeatureStack* stack = nullptr);

// Which of albedo/metallic/roughness are locally non-identifiable from the
// given lights at a material sample, by a Jacobian column-span test.
std::vector<std::string> non_identifiable_parameters(const MaterialSample& s, const Vec3& n, const Vec3& to_eye,
                                                     std::span<const PrefilteredEnv* const> lights);

class GradientDecomposer final : public Decomposer {
public:
    GradientDecomposer(std::vector<const PrefilteredEnv*> lights, RecoverConfig config,
                       const FeatureStack* stack = nullptr);
    std::vector<MaterialMaps> decompose(std::span<const ViewInput> views) override;
    std::string name() const override { return "gradient"; }
    nlohmann::json diagnostics() const override;
    const std::vector<RecoverStats>& stats() const noexcept { return stats_; }

private:
    std::vector<const PrefilteredEnv*> lights_;
    RecoverConfig config_;
    const FeatureStack* stack_;
    std::vector<RecoverStats> stats_;
};

// Produces the observed images (one per light) of a view.
using Appearance = std::function<std::vector<ImageF>(const GBuffer&, const Camera&)>;
// Shows the albedo texture unlit.
Appearance textured_appearance(UvMaterials tex);
// Renders the textures under each environment.
Appearance pbr_appearance(UvMaterials tex, std::vector<const PrefilteredEnv*> lights);

enum class RefineMethod { PullPush, External };

struct PipelineConfig {
    int atlas_resolution = 512;
    int view_resolution = 512;
    Projection projection = Projection::Orthographic;
    BlendMode blend = BlendMode::Literal;
    double blend_eps = 1e-4;
    double min_cos = -1.0;  // grazing-angle rejection, off by default
    RefineMethod refine = RefineMethod::PullPush;
    std::string refine_command;
    std::filesystem::path refine_workdir;
};

struct ViewStats {
    double coverage = 0.0;      // covered fraction of the view
    double texels_seen = 0.0;   // fraction of valid texels this view saw
};

struct PipelineReport {
    std::map<std::string, double> stage_seconds;
    double coverage = 0.0;  // fraction of valid texels seen by at least one view
    double missing_fraction = 0.0;
    std::size_t overlap_texels = 0;
    std::size_t skipped_triangles = 0;
    int decompose_calls = 0;
    int refine_calls = 0;
    std::vector<ViewStats> views;
    std::vector<std::string> flags;
    nlohmann::json decomposer;
    nlohmann::json metrics;

    nlohmann::json to_json() const;
};

struct PipelineResult {
    UvMaterials materials;  // refined atlas maps
    UvMaterials blended;    // before refinement
    ImageF seen;            // 1ch {0,1}: texel seen by at least one view
    UvAtlas atlas;
    std::vector<Camera> cameras;
    PipelineReport report;
};

// bake -> render views -> decompose (one batch call) -> backproject -> blend
// -> refine albedo -> refine RM. Failures are rethrown as Error with the
// stage name ("bake", "render", "decompose", "backproject", "blend",
// "refine-albedo", "refine-rm").
PipelineResult decompose_object(const TriMesh& mesh, const Appearance& appearance, Decomposer& decomposer,
                                const PipelineConfig& config);

struct MetricRow {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
};

struct MetricTable {
    std::vector<MetricRow> rows;         // albedo, metallic, roughness, relighting
    std::vector<MetricRow> relighting;   // per environment, averaged over views
    nlohmann::json to_json() const;
};

// Material rows compare the atlas maps directly. Relighting renders both
// material sets through every view under every environment, clamps to [0,1]
// and averages. Throws EmptyInput when no environment is given.
MetricTable evaluate(const UvMaterials& pred, const UvMaterials& truth, std::span<const PrefilteredEnv* const> envs,
                     std::span<const GBuffer> gbufs, std::span<const Camera> cameras);

// Writes the atlas maps, mask, position map and report into `dir` and a
// manifest.json listing every artifact with role and SHA-256. The report's
// digest skips its "stage_seconds" block so identical runs hash identically.
nlohmann::json write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result);

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

// Hex digest of a report with timing fields removed.
std::string report_digest(const nlohmann::json& report);

// Writes `manifest` entries {path, role, sha256, bytes} for files in `dir`.
nlohmann::json build_manifest(const std::filesystem::path& dir,
                              const std::vector<std::pair<std::string, std::string>>& files_and_roles);

}  // namespace matforge
