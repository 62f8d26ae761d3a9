// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/job.hpp"

#include <memory>

#include "matforge/error.hpp"
#include "matforge/image_io.hpp"
#include "matforge/synthetic.hpp"

namespace matforge {

TriMesh mesh_from_spec(const std::string& name_or_path) {
    if (name_or_path == "quad") return make_quad(2.0);
    if (name_or_path == "sphere") return make_uv_sphere(64, 32, 1.0);
    if (name_or_path == "torus") return make_torus(64, 32, 1.0, 0.4);
    return load_mesh(name_or_path);
}

PrefilterSettings prefilter_settings_from_json(const nlohmann::json& j) {
    PrefilterSettings s;
    if (!j.is_object()) return s;
    s.irradiance_height = j.value("irradiance_height", s.irradiance_height);
    s.n_mips = j.value("n_mips", s.n_mips);
    s.specular_base_height = j.value("specular_base_height", s.specular_base_height);
    s.specular_min_height = j.value("specular_min_height", s.specular_min_height);
    s.samples_per_texel = j.value("samples_per_texel", s.samples_per_texel);
    s.lut_size = j.value("lut_size", s.lut_size);
    s.lut_samples = j.value("lut_samples", s.lut_samples);
    return s;
}

RecoverConfig recover_config_from_json(const nlohmann::json& j) {
    RecoverConfig c;
    if (!j.is_object()) return c;
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.step_size = j.value("step_size", c.step_size);
    c.n_lights = j.value("n_lights", c.n_lights);
    c.tolerance = j.value("tolerance", c.tolerance);
    if (j.contains("loss")) c.loss = parse_recover_loss(j["loss"].get<std::string>());
    c.validate();
    return c;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.atlas_resolution = j.value("atlas_resolution", c.atlas_resolution);
    c.view_resolution = j.value("view_resolution", c.view_resolution);
    const std::string proj = j.value("projection", std::string("ortho"));
    if (proj == "ortho")
        c.projection = Projection::Orthographic;
    else if (proj == "persp")
        c.projection = Projection::Perspective;
    else
        throw Error(ErrorCode::InvalidArgument, "projection must be ortho or persp");
    const std::string blend = j.value("blend", std::string("literal"));
    if (blend == "literal")
        c.blend = BlendMode::Literal;
    else if (blend == "debiased")
        c.blend = BlendMode::Debiased;
    else
        throw Error(ErrorCode::InvalidArgument, "blend must be literal or debiased");
    c.blend_eps = j.value("blend_eps", c.blend_eps);
    c.min_cos = j.value("min_cos", c.min_cos);
    const std::string refine = j.value("refine", std::string("pullpush"));
    if (refine == "pullpush")
        c.refine = RefineMethod::PullPush;
    else if (refine == "external")
        c.refine = RefineMethod::External;
    else
        throw Error(ErrorCode::InvalidArgument, "refine must be pullpush or external");
    c.refine_command = j.value("refine_command", std::string());
    c.refine_workdir = j.value("refine_workdir", std::string());
    return c;
}

namespace {

ImageF load_rgb(const std::string& path) {
    ImageF img = read_image(path);
    require(img.channels() >= 3, ErrorCode::InvalidArgument, path + ": expected an RGB image");
    return img.channels() == 3 ? img : extract_channels(img, 0, 3);
}

}  // namespace

UvMaterials materials_from_json(const nlohmann::json& j, std::uint64_t seed, int resolution) {
    UvMaterials m = procedural_materials(seed, resolution);
    if (j.is_object()) {
        if (j.contains("albedo")) m.albedo = load_rgb(j["albedo"].get<std::string>());
        if (j.contains("rm")) m.rm = load_rgb(j["rm"].get<std::string>());
    }
    return m;
}

std::vector<EnvMap> envs_from_json(const nlohmann::json& j, std::uint64_t seed) {
    std::vector<EnvMap> envs;
    if (j.is_string()) {
        envs.push_back(load_env(j.get<std::string>()));
    } else if (j.is_array()) {
        for (const auto& p : j) envs.push_back(load_env(p.get<std::string>()));
    } else if (j.is_object()) {
        const int count = j.value("procedural", 3);
        const int height = j.value("height", 64);
        for (int i = 0; i < count; ++i) envs.push_back(ProceduralEnv::from_seed(seed * 7919 + i).bake(height));
    } else {
        throw Error(ErrorCode::InvalidArgument, "envs must be a path, a list of paths or {\"procedural\": n}");
    }
    require(!envs.empty(), ErrorCode::EmptyInput, "at least one environment is required");
    return envs;
}

std::vector<PrefilteredEnv> prefilter_all(const std::vector<EnvMap>& envs, const PrefilterSettings& settings) {
    const ImageF lut = integrate_brdf_lut(settings.lut_size, settings.lut_samples);
    std::vector<PrefilteredEnv> pres;
    for (const EnvMap& e : envs) pres.push_back(prefilter(e, settings, lut));
    return pres;
}

std::vector<Camera> cameras_from_json(const nlohmann::json& j) {
    if (j.is_string()) return load_cameras(j.get<std::string>());
    return parse_cameras(j.dump());
}

nlohmann::json run_decompose_job(const nlohmann::json& config, const std::filesystem::path& out_dir,
                                 std::uint64_t seed) {
    const TriMesh mesh = mesh_from_spec(config.value("mesh", std::string("sphere")));
    const PipelineConfig pc = pipeline_config_from_json(config);

    const UvMaterials truth =
        materials_from_json(config.value("materials", nlohmann::json::object()), seed, pc.atlas_resolution);
    const std::vector<EnvMap> envs = envs_from_json(config.value("envs", nlohmann::json{{"procedural", 3}}), seed);
    const PrefilterSettings ps = prefilter_settings_from_json(config.value("prefilter", nlohmann::json::object()));
    const std::vector<PrefilteredEnv> pres = prefilter_all(envs, ps);
    std::vector<const PrefilteredEnv*> lights;
    for (const PrefilteredEnv& p : pres) lights.push_back(&p);

    const std::string appearance_kind = config.value("appearance", std::string("pbr"));
    Appearance appearance;
    if (appearance_kind == "pbr")
        appearance = pbr_appearance(truth, lights);
    else if (appearance_kind == "textured")
        appearance = textured_appearance(truth);
    else
        throw Error(ErrorCode::InvalidArgument, "appearance must be pbr or textured");

    const std::string kind = config.value("decomposer", std::string("oracle"));
    std::unique_ptr<Decomposer> decomposer;
    const FeatureStack stack = FeatureStack::random(seed);
    if (kind == "oracle") {
        decomposer = std::make_unique<OracleDecomposer>(truth);
    } else if (kind == "gradient") {
        require(appearance_kind == "pbr", ErrorCode::InvalidArgument, "gradient decomposer needs pbr appearance");
        decomposer = std::make_unique<GradientDecomposer>(
            lights, recover_config_from_json(config.value("recover", nlohmann::json::object())), &stack);
    } else if (kind == "constant") {
        decomposer = std::make_unique<ConstantDecomposer>(MaterialSample{{0.5, 0.5, 0.5}, 0.5, 0.5});
    } else {
        throw Error(ErrorCode::InvalidArgument, "decomposer must be oracle, gradient or constant");
    }

    PipelineResult result = decompose_object(mesh, appearance, *decomposer, pc);

    if (config.value("evaluate", true)) {
        std::vector<GBuffer> gbufs;
        for (const Camera& cam : result.cameras) gbufs.push_back(rasterize_gbuffer(mesh, cam));
        UvMaterials gt = truth;
        if (gt.albedo.width() != pc.atlas_resolution || gt.rm.width() != pc.atlas_resolution) {
            result.report.flags.push_back("metrics-skipped-resolution-mismatch");
        } else {
            result.report.metrics = evaluate(result.materials, gt, lights, gbufs, result.cameras).to_json();
        }
    }
    return write_pipeline_outputs(out_dir, result);
}

}  // namespace matforge
