// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "matforge/error.hpp"

namespace matforge {

nlohmann::json PipelineReport::to_json() const {
    nlohmann::json views_json = nlohmann::json::array();
    for (const ViewStats& v : views) views_json.push_back({{"coverage", v.coverage}, {"texels_seen", v.texels_seen}});
    return {{"stage_seconds", stage_seconds},
            {"coverage", coverage},
            {"missing_fraction", missing_fraction},
            {"overlap_texels", overlap_texels},
            {"skipped_triangles", skipped_triangles},
            {"decompose_calls", decompose_calls},
            {"refine_calls", refine_calls},
            {"views", views_json},
            {"flags", flags},
            {"decomposer", decomposer},
            {"metrics", metrics}};
}

namespace {

class StageTimer {
public:
    StageTimer(PipelineReport& report, std::string name)
        : report_(report), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        const auto end = std::chrono::steady_clock::now();
        report_.stage_seconds[name_] += std::chrono::duration<double>(end - start_).count();
    }

private:
    PipelineReport& report_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

template <typename F>
auto run_stage(PipelineReport& report, const std::string& stage, F&& fn) {
    StageTimer timer(report, stage);
    try {
        return fn();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.code(), stage, e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::InvalidArgument, stage, e.what());
    }
}

void check_decomposition(const std::vector<MaterialMaps>& maps, const std::vector<GBuffer>& gbufs) {
    require(maps.size() == gbufs.size(), ErrorCode::ShapeMismatch, "decomposer returned the wrong number of views");
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const MaterialMaps& m = maps[i];
        require(m.width() == gbufs[i].width() && m.height() == gbufs[i].height() && m.albedo.channels() == 3 &&
                    m.rm.channels() == 3 && m.rm.width() == m.width() && m.rm.height() == m.height(),
                ErrorCode::ShapeMismatch, "decomposer output does not match view " + std::to_string(i));
        for (const ImageF* img : {&m.albedo, &m.rm})
            for (float v : img->data())
                require(std::isfinite(v) && v >= -1e-6f && v <= 1.0f + 1e-6f, ErrorCode::InvalidArgument,
                        "decomposer output outside [0,1] in view " + std::to_string(i));
    }
}

ImageF refine_map(const PipelineConfig& config, const RefineRequest& req, const std::string& stem) {
    if (config.refine == RefineMethod::External) {
        const auto workdir =
            config.refine_workdir.empty() ? std::filesystem::temp_directory_path() / "matforge-refine" : config.refine_workdir;
        return refine_external(req, config.refine_command, workdir, stem);
    }
    return refine_pullpush(req);
}

}  // namespace

PipelineResult decompose_object(const TriMesh& mesh, const Appearance& appearance, Decomposer& decomposer,
                                const PipelineConfig& config) {
    PipelineResult result;
    PipelineReport& report = result.report;

    result.atlas = run_stage(report, "bake", [&] { return bake_uv_geometry(mesh, config.atlas_resolution); });
    report.overlap_texels = result.atlas.overlap_texels;
    const double radius = bounding_sphere(mesh).radius;

    std::vector<GBuffer> gbufs;
    std::vector<ViewInput> inputs;
    run_stage(report, "render", [&] {
        result.cameras = six_view_cameras(mesh, config.projection, config.view_resolution);
        for (const Camera& cam : result.cameras) {
            RasterStats stats;
            gbufs.push_back(rasterize_gbuffer(mesh, cam, &stats));
            report.skipped_triangles += stats.behind_camera;
        }
        inputs.resize(gbufs.size());
        for (std::size_t i = 0; i < gbufs.size(); ++i) {
            inputs[i].gbuf = &gbufs[i];
            inputs[i].camera = &result.cameras[i];
            inputs[i].observed = appearance ? appearance(gbufs[i], result.cameras[i]) : std::vector<ImageF>{};
        }
        return 0;
    });

    const std::vector<MaterialMaps> decomposed = run_stage(report, "decompose", [&] {
        ++report.decompose_calls;
        auto maps = decomposer.decompose(inputs);
        check_decomposition(maps, gbufs);
        return maps;
    });
    report.decomposer = {{"name", decomposer.name()}, {"diagnostics", decomposer.diagnostics()}};

    std::vector<ViewPartial> partials = run_stage(report, "backproject", [&] {
        std::vector<ViewPartial> out;
        BackprojectOptions opt;
        opt.depth_bias = 1e-3 * radius;
        opt.min_cos = config.min_cos;
        for (std::size_t i = 0; i < gbufs.size(); ++i)
            out.push_back(backproject_view(result.atlas, gbufs[i], result.cameras[i], decomposed[i], opt));
        return out;
    });

    const BlendResult blended =
        run_stage(report, "blend", [&] { return blend_views(partials, config.blend, config.blend_eps); });
    result.blended = {blended.materials.albedo, blended.materials.rm};

    const int R = config.atlas_resolution;
    result.seen = ImageF(R, R, 1);
    std::size_t valid = 0, seen = 0;
    for (int y = 0; y < R; ++y)
        for (int x = 0; x < R; ++x) {
            const bool s = blended.count.at(x, y) > 0.5f;
            result.seen.at(x, y) = s ? 1.0f : 0.0f;
            if (!result.atlas.is_valid(x, y)) continue;
            ++valid;
            seen += s;
        }
    report.coverage = valid > 0 ? static_cast<double>(seen) / valid : 0.0;
    report.missing_fraction = 1.0 - report.coverage;
    for (const ViewPartial& p : partials) {
        std::size_t n = 0;
        for (float v : p.count.data()) n += v > 0.5f;
        report.views.push_back({0.0, valid > 0 ? static_cast<double>(n) / valid : 0.0});
    }
    for (std::size_t i = 0; i < gbufs.size(); ++i) report.views[i].coverage = gbufs[i].coverage();
    if (report.missing_fraction > 0.5) report.flags.push_back("missing-area-over-50pct");
    if (report.overlap_texels > 0) report.flags.push_back("uv-overlap");
    if (report.skipped_triangles > 0) report.flags.push_back("triangles-behind-camera");

    result.materials.albedo = run_stage(report, "refine-albedo", [&] {
        if (seen == 0) throw Error(ErrorCode::EmptyInput, "no texel was seen by any view");
        ++report.refine_calls;
        return refine_map(config, {blended.materials.albedo, result.seen, result.atlas.position}, "albedo");
    });
    result.materials.rm = run_stage(report, "refine-rm", [&] {
        ++report.refine_calls;
        return refine_map(config, {blended.materials.rm, result.seen, result.atlas.position}, "rm");
    });
    return result;
}

}  // namespace matforge
