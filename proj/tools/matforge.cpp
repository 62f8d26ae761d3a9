// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "matforge/error.hpp"
#include "matforge/image_io.hpp"
#include "matforge/job.hpp"
#include "matforge/losses.hpp"
#include "matforge/parallel.hpp"
#include "matforge/scheduler.hpp"
#include "matforge/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace matforge {
namespace {

struct Common {
    std::string config_path;
    std::string out = ".";
    unsigned threads = 0;
    std::uint64_t seed = 0;

    json config() const {
        if (config_path.empty()) return json::object();
        std::ifstream in(config_path);
        if (!in) throw Error(ErrorCode::Io, "cannot open config " + config_path);
        try {
            return json::parse(in);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, config_path + ": " + e.what());
        }
    }
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

// Cameras from the config, or one of the six axis views.
std::vector<Camera> pick_cameras(const json& cfg, const TriMesh& mesh) {
    if (cfg.contains("cameras")) return cameras_from_json(cfg["cameras"]);
    const PipelineConfig pc = pipeline_config_from_json(cfg);
    return six_view_cameras(mesh, pc.projection, pc.view_resolution);
}

const Camera& select_view(const std::vector<Camera>& cams, const json& cfg) {
    const int view = cfg.value("view", 4);
    require(view >= 0 && view < static_cast<int>(cams.size()), ErrorCode::InvalidArgument,
            "view index out of range");
    return cams[view];
}

std::vector<PrefilteredEnv> lights_for(const json& cfg, std::uint64_t seed) {
    if (cfg.contains("prefiltered")) {
        std::vector<PrefilteredEnv> out;
        const json& p = cfg["prefiltered"];
        if (p.is_string()) {
            out.push_back(load_prefiltered(p.get<std::string>()));
        } else {
            for (const auto& d : p) out.push_back(load_prefiltered(d.get<std::string>()));
        }
        return out;
    }
    const json spec = cfg.contains("envs") ? cfg["envs"] : cfg.value("env", json{{"procedural", 1}});
    return prefilter_all(envs_from_json(spec, seed), prefilter_settings_from_json(cfg.value("prefilter", json::object())));
}

int cmd_render(const Common& c) {
    const json cfg = c.config();
    const TriMesh mesh = mesh_from_spec(cfg.value("mesh", std::string("sphere")));
    const auto cams = pick_cameras(cfg, mesh);
    const Camera& cam = select_view(cams, cfg);
    const UvMaterials tex = materials_from_json(cfg.value("materials", json::object()), c.seed,
                                               cfg.value("atlas_resolution", 512));
    const auto lights = lights_for(cfg, c.seed);
    const GBuffer g = rasterize_gbuffer(mesh, cam);
    const MaterialMaps mats = view_materials_from_uv(tex, g);
    fs::create_directories(c.out);
    std::vector<std::pair<std::string, std::string>> files;
    for (std::size_t i = 0; i < lights.size(); ++i) {
        const ImageF img = render_view(g, mats, lights[i], cam);
        const std::string stem = lights.size() == 1 ? "render" : "render_" + std::to_string(i);
        write_pfm(fs::path(c.out) / (stem + ".pfm"), img);
        write_png(fs::path(c.out) / (stem + ".png"), reinhard(img));
        files.push_back({stem + ".pfm", "render"});
        files.push_back({stem + ".png", "render"});
    }
    write_png(fs::path(c.out) / "mask.png", g.mask, 8, true);
    files.push_back({"mask.png", "mask"});
    write_json(fs::path(c.out) / "manifest.json", build_manifest(c.out, files));
    return 0;
}

int cmd_prefilter(const Common& c) {
    const json cfg = c.config();
    const auto pres = prefilter_all(envs_from_json(cfg.value("envs", json{{"procedural", 1}}), c.seed),
                                    prefilter_settings_from_json(cfg.value("prefilter", json::object())));
    for (std::size_t i = 0; i < pres.size(); ++i) {
        const fs::path dir = pres.size() == 1 ? fs::path(c.out) : fs::path(c.out) / ("env_" + std::to_string(i));
        save_prefiltered(dir, pres[i]);
        std::cout << dir.string() << "\n";
    }
    return 0;
}

int cmd_decompose(const Common& c) {
    const json manifest = run_decompose_job(c.config(), c.out, c.seed);
    std::cout << manifest.dump(2) << "\n";
    return 0;
}

int cmd_recover(const Common& c) {
    const json cfg = c.config();
    const TriMesh mesh = mesh_from_spec(cfg.value("mesh", std::string("sphere")));
    const auto cams = pick_cameras(cfg, mesh);
    const Camera& cam = select_view(cams, cfg);
    const auto pres = lights_for(cfg, c.seed);
    std::vector<const PrefilteredEnv*> lights;
    for (const auto& p : pres) lights.push_back(&p);
    const GBuffer g = rasterize_gbuffer(mesh, cam);

    // Observations come from files, or are rendered from the (possibly procedural) textures.
    std::vector<ImageF> observed;
    std::optional<MaterialMaps> truth;
    if (cfg.contains("observed")) {
        for (const auto& p : cfg["observed"]) observed.push_back(read_image(p.get<std::string>()));
    } else {
        const UvMaterials tex = materials_from_json(cfg.value("materials", json::object()), c.seed,
                                                   cfg.value("atlas_resolution", 256));
        truth = view_materials_from_uv(tex, g);
        for (const auto* l : lights) observed.push_back(render_view(g, *truth, *l, cam));
    }

    RecoverConfig rc = recover_config_from_json(cfg.value("recover", json::object()));
    rc.n_lights = std::min<int>(rc.n_lights, static_cast<int>(lights.size()));
    MaterialMaps mats = MaterialMaps::filled(g.width(), g.height(), rc.init);
    const FeatureStack stack = FeatureStack::random(c.seed);
    const RecoverStats st = recover_materials(mats, g, cam, lights, observed, rc, &stack);

    json report = {{"iterations", st.iterations},
                   {"initial_loss", st.initial_loss},
                   {"final_loss", st.final_loss},
                   {"non_identifiable", st.non_identifiable}};
    if (truth) {
        double err[3] = {0, 0, 0};
        std::size_t n = 0;
        for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x) {
                if (!g.covered(x, y)) continue;
                const MaterialSample a = mats.sample(x, y), b = truth->sample(x, y);
                err[0] += (std::abs(a.albedo.x - b.albedo.x) + std::abs(a.albedo.y - b.albedo.y) +
                           std::abs(a.albedo.z - b.albedo.z)) / 3.0;
                err[1] += std::abs(a.metallic - b.metallic);
                err[2] += std::abs(a.roughness - b.roughness);
                ++n;
            }
        if (n > 0)
            report["mae"] = {{"albedo", err[0] / n}, {"metallic", err[1] / n}, {"roughness", err[2] / n}};
    }
    const fs::path out = c.out;
    fs::create_directories(out);
    write_pfm(out / "albedo.pfm", mats.albedo);
    write_pfm(out / "rm.pfm", mats.rm);
    write_png(out / "mask.png", g.mask, 8, true);
    write_json(out / "report.json", report);
    write_json(out / "manifest.json",
               build_manifest(out, {{"albedo.pfm", "albedo"}, {"rm.pfm", "rm"}, {"mask.png", "mask"},
                                    {"report.json", "report"}}));
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_bake_uv(const Common& c) {
    const json cfg = c.config();
    const TriMesh mesh = mesh_from_spec(cfg.value("mesh", std::string("sphere")));
    const PipelineConfig pc = pipeline_config_from_json(cfg);
    PipelineResult r;
    r.atlas = bake_uv_geometry(mesh, pc.atlas_resolution);
    r.cameras = pick_cameras(cfg, mesh);

    // Per-view material images, or the textures read through each view.
    const json views = cfg.value("views", json::array());
    require(views.empty() || views.size() == r.cameras.size(), ErrorCode::ShapeMismatch,
            "need one views entry per camera");
    const UvMaterials tex = materials_from_json(cfg.value("materials", json::object()), c.seed, pc.atlas_resolution);
    BackprojectOptions bo;
    bo.min_cos = pc.min_cos;
    std::vector<ViewPartial> partials;
    for (std::size_t i = 0; i < r.cameras.size(); ++i) {
        const GBuffer g = rasterize_gbuffer(mesh, r.cameras[i]);
        MaterialMaps m;
        if (views.empty()) {
            m = view_materials_from_uv(tex, g);
        } else {
            m.albedo = read_image(views[i].at("albedo").get<std::string>());
            m.rm = read_image(views[i].at("rm").get<std::string>());
        }
        partials.push_back(backproject_view(r.atlas, g, r.cameras[i], m, bo));
        r.report.views.push_back({g.coverage(), 0.0});
    }
    const BlendResult b = blend_views(partials, pc.blend, pc.blend_eps);
    r.blended = {b.materials.albedo, b.materials.rm};
    r.seen = ImageF(pc.atlas_resolution, pc.atlas_resolution, 1);
    std::size_t valid = 0, seen = 0;
    for (int y = 0; y < pc.atlas_resolution; ++y)
        for (int x = 0; x < pc.atlas_resolution; ++x) {
            if (!r.atlas.is_valid(x, y)) continue;
            ++valid;
            if (b.count.at(x, y) > 0.5f) {
                r.seen.at(x, y) = 1.0f;
                ++seen;
            }
        }
    const auto refine = [&](const ImageF& m, const std::string& stem) {
        const RefineRequest req{m, r.seen, r.atlas.position};
        if (pc.refine == RefineMethod::External) {
            const fs::path work = pc.refine_workdir.empty() ? fs::path(c.out) / "refine" : pc.refine_workdir;
            return refine_external(req, pc.refine_command, work, stem);
        }
        return refine_pullpush(req);
    };
    r.materials = {refine(r.blended.albedo, "albedo"), refine(r.blended.rm, "rm")};
    r.report.coverage = valid ? static_cast<double>(seen) / valid : 0.0;
    r.report.missing_fraction = 1.0 - r.report.coverage;
    r.report.overlap_texels = r.atlas.overlap_texels;
    r.report.refine_calls = 2;
    if (r.atlas.overlap_texels > 0) r.report.flags.push_back("uv-overlap");
    std::cout << write_pipeline_outputs(c.out, r).dump(2) << "\n";
    return 0;
}

json compare_images(const fs::path& pred, const fs::path& truth) {
    const ImageF a = read_image(pred), b = read_image(truth);
    return {{"psnr", psnr(a, b)}, {"ssim", ssim(a, b)}, {"l1", l1_loss(a, b)}, {"ssi", ssi_loss(a, b)}};
}

int cmd_metrics(const Common& c, const std::string& pred, const std::string& truth) {
    json out;
    if (fs::is_directory(pred)) {
        require(fs::is_directory(truth), ErrorCode::InvalidArgument, "both arguments must be directories");
        std::vector<fs::path> names;
        for (const auto& e : fs::directory_iterator(pred))
            if (e.is_regular_file() && (e.path().extension() == ".pfm" || e.path().extension() == ".png") &&
                fs::exists(fs::path(truth) / e.path().filename()))
                names.push_back(e.path().filename());
        std::sort(names.begin(), names.end());
        require(!names.empty(), ErrorCode::EmptyInput, "no image names in common");
        out["files"] = json::object();
        for (const auto& n : names) out["files"][n.string()] = compare_images(fs::path(pred) / n, fs::path(truth) / n);
    } else {
        out = compare_images(pred, truth);
    }
    if (c.out != ".") {
        fs::create_directories(c.out);
        write_json(fs::path(c.out) / "metrics.json", out);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct DumpArgs {
    int train_steps = 1000;
    int steps = 4;
    std::string spacing = "both";
    int offset = 0;
    std::string beta_schedule = "scaled_linear";
    double beta_start = 0.00085;
    double beta_end = 0.012;
};

int cmd_scheduler_dump(const Common& c, DumpArgs a) {
    const json cfg = c.config();
    a.train_steps = cfg.value("train_steps", a.train_steps);
    a.steps = cfg.value("inference_steps", a.steps);
    a.spacing = cfg.value("spacing", a.spacing);
    a.offset = cfg.value("steps_offset", a.offset);
    a.beta_schedule = cfg.value("beta_schedule", a.beta_schedule);
    a.beta_start = cfg.value("beta_start", a.beta_start);
    a.beta_end = cfg.value("beta_end", a.beta_end);

    const NoiseSchedule sched(a.train_steps, a.beta_start, a.beta_end, parse_beta_schedule(a.beta_schedule));
    json out = {{"train_steps", a.train_steps},
                {"inference_steps", a.steps},
                {"beta_schedule", a.beta_schedule},
                {"alpha_bar_last", sched.alpha_bar(a.train_steps - 1)}};
    std::vector<Spacing> which;
    if (a.spacing == "both")
        which = {Spacing::Leading, Spacing::Trailing};
    else
        which = {parse_spacing(a.spacing)};
    for (Spacing s : which) {
        const auto ts = make_timesteps(a.train_steps, a.steps, s, a.offset);
        json ab = json::array();
        for (int t : ts) ab.push_back(sched.alpha_bar(t));
        out[std::string(to_string(s))] = {{"timesteps", ts}, {"alpha_bar", ab}};
    }
    if (a.train_steps > 1) out["noise_mismatch_ratio"] = noise_mismatch_ratio(sched, std::max(a.offset, 1));
    if (c.out != ".") {
        fs::create_directories(c.out);
        write_json(fs::path(c.out) / "scheduler.json", out);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace
}  // namespace matforge

int main(int argc, char** argv) {
    using namespace matforge;
    CLI::App app{"matforge: material decomposition and UV consolidation toolkit"};
    app.require_subcommand(1);
    Common common;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--threads", common.threads, "worker threads (0 = hardware)");
        sub->add_option("--seed", common.seed, "seed for procedural inputs");
    };

    auto* render = app.add_subcommand("render", "render a mesh view under an environment");
    auto* pre = app.add_subcommand("prefilter", "precompute irradiance, specular mips and the BRDF table");
    auto* dec = app.add_subcommand("decompose", "run the multi-view decomposition pipeline");
    auto* rec = app.add_subcommand("recover", "recover per-pixel materials of one view by inverse rendering");
    auto* bake = app.add_subcommand("bake-uv", "backproject per-view materials into a refined UV atlas");
    auto* met = app.add_subcommand("metrics", "compare two images or two directories of images");
    auto* dump = app.add_subcommand("scheduler-dump", "print inference timesteps and cumulative alphas");
    for (auto* s : {render, pre, dec, rec, bake, met, dump}) add_common(s);

    std::string pred, truth;
    met->add_option("prediction", pred, "predicted image or directory")->required();
    met->add_option("reference", truth, "reference image or directory")->required();

    DumpArgs dargs;
    dump->add_option("--train-steps", dargs.train_steps);
    dump->add_option("--steps", dargs.steps, "inference steps");
    dump->add_option("--spacing", dargs.spacing)->check(CLI::IsMember({"leading", "trailing", "both"}));
    dump->add_option("--offset", dargs.offset, "leading steps offset");
    dump->add_option("--beta-schedule", dargs.beta_schedule)->check(CLI::IsMember({"linear", "scaled_linear"}));
    dump->add_option("--beta-start", dargs.beta_start);
    dump->add_option("--beta-end", dargs.beta_end);

    CLI11_PARSE(app, argc, argv);
    try {
        if (common.threads > 0) set_thread_count(common.threads);
        if (*render) return cmd_render(common);
        if (*pre) return cmd_prefilter(common);
        if (*dec) return cmd_decompose(common);
        if (*rec) return cmd_recover(common);
        if (*bake) return cmd_bake_uv(common);
        if (*met) return cmd_metrics(common, pred, truth);
        if (*dump) return cmd_scheduler_dump(common, dargs);
    } catch (const Error& e) {
        std::cerr << "matforge: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "matforge: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
