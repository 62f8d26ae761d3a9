// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/envlight.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "matforge/error.hpp"
#include "matforge/image_io.hpp"
#include "matforge/microfacet.hpp"
#include "matforge/parallel.hpp"

namespace matforge {

Vec3 equirect_direction(double u, double v) {
    const double phi = u * 2.0 * kPi - kPi;
    const double theta = v * kPi;
    const double st = std::sin(theta);
    return {st * std::cos(phi), std::cos(theta), st * std::sin(phi)};
}

void equirect_uv(const Vec3& dir, double& u, double& v) {
    const double phi = std::atan2(dir.z, dir.x);
    u = (phi + kPi) / (2.0 * kPi);
    if (u >= 1.0) u -= 1.0;
    v = std::acos(std::clamp(dir.y, -1.0, 1.0)) / kPi;
}

Vec3 equirect_texel_direction(int x, int y, int width, int height) {
    return equirect_direction((x + 0.5) / width, (y + 0.5) / height);
}

Vec3 sample_equirect(const ImageF& img, const Vec3& dir) {
    double u, v;
    equirect_uv(dir, u, v);
    const int W = img.width(), H = img.height();
    const double fx = u * W - 0.5;
    const double fy = std::clamp(v * H - 0.5, 0.0, static_cast<double>(H - 1));
    const double flx = std::floor(fx);
    const double tx = fx - flx;
    int x0 = static_cast<int>(flx) % W;
    if (x0 < 0) x0 += W;
    const int x1 = (x0 + 1) % W;
    const int y0 = std::min(static_cast<int>(fy), H - 1);
    const int y1 = std::min(y0 + 1, H - 1);
    const double ty = fy - y0;
    const Vec3 top = img.rgb(x0, y0) * (1.0 - tx) + img.rgb(x1, y0) * tx;
    const Vec3 bottom = img.rgb(x0, y1) * (1.0 - tx) + img.rgb(x1, y1) * tx;
    return top * (1.0 - ty) + bottom * ty;
}

EnvMap::EnvMap(ImageF radiance) : radiance_(std::move(radiance)) {
    require(radiance_.channels() == 3, ErrorCode::InvalidArgument, "environment map must have 3 channels");
    require(radiance_.height() >= 1 && radiance_.width() == 2 * radiance_.height(), ErrorCode::InvalidArgument,
            "environment map must be equirectangular with width = 2 * height");
    for (float v : radiance_.data())
        require(std::isfinite(v) && v >= 0.0f, ErrorCode::InvalidArgument,
                "environment radiance must be finite and non-negative");
}

EnvMap EnvMap::constant(const Vec3& radiance, int height) {
    ImageF img(2 * height, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < 2 * height; ++x) img.set_rgb(x, y, radiance);
    return EnvMap(std::move(img));
}

float EnvMap::max_radiance() const {
    float m = 0.0f;
    for (float v : radiance_.data()) m = std::max(m, v);
    return m;
}

EnvMap load_env(const std::filesystem::path& pfm_path) { return EnvMap(read_pfm(pfm_path)); }

ImageF compute_irradiance(const EnvMap& env, int out_height) {
    require(out_height >= 8, ErrorCode::InvalidArgument, "irradiance height must be at least 8");
    const ImageF& src = env.radiance();
    const int SW = src.width(), SH = src.height();
    const double dtheta = kPi / SH;
    const double dphi = 2.0 * kPi / SW;

    struct Texel {
        Vec3 dir;
        Vec3 weighted;  // radiance * solid angle
    };
    std::vector<Texel> texels;
    texels.reserve(src.pixel_count());
    for (int y = 0; y < SH; ++y) {
        const double theta = (y + 0.5) * dtheta;
        const double weight = std::sin(theta) * dtheta * dphi;
        for (int x = 0; x < SW; ++x) {
            const Vec3 L = src.rgb(x, y);
            if (L.x == 0.0 && L.y == 0.0 && L.z == 0.0) continue;
            texels.push_back({equirect_texel_direction(x, y, SW, SH), L * weight});
        }
    }

    const int OW = 2 * out_height, OH = out_height;
    ImageF out(OW, OH, 3);
    parallel_for(0, static_cast<std::size_t>(OH), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < OW; ++x) {
            const Vec3 n = equirect_texel_direction(x, y, OW, OH);
            Vec3 sum;
            for (const Texel& t : texels) {
                const double c = dot(t.dir, n);
                if (c > 0.0) sum += t.weighted * c;
            }
            out.set_rgb(x, y, sum);
        }
    });
    return out;
}

namespace {

ImageF resample_equirect(const ImageF& src, int height) {
    if (src.height() == height) return src;
    ImageF out(2 * height, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < 2 * height; ++x)
            out.set_rgb(x, y, sample_equirect(src, equirect_texel_direction(x, y, 2 * height, height)));
    return out;
}

ImageF box_downsample(const ImageF& src) {
    const int W = std::max(2, src.width() / 2), H = std::max(1, src.height() / 2);
    ImageF out(W, H, src.channels());
    for (int y = 0; y < H; ++y) {
        const int y0 = std::min(2 * y, src.height() - 1), y1 = std::min(2 * y + 1, src.height() - 1);
        for (int x = 0; x < W; ++x) {
            const int x0 = std::min(2 * x, src.width() - 1), x1 = std::min(2 * x + 1, src.width() - 1);
            for (int c = 0; c < src.channels(); ++c)
                out.at(x, y, c) = 0.25f * (src.at(x0, y0, c) + src.at(x1, y0, c) + src.at(x0, y1, c) + src.at(x1, y1, c));
        }
    }
    return out;
}

// Source pyramid for filtered importance sampling.
struct SourcePyramid {
    std::vector<ImageF> levels;

    explicit SourcePyramid(const ImageF& src) {
        levels.push_back(src);
        while (levels.back().height() > 2) levels.push_back(box_downsample(levels.back()));
    }

    Vec3 lookup(const Vec3& dir, double lod) const {
        lod = std::clamp(lod, 0.0, static_cast<double>(levels.size() - 1));
        const int l0 = static_cast<int>(lod);
        const int l1 = std::min(l0 + 1, static_cast<int>(levels.size()) - 1);
        const double t = lod - l0;
        const Vec3 a = sample_equirect(levels[l0], dir);
        if (t == 0.0 || l0 == l1) return a;
        return lerp(a, sample_equirect(levels[l1], dir), t);
    }
};

}  // namespace

std::vector<ImageF> prefilter_specular(const EnvMap& env, int n_mips, int samples_per_texel, int base_height,
                                       int min_height) {
    require(n_mips >= 2, ErrorCode::InvalidArgument, "prefilter_specular needs at least 2 mip levels");
    require(samples_per_texel >= 32, ErrorCode::InvalidArgument, "prefilter_specular needs at least 32 samples");
    require(base_height >= 1 && min_height >= 1, ErrorCode::InvalidArgument, "invalid specular chain resolution");
    const ImageF& src = env.radiance();
    const SourcePyramid pyramid(src);
    const double texel_solid_angle = 4.0 * kPi / (static_cast<double>(src.width()) * src.height());

    const int h0 = std::min(base_height, src.height());
    std::vector<ImageF> chain;
    chain.push_back(resample_equirect(src, h0));

    for (int level = 1; level < n_mips; ++level) {
        const double r = static_cast<double>(level) / (n_mips - 1);
        const double alpha = microfacet::alpha_from_roughness(r);
        const int H = std::max(min_height, h0 >> level);
        const int W = 2 * H;

        // Sample set is shared by every texel of the level.
        struct Sample {
            Vec3 l;
            double n_dot_l;
            double lod;
        };
        std::vector<Sample> samples;
        for (int i = 0; i < samples_per_texel; ++i) {
            const Vec3 h = microfacet::sample_ggx_half(microfacet::hammersley(i, samples_per_texel), alpha);
            const Vec3 l{2.0 * h.z * h.x, 2.0 * h.z * h.y, 2.0 * h.z * h.z - 1.0};
            if (l.z <= 0.0) continue;
            const double pdf = microfacet::ggx_d(h.z, alpha) / 4.0;
            const double sample_solid_angle = 1.0 / (samples_per_texel * pdf);
            const double lod = 0.5 * std::log2(sample_solid_angle / texel_solid_angle) + 1.0;
            samples.push_back({l, l.z, std::max(0.0, lod)});
        }

        ImageF out(W, H, 3);
        parallel_for(0, static_cast<std::size_t>(H), [&](std::size_t row) {
            const int y = static_cast<int>(row);
            for (int x = 0; x < W; ++x) {
                const Frame frame = Frame::from_normal(equirect_texel_direction(x, y, W, H));
                Vec3 sum;
                double wsum = 0.0;
                for (const Sample& s : samples) {
                    sum += pyramid.lookup(frame.to_world(s.l), s.lod) * s.n_dot_l;
                    wsum += s.n_dot_l;
                }
                out.set_rgb(x, y, wsum > 0.0 ? sum / wsum : Vec3{});
            }
        });
        chain.push_back(std::move(out));
    }
    return chain;
}

ImageF integrate_brdf_lut(int resolution, int samples) {
    require(resolution >= 16, ErrorCode::InvalidArgument, "BRDF LUT resolution must be at least 16");
    require(samples >= 1, ErrorCode::InvalidArgument, "BRDF LUT needs at least one sample");
    ImageF lut(resolution, resolution, 2);
    parallel_for(0, static_cast<std::size_t>(resolution), [&](std::size_t row) {
        const int j = static_cast<int>(row);
        const double r = static_cast<double>(j) / (resolution - 1);
        const double alpha = microfacet::alpha_from_roughness(r);
        for (int i = 0; i < resolution; ++i) {
            const double n_dot_v = std::max(static_cast<double>(i) / (resolution - 1), 1e-4);
            const Vec3 v{std::sqrt(1.0 - n_dot_v * n_dot_v), 0.0, n_dot_v};
            double a = 0.0, b = 0.0;
            for (int s = 0; s < samples; ++s) {
                const Vec3 h = microfacet::sample_ggx_half(microfacet::hammersley(s, samples), alpha);
                const double v_dot_h = dot(v, h);
                const Vec3 l = h * (2.0 * v_dot_h) - v;
                const double n_dot_l = l.z;
                const double n_dot_h = h.z;
                if (n_dot_l <= 0.0 || v_dot_h <= 0.0) continue;
                // f cos / pdf with pdf = D (n.h) / (4 (v.h)); D cancels.
                const double g = 4.0 * microfacet::smith_visibility(n_dot_v, n_dot_l, alpha) * n_dot_l * v_dot_h / n_dot_h;
                const double fc = microfacet::schlick_weight(v_dot_h);
                a += (1.0 - fc) * g;
                b += fc * g;
            }
            lut.at(i, j, 0) = static_cast<float>(a / samples);
            lut.at(i, j, 1) = static_cast<float>(b / samples);
        }
    });
    return lut;
}

PrefilteredEnv::PrefilteredEnv(ImageF irradiance, std::vector<ImageF> specular, ImageF brdf_lut)
    : irradiance_(std::move(irradiance)), specular_(std::move(specular)), lut_(std::move(brdf_lut)) {
    require(irradiance_.channels() == 3 && irradiance_.width() == 2 * irradiance_.height(),
            ErrorCode::InvalidArgument, "irradiance map must be a 3-channel equirect image");
    require(specular_.size() >= 2, ErrorCode::InvalidArgument, "specular chain needs at least 2 levels");
    for (const auto& lvl : specular_)
        require(lvl.channels() == 3 && lvl.width() == 2 * lvl.height(), ErrorCode::InvalidArgument,
                "specular levels must be 3-channel equirect images");
    require(lut_.channels() >= 2 && lut_.width() == lut_.height() && lut_.width() >= 2, ErrorCode::InvalidArgument,
            "BRDF LUT must be square with at least 2 channels");
}

Vec3 PrefilteredEnv::specular_at(const Vec3& reflected, double roughness, Vec3* d_dr) const {
    const int last = mip_count() - 1;
    const double s = std::clamp(roughness, 0.0, 1.0) * last;
    const int l0 = std::min(static_cast<int>(s), last - 1);
    const double f = s - l0;
    const Vec3 a = sample_equirect(specular_[l0], reflected);
    const Vec3 b = sample_equirect(specular_[l0 + 1], reflected);
    if (d_dr) *d_dr = (b - a) * static_cast<double>(last);
    return a * (1.0 - f) + b * f;
}

Vec2 PrefilteredEnv::brdf_at(double cos_v, double roughness, Vec2* d_dr) const {
    const int n = lut_.width();
    const double fx = std::clamp(cos_v, 0.0, 1.0) * (n - 1);
    const double fy = std::clamp(roughness, 0.0, 1.0) * (n - 1);
    const int x0 = std::min(static_cast<int>(fx), n - 2);
    const int y0 = std::min(static_cast<int>(fy), n - 2);
    const double tx = fx - x0, ty = fy - y0;
    Vec2 row0, row1;
    for (int c = 0; c < 2; ++c) {
        const double v0 = lut_.at(x0, y0, c) * (1.0 - tx) + lut_.at(x0 + 1, y0, c) * tx;
        const double v1 = lut_.at(x0, y0 + 1, c) * (1.0 - tx) + lut_.at(x0 + 1, y0 + 1, c) * tx;
        (c == 0 ? row0.x : row0.y) = v0;
        (c == 0 ? row1.x : row1.y) = v1;
    }
    if (d_dr) *d_dr = (row1 - row0) * static_cast<double>(n - 1);
    return row0 * (1.0 - ty) + row1 * ty;
}

std::vector<double> PrefilteredEnv::roughness_knots() const {
    std::vector<double> knots;
    for (int l = 0; l < mip_count(); ++l) knots.push_back(mip_roughness(l));
    const int n = lut_.width();
    for (int j = 0; j < n; ++j) knots.push_back(static_cast<double>(j) / (n - 1));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    return knots;
}

PrefilteredEnv prefilter(const EnvMap& env, const PrefilterSettings& settings, const ImageF& brdf_lut) {
    return PrefilteredEnv(compute_irradiance(env, settings.irradiance_height),
                          prefilter_specular(env, settings.n_mips, settings.samples_per_texel,
                                             settings.specular_base_height, settings.specular_min_height),
                          brdf_lut);
}

PrefilteredEnv prefilter(const EnvMap& env, const PrefilterSettings& settings) {
    return prefilter(env, settings, integrate_brdf_lut(settings.lut_size, settings.lut_samples));
}

void save_prefiltered(const std::filesystem::path& dir, const PrefilteredEnv& pre) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    write_pfm(dir / "irradiance.pfm", pre.irradiance());
    manifest["irradiance"] = {{"file", "irradiance.pfm"},
                              {"width", pre.irradiance().width()},
                              {"height", pre.irradiance().height()}};
    nlohmann::json levels = nlohmann::json::array();
    for (int l = 0; l < pre.mip_count(); ++l) {
        const std::string name = "specular_" + std::to_string(l) + ".pfm";
        write_pfm(dir / name, pre.specular()[l]);
        levels.push_back({{"file", name},
                          {"roughness", pre.mip_roughness(l)},
                          {"width", pre.specular()[l].width()},
                          {"height", pre.specular()[l].height()}});
    }
    manifest["specular"] = levels;
    write_pfm(dir / "brdf_lut.pfm", extract_channels(pre.brdf_lut(), 0, 2));
    manifest["brdf_lut"] = {{"file", "brdf_lut.pfm"},
                            {"size", pre.brdf_lut().width()},
                            {"channels", {"A", "B", "zero"}},
                            {"x_axis", "cos_theta_v"},
                            {"y_axis", "roughness"}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

PrefilteredEnv load_prefiltered(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
        ImageF irr = read_pfm(dir / manifest.at("irradiance").at("file").get<std::string>());
        std::vector<ImageF> chain;
        for (const auto& lvl : manifest.at("specular")) chain.push_back(read_pfm(dir / lvl.at("file").get<std::string>()));
        ImageF lut3 = read_pfm(dir / manifest.at("brdf_lut").at("file").get<std::string>());
        return PrefilteredEnv(std::move(irr), std::move(chain), extract_channels(lut3, 0, 2));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, "prefiltered manifest: " + std::string(e.what()));
    }
}

ImageF rotate_equirect_quarter(const ImageF& img, int quarter_turns) {
    require(img.width() % 4 == 0, ErrorCode::InvalidArgument, "equirect width must be divisible by 4");
    const int W = img.width();
    const int shift = ((quarter_turns % 4) + 4) % 4 * (W / 4);
    ImageF out(W, img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < img.channels(); ++c) out.at((x + shift) % W, y, c) = img.at(x, y, c);
    return out;
}

}  // namespace matforge
