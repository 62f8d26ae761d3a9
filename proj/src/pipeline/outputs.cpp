// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "matforge/error.hpp"
#include "matforge/image_io.hpp"
#include "matforge/losses.hpp"
#include "matforge/pipeline.hpp"

namespace matforge {

namespace {

MetricRow compare(const std::string& name, const ImageF& a, const ImageF& b) {
    return {name, psnr(a, b), ssim(a, b), l1_loss(a, b)};
}

ImageF clamp_unit(ImageF img) {
    for (float& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

nlohmann::json row_json(const MetricRow& r) {
    return {{"name", r.name}, {"psnr", r.psnr}, {"ssim", r.ssim}, {"l1", r.l1}};
}

}  // namespace

nlohmann::json MetricTable::to_json() const {
    nlohmann::json out = {{"rows", nlohmann::json::array()}, {"relighting", nlohmann::json::array()}};
    for (const MetricRow& r : rows) out["rows"].push_back(row_json(r));
    for (const MetricRow& r : relighting) out["relighting"].push_back(row_json(r));
    return out;
}

MetricTable evaluate(const UvMaterials& pred, const UvMaterials& truth, std::span<const PrefilteredEnv* const> envs,
                     std::span<const GBuffer> gbufs, std::span<const Camera> cameras) {
    require(!envs.empty(), ErrorCode::EmptyInput, "evaluate: relighting needs at least one environment");
    require(!gbufs.empty() && gbufs.size() == cameras.size(), ErrorCode::InvalidArgument,
            "evaluate: one camera per G-buffer expected");
    require_same_shape(pred.albedo, truth.albedo, "evaluate albedo");
    require_same_shape(pred.rm, truth.rm, "evaluate rm");
    MetricTable table;
    table.rows.push_back(compare("albedo", pred.albedo, truth.albedo));
    table.rows.push_back(compare("metallic", extract_channels(pred.rm, 1, 1), extract_channels(truth.rm, 1, 1)));
    table.rows.push_back(compare("roughness", extract_channels(pred.rm, 0, 1), extract_channels(truth.rm, 0, 1)));

    MetricRow overall{"relighting", 0, 0, 0};
    for (std::size_t e = 0; e < envs.size(); ++e) {
        MetricRow row{"env" + std::to_string(e), 0, 0, 0};
        for (std::size_t v = 0; v < gbufs.size(); ++v) {
            const ImageF a = clamp_unit(render_view(gbufs[v], view_materials_from_uv(pred, gbufs[v]), *envs[e], cameras[v]));
            const ImageF b = clamp_unit(render_view(gbufs[v], view_materials_from_uv(truth, gbufs[v]), *envs[e], cameras[v]));
            const MetricRow r = compare(row.name, a, b);
            row.psnr += r.psnr;
            row.ssim += r.ssim;
            row.l1 += r.l1;
        }
        const double n = static_cast<double>(gbufs.size());
        row.psnr /= n;
        row.ssim /= n;
        row.l1 /= n;
        overall.psnr += row.psnr;
        overall.ssim += row.ssim;
        overall.l1 += row.l1;
        table.relighting.push_back(row);
    }
    const double ne = static_cast<double>(envs.size());
    overall.psnr /= ne;
    overall.ssim /= ne;
    overall.l1 /= ne;
    table.rows.push_back(overall);
    return table;
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::InvalidArgument, "SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

std::string report_digest(const nlohmann::json& report) {
    nlohmann::json copy = report;
    copy.erase("stage_seconds");
    const std::string text = copy.dump();
    return sha256_hex({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

nlohmann::json build_manifest(const std::filesystem::path& dir,
                              const std::vector<std::pair<std::string, std::string>>& files_and_roles) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, role] : files_and_roles) {
        const auto path = dir / name;
        nlohmann::json entry = {{"path", name}, {"role", role}, {"bytes", std::filesystem::file_size(path)}};
        if (role == "report") {
            std::ifstream in(path);
            entry["sha256"] = report_digest(nlohmann::json::parse(in));
            entry["digest_excludes"] = {"stage_seconds"};
        } else {
            entry["sha256"] = sha256_file(path);
        }
        files.push_back(entry);
    }
    // Byte counts of reports vary with timing digits; drop them so the
    // manifest itself is reproducible.
    for (auto& f : files)
        if (f["role"] == "report") f.erase("bytes");
    return {{"format", "matforge-manifest-1"}, {"rm_channels", {"roughness", "metallic", "zero"}}, {"files", files}};
}

nlohmann::json write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result) {
    std::filesystem::create_directories(dir);
    write_pfm(dir / "albedo.pfm", result.materials.albedo);
    write_png(dir / "albedo.png", result.materials.albedo, 8, false);
    write_pfm(dir / "rm.pfm", result.materials.rm);
    write_png(dir / "rm.png", result.materials.rm, 8, true);
    write_png(dir / "mask.png", result.seen, 8, true);
    write_pfm(dir / "position.pfm", result.atlas.position);
    {
        std::ofstream out(dir / "report.json");
        out << result.report.to_json().dump(2) << "\n";
        if (!out) throw Error(ErrorCode::Io, "cannot write report.json");
    }
    const nlohmann::json manifest = build_manifest(dir, {{"albedo.pfm", "albedo"},
                                                         {"albedo.png", "albedo"},
                                                         {"rm.pfm", "rm"},
                                                         {"rm.png", "rm"},
                                                         {"mask.png", "mask"},
                                                         {"position.pfm", "position"},
                                                         {"report.json", "report"}});
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::Io, "cannot write manifest.json");
    return manifest;
}

}  // namespace matforge
