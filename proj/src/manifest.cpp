#include "liquidseg/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace liquidseg {

std::string to_string(DomainTag tag) {
    switch (tag) {
        case DomainTag::colored: return "colored";
        case DomainTag::transparent: return "transparent";
        case DomainTag::synthetic_transparent: return "synthetic_transparent";
    }
    return "colored";
}

DomainTag domain_tag_from_string(const std::string& s) {
    if (s == "colored") return DomainTag::colored;
    if (s == "transparent") return DomainTag::transparent;
    if (s == "synthetic_transparent") return DomainTag::synthetic_transparent;
    throw std::invalid_argument("manifest: unknown domain_tag: " + s);
}

std::string DatasetManifest::resolve(const std::string& rel) const {
    return (fs::path(base_dir) / rel).string();
}

void DatasetManifest::validate() const {
    std::set<std::string> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.image_id).second)
            throw std::invalid_argument("manifest: duplicate image_id " + r.image_id);
        r.cup_bbox.validate();
        if (r.fill_fraction && (*r.fill_fraction < 0.0 || *r.fill_fraction > 1.0))
            throw std::invalid_argument("manifest: fill_fraction out of [0,1] for " + r.image_id);
        if (r.split_tag != "train" && r.split_tag != "test")
            throw std::invalid_argument("manifest: bad split_tag for " + r.image_id);
    }
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["domain_tag"] = to_string(m.domain_tag);
    j["pipeline_seed"] = m.pipeline_seed;
    json recs = json::array();
    for (const auto& r : m.records) {
        json jr;
        jr["image_id"] = r.image_id;
        jr["image_path"] = r.image_path;
        if (r.mask_path) jr["mask_path"] = *r.mask_path;
        if (r.fill_fraction) jr["fill_fraction"] = *r.fill_fraction;
        jr["cup_bbox"] = {{"x_min", r.cup_bbox.x_min},
                          {"y_min", r.cup_bbox.y_min},
                          {"x_max", r.cup_bbox.x_max},
                          {"y_max", r.cup_bbox.y_max}};
        jr["scene_id"] = r.scene_id;
        jr["split_tag"] = r.split_tag;
        recs.push_back(jr);
    }
    j["records"] = recs;

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("manifest: cannot write " + path);
    f << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("manifest: cannot open " + path);
    json j;
    f >> j;

    DatasetManifest m;
    m.base_dir = fs::path(path).parent_path().string();
    m.domain_tag = domain_tag_from_string(j.at("domain_tag").get<std::string>());
    m.pipeline_seed = j.value("pipeline_seed", uint64_t{0});
    for (const auto& jr : j.at("records")) {
        ManifestRecord r;
        r.image_id = jr.at("image_id").get<std::string>();
        r.image_path = jr.at("image_path").get<std::string>();
        if (jr.contains("mask_path")) r.mask_path = jr["mask_path"].get<std::string>();
        if (jr.contains("fill_fraction")) r.fill_fraction = jr["fill_fraction"].get<double>();
        const auto& bb = jr.at("cup_bbox");
        r.cup_bbox = BoundingBox{bb.at("x_min").get<int>(), bb.at("y_min").get<int>(),
                                 bb.at("x_max").get<int>(), bb.at("y_max").get<int>()};
        r.scene_id = jr.value("scene_id", 0);
        r.split_tag = jr.value("split_tag", "train");
        m.records.push_back(std::move(r));
    }
    m.validate();
    return m;
}

}  // namespace liquidseg
