#pragma once

#include <optional>
#include <string>
#include <vector>

#include "liquidseg/image.hpp"

namespace liquidseg {

enum class DomainTag { colored, transparent, synthetic_transparent };

std::string to_string(DomainTag tag);
DomainTag domain_tag_from_string(const std::string& s);

struct ManifestRecord {
    std::string image_id;
    std::string image_path;                   // relative to the manifest file
    std::optional<std::string> mask_path;
    std::optional<double> fill_fraction;      // in [0,1]
    BoundingBox cup_bbox;
    int scene_id = 0;
    std::string split_tag = "train";          // train | test
};

// Typed index of a dataset directory: manifest.json next to images/ and masks/.
struct DatasetManifest {
    DomainTag domain_tag = DomainTag::colored;
    std::vector<ManifestRecord> records;
    std::string base_dir;                     // directory containing the manifest
    uint64_t pipeline_seed = 0;               // config echo for provenance checks

    std::string resolve(const std::string& rel) const;
    void validate() const;                    // unique ids, bbox sanity
};

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace liquidseg
