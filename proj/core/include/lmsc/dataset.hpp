#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lmsc/grid.hpp"

namespace lmsc {

struct Sample {
    OccupancyGrid occ;
    LabelGrid labels;
};

// Structured text manifest listing (occupancy, label) file pairs plus the
// grid geometry and the raw->internal label map.
struct DatasetManifest {
    GridDims dims;
    int num_classes = 19;
    std::vector<std::pair<std::uint16_t, std::uint16_t>> label_map;
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> samples;

    static DatasetManifest load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;
};

Sample load_sample(const DatasetManifest& m, std::size_t index);
std::vector<Sample> load_all(const DatasetManifest& m);

} // namespace lmsc
