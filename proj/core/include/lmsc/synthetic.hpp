#pragma once

#include <array>
#include <cstdint>

#include "lmsc/grid.hpp"

namespace lmsc {

// Procedural desk-scale scene: a ground plane with patches, a few boxes, and
// a simulated spinning-LiDAR scan from a virtual sensor pose. The ground
// truth keeps the unknown sentinel wherever no ray ever observed the voxel.
struct SyntheticScene {
    OccupancyGrid occ;  // sparse single-scan input (first-hit voxels)
    LabelGrid labels;   // observed labels; occluded regions are unknown
    PointCloud cloud;   // hit points with ring (elevation layer) indices
    std::array<double, 3> origin = {0, 0, 0};
    std::array<double, 3> sensor = {0, 0, 0}; // meters
};

SyntheticScene make_scene(const GridDims& dims, int num_classes, std::uint64_t seed,
                          int rings = 64, int azimuth_steps = 900);

} // namespace lmsc
