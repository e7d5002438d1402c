#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "lmsc/ops.hpp"
#include "lmsc/tensor.hpp"

namespace lmsc {

struct GridDims {
    std::int64_t nx = 256, ny = 256, nz = 32;
    double voxel_size = 0.2;

    std::int64_t voxels() const { return nx * ny * nz; }
    // Voxel linear layout: x-major, then y, then z fastest.
    std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return (x * ny + y) * nz + z;
    }
    void validate() const;
    bool operator==(const GridDims& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz && voxel_size == o.voxel_size;
    }
};

// Binary voxel occupancy, packed bitset, MSB-first within each byte.
struct OccupancyGrid {
    GridDims dims;
    std::vector<std::uint8_t> bits; // voxels()/8 bytes

    static OccupancyGrid empty(const GridDims& d);
    bool get(std::int64_t x, std::int64_t y, std::int64_t z) const {
        const std::int64_t v = dims.index(x, y, z);
        return (bits[static_cast<std::size_t>(v >> 3)] >> (7 - (v & 7))) & 1;
    }
    void set(std::int64_t x, std::int64_t y, std::int64_t z, bool on = true) {
        const std::int64_t v = dims.index(x, y, z);
        const std::uint8_t m = static_cast<std::uint8_t>(1u << (7 - (v & 7)));
        if (on)
            bits[static_cast<std::size_t>(v >> 3)] |= m;
        else
            bits[static_cast<std::size_t>(v >> 3)] &= static_cast<std::uint8_t>(~m);
    }
    std::int64_t popcount() const;
    double density() const { return static_cast<double>(popcount()) / static_cast<double>(dims.voxels()); }
};

// Per-voxel semantic labels including free (0) and the unknown sentinel.
struct LabelGrid {
    GridDims dims;
    std::vector<std::uint16_t> labels; // voxels() entries

    static LabelGrid filled(const GridDims& d, std::uint16_t value);
    std::uint16_t at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return labels[static_cast<std::size_t>(dims.index(x, y, z))];
    }
    std::uint16_t& at(std::int64_t x, std::int64_t y, std::int64_t z) {
        return labels[static_cast<std::size_t>(dims.index(x, y, z))];
    }
};

struct ClassTable {
    int num_semantic = 19; // N; internal ids 1..N, id 0 = free
    std::vector<std::string> names; // semantic class names, index 0 -> id 1

    static ClassTable semantic_kitti();
    static ClassTable generic(int n);
    int num_logits() const { return num_semantic + 1; } // N+1 including free
    // RGB palette per internal id (0 = free, rendered dark grey if ever asked).
    std::array<std::uint8_t, 3> color(int internal_id) const;
};

struct ClassWeights {
    std::vector<std::int64_t> freq; // absolute voxel counts f_c, index = internal id
    double eps = 0.001;
    std::vector<scalar> w;
};

struct LidarPoint {
    double x, y, z; // meters
    int ring;       // layer index, [0, 63] for the 64-layer default
};
using PointCloud = std::vector<LidarPoint>;

// --- binary I/O -------------------------------------------------------------

OccupancyGrid load_occupancy(std::istream& in, const GridDims& dims);
void save_occupancy(std::ostream& out, const OccupancyGrid& g);

// Raw little-endian u16 labels remapped through raw->internal; unmapped raw
// ids become the unknown sentinel.
LabelGrid load_labels(std::istream& in, const GridDims& dims,
                      const std::vector<std::pair<std::uint16_t, std::uint16_t>>& raw_to_internal);
void save_labels(std::ostream& out, const LabelGrid& g);

// --- transforms -------------------------------------------------------------

// Most frequent non-unknown label per factor^3 block; ties break to the
// smallest id; all-unknown blocks stay unknown.
LabelGrid majority_pool(const LabelGrid& labels, int factor);

std::vector<std::int64_t> compute_class_frequencies(const std::vector<const LabelGrid*>& dataset,
                                                    int num_classes);

// w_c = 1/ln(f_c + eps); near-empty classes clamp to w_max.
ClassWeights class_weights(const std::vector<std::int64_t>& freq, double eps = 0.001,
                           scalar w_max = scalar(10));

void flip_xy(OccupancyGrid& occ, LabelGrid& labels, bool flip_x, bool flip_y);

// Keeps points whose ring is a multiple of keep_every.
PointCloud subsample_layers(const PointCloud& pc, int keep_every);

OccupancyGrid voxelize(const PointCloud& pc, const std::array<double, 3>& origin,
                       const GridDims& dims);

// Occupancy as a 2D network input: channel c holds the z=c slice.
Tensor grid_to_input(const OccupancyGrid& occ);

} // namespace lmsc
