#include "lmsc/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

namespace lmsc {

void GridDims::validate() const {
    if (nx <= 0 || ny <= 0 || nz <= 0 || voxel_size <= 0)
        throw ConfigError("grid dims must be positive");
    if (nx % 8 != 0 || ny % 8 != 0)
        throw ConfigError("nx and ny must be divisible by 8");
    if (voxels() % 8 != 0)
        throw ConfigError("voxel count must be divisible by 8 for bit packing");
}

OccupancyGrid OccupancyGrid::empty(const GridDims& d) {
    OccupancyGrid g;
    g.dims = d;
    g.bits.assign(static_cast<std::size_t>(d.voxels() / 8), 0);
    return g;
}

std::int64_t OccupancyGrid::popcount() const {
    std::int64_t n = 0;
    for (std::uint8_t b : bits) n += std::popcount(b);
    return n;
}

LabelGrid LabelGrid::filled(const GridDims& d, std::uint16_t value) {
    LabelGrid g;
    g.dims = d;
    g.labels.assign(static_cast<std::size_t>(d.voxels()), value);
    return g;
}

ClassTable ClassTable::semantic_kitti() {
    ClassTable t;
    t.num_semantic = 19;
    t.names = {"road", "sidewalk", "parking", "other-ground", "building", "car", "truck",
               "bicycle", "motorcycle", "other-vehicle", "vegetation", "trunk", "terrain",
               "person", "bicyclist", "motorcyclist", "fence", "pole", "traffic-sign"};
    return t;
}

ClassTable ClassTable::generic(int n) {
    if (n == 19) return semantic_kitti();
    ClassTable t;
    t.num_semantic = n;
    for (int i = 1; i <= n; ++i) t.names.push_back("class-" + std::to_string(i));
    return t;
}

std::array<std::uint8_t, 3> ClassTable::color(int internal_id) const {
    // SemanticKITTI legend colors, by class name.
    static const std::map<std::string, std::array<std::uint8_t, 3>> palette = {
        {"road", {255, 0, 255}},         {"sidewalk", {75, 0, 75}},
        {"parking", {255, 150, 255}},    {"other-ground", {175, 0, 75}},
        {"building", {255, 200, 0}},     {"car", {100, 150, 245}},
        {"truck", {80, 30, 180}},        {"bicycle", {100, 230, 245}},
        {"motorcycle", {30, 60, 150}},   {"other-vehicle", {100, 80, 250}},
        {"vegetation", {0, 175, 0}},     {"trunk", {135, 60, 0}},
        {"terrain", {150, 240, 80}},     {"person", {255, 30, 30}},
        {"bicyclist", {255, 40, 200}},   {"motorcyclist", {150, 30, 90}},
        {"fence", {255, 120, 50}},       {"pole", {255, 240, 150}},
        {"traffic-sign", {255, 0, 0}}};
    if (internal_id <= 0 || internal_id > num_semantic) return {64, 64, 64};
    const auto& name = names[static_cast<std::size_t>(internal_id - 1)];
    auto it = palette.find(name);
    if (it != palette.end()) return it->second;
    // generic classes get a deterministic pseudo-color
    const std::uint64_t h = mix64(static_cast<std::uint64_t>(internal_id));
    return {static_cast<std::uint8_t>(64 + (h & 127)),
            static_cast<std::uint8_t>(64 + ((h >> 8) & 127)),
            static_cast<std::uint8_t>(64 + ((h >> 16) & 127))};
}

namespace {
// Raw grid I/O only needs whole bytes; the divisibility-by-8 rule on nx/ny
// is a network-geometry constraint enforced by the model config.
void check_io_dims(const GridDims& d) {
    if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0 || d.voxel_size <= 0)
        throw ConfigError("grid dims must be positive");
    if (d.voxels() % 8 != 0)
        throw ConfigError("voxel count must be divisible by 8 for bit packing");
}
} // namespace

OccupancyGrid load_occupancy(std::istream& in, const GridDims& dims) {
    check_io_dims(dims);
    OccupancyGrid g = OccupancyGrid::empty(dims);
    in.read(reinterpret_cast<char*>(g.bits.data()), static_cast<std::streamsize>(g.bits.size()));
    const auto got = in.gcount();
    if (got != static_cast<std::streamsize>(g.bits.size()) || in.peek() != std::istream::traits_type::eof())
        throw FormatError("occupancy stream: expected " + std::to_string(g.bits.size()) +
                          " bytes, got " + std::to_string(got >= 0 ? got : 0) +
                          (in.peek() != std::istream::traits_type::eof() ? "+ (trailing data)" : ""));
    return g;
}

void save_occupancy(std::ostream& out, const OccupancyGrid& g) {
    out.write(reinterpret_cast<const char*>(g.bits.data()), static_cast<std::streamsize>(g.bits.size()));
}

LabelGrid load_labels(std::istream& in, const GridDims& dims,
                      const std::vector<std::pair<std::uint16_t, std::uint16_t>>& raw_to_internal) {
    check_io_dims(dims);
    const std::size_t n = static_cast<std::size_t>(dims.voxels());
    std::vector<std::uint8_t> buf(n * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got != static_cast<std::streamsize>(buf.size()) || in.peek() != std::istream::traits_type::eof())
        throw FormatError("label stream: expected " + std::to_string(buf.size()) + " bytes, got " +
                          std::to_string(got >= 0 ? got : 0));
    std::map<std::uint16_t, std::uint16_t> remap(raw_to_internal.begin(), raw_to_internal.end());
    LabelGrid g = LabelGrid::filled(dims, kUnknownLabel);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t raw = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
        auto it = remap.find(raw);
        g.labels[i] = it != remap.end() ? it->second : kUnknownLabel;
    }
    return g;
}

void save_labels(std::ostream& out, const LabelGrid& g) {
    std::vector<std::uint8_t> buf(g.labels.size() * 2);
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
        buf[2 * i] = static_cast<std::uint8_t>(g.labels[i] & 0xff);
        buf[2 * i + 1] = static_cast<std::uint8_t>(g.labels[i] >> 8);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

LabelGrid majority_pool(const LabelGrid& labels, int factor) {
    if (factor == 1) return labels;
    const auto& d = labels.dims;
    if (d.nx % factor != 0 || d.ny % factor != 0 || d.nz % factor != 0)
        throw GeometryError("majority_pool: dims not divisible by factor " + std::to_string(factor));
    GridDims pd{d.nx / factor, d.ny / factor, d.nz / factor, d.voxel_size * factor};
    LabelGrid out = LabelGrid::filled(pd, kUnknownLabel);
    std::map<std::uint16_t, int> votes;
    for (std::int64_t px = 0; px < pd.nx; ++px)
        for (std::int64_t py = 0; py < pd.ny; ++py)
            for (std::int64_t pz = 0; pz < pd.nz; ++pz) {
                votes.clear();
                for (std::int64_t dx = 0; dx < factor; ++dx)
                    for (std::int64_t dy = 0; dy < factor; ++dy)
                        for (std::int64_t dz = 0; dz < factor; ++dz) {
                            const std::uint16_t l =
                                labels.at(px * factor + dx, py * factor + dy, pz * factor + dz);
                            if (l != kUnknownLabel) ++votes[l];
                        }
                if (votes.empty()) continue; // stays unknown
                std::uint16_t best = 0;
                int best_n = -1;
                for (auto [l, n] : votes) // map order => tie breaks to smallest id
                    if (n > best_n) {
                        best = l;
                        best_n = n;
                    }
                out.at(px, py, pz) = best;
            }
    return out;
}

std::vector<std::int64_t> compute_class_frequencies(const std::vector<const LabelGrid*>& dataset,
                                                    int num_classes) {
    std::vector<std::int64_t> freq(static_cast<std::size_t>(num_classes + 1), 0);
    for (const LabelGrid* g : dataset)
        for (std::uint16_t l : g->labels)
            if (l != kUnknownLabel) {
                if (l > num_classes)
                    throw DataError("class frequency: label " + std::to_string(l) + " out of range");
                ++freq[l];
            }
    return freq;
}

ClassWeights class_weights(const std::vector<std::int64_t>& freq, double eps, scalar w_max) {
    ClassWeights cw;
    cw.freq = freq;
    cw.eps = eps;
    cw.w.reserve(freq.size());
    for (std::int64_t f : freq) {
        const double denom = std::log(static_cast<double>(f) + eps);
        // ln(f+eps) <= 1/w_max would explode or flip sign; clamp those classes
        if (denom < 1.0 / static_cast<double>(w_max))
            cw.w.push_back(w_max);
        else
            cw.w.push_back(static_cast<scalar>(1.0 / denom));
    }
    return cw;
}

void flip_xy(OccupancyGrid& occ, LabelGrid& labels, bool flip_x, bool flip_y) {
    if (!(occ.dims == labels.dims)) throw ShapeError("flip_xy: grid dims mismatch");
    if (!flip_x && !flip_y) return;
    const auto& d = occ.dims;
    OccupancyGrid nocc = OccupancyGrid::empty(d);
    LabelGrid nlab = LabelGrid::filled(d, 0);
    for (std::int64_t x = 0; x < d.nx; ++x) {
        const std::int64_t sx = flip_x ? d.nx - 1 - x : x;
        for (std::int64_t y = 0; y < d.ny; ++y) {
            const std::int64_t sy = flip_y ? d.ny - 1 - y : y;
            for (std::int64_t z = 0; z < d.nz; ++z) {
                if (occ.get(sx, sy, z)) nocc.set(x, y, z);
                nlab.at(x, y, z) = labels.at(sx, sy, z);
            }
        }
    }
    occ = std::move(nocc);
    labels = std::move(nlab);
}

PointCloud subsample_layers(const PointCloud& pc, int keep_every) {
    if (keep_every == 1) return pc;
    PointCloud out;
    out.reserve(pc.size());
    for (const auto& p : pc)
        if (p.ring % keep_every == 0) out.push_back(p);
    return out;
}

OccupancyGrid voxelize(const PointCloud& pc, const std::array<double, 3>& origin,
                       const GridDims& dims) {
    OccupancyGrid g = OccupancyGrid::empty(dims);
    for (const auto& p : pc) {
        const std::int64_t x = static_cast<std::int64_t>(std::floor((p.x - origin[0]) / dims.voxel_size));
        const std::int64_t y = static_cast<std::int64_t>(std::floor((p.y - origin[1]) / dims.voxel_size));
        const std::int64_t z = static_cast<std::int64_t>(std::floor((p.z - origin[2]) / dims.voxel_size));
        if (x < 0 || x >= dims.nx || y < 0 || y >= dims.ny || z < 0 || z >= dims.nz) continue;
        g.set(x, y, z);
    }
    return g;
}

Tensor grid_to_input(const OccupancyGrid& occ) {
    const auto& d = occ.dims;
    Tensor t = Tensor::zeros({1, d.nz, d.nx, d.ny});
    auto& v = t.data();
    for (std::int64_t x = 0; x < d.nx; ++x)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t z = 0; z < d.nz; ++z)
                if (occ.get(x, y, z)) v[static_cast<std::size_t>((z * d.nx + x) * d.ny + y)] = scalar(1);
    return t;
}

} // namespace lmsc
