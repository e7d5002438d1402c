#include "lmsc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lmsc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SyntheticScene make_scene(const GridDims& dims, int num_classes, std::uint64_t seed,
                          int rings, int azimuth_steps) {
    dims.validate();
    if (num_classes < 1) throw ConfigError("make_scene: need at least one semantic class");
    std::mt19937_64 rng(seed);
    auto uni = [&rng](std::int64_t lo, std::int64_t hi) { // inclusive
        return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };

    const std::uint16_t ground_id = 1;
    const std::uint16_t patch_id = static_cast<std::uint16_t>(std::min(2, num_classes));
    const std::uint16_t box_id_a = static_cast<std::uint16_t>(std::min(3, num_classes));
    const std::uint16_t box_id_b = static_cast<std::uint16_t>(std::min(4, num_classes));

    // dense scene description: 0 free, otherwise a semantic id
    LabelGrid scene = LabelGrid::filled(dims, 0);
    const std::int64_t zg = std::max<std::int64_t>(1, dims.nz / 8);
    for (std::int64_t x = 0; x < dims.nx; ++x)
        for (std::int64_t y = 0; y < dims.ny; ++y)
            for (std::int64_t z = 0; z < zg; ++z) scene.at(x, y, z) = ground_id;

    const std::int64_t patches = uni(2, 4);
    for (std::int64_t i = 0; i < patches; ++i) {
        const std::int64_t w = uni(dims.nx / 8, dims.nx / 3), h = uni(dims.ny / 8, dims.ny / 3);
        const std::int64_t x0 = uni(0, dims.nx - w), y0 = uni(0, dims.ny - h);
        for (std::int64_t x = x0; x < x0 + w; ++x)
            for (std::int64_t y = y0; y < y0 + h; ++y)
                for (std::int64_t z = 0; z < zg; ++z) scene.at(x, y, z) = patch_id;
    }

    const std::int64_t boxes = uni(4, 8);
    for (std::int64_t i = 0; i < boxes; ++i) {
        const bool tall = (rng() & 1) != 0;
        const std::uint16_t id = tall ? box_id_a : box_id_b;
        const std::int64_t w = uni(2, std::max<std::int64_t>(3, dims.nx / 6));
        const std::int64_t h = uni(2, std::max<std::int64_t>(3, dims.ny / 6));
        const std::int64_t bh = tall ? uni(zg + 1, std::max(zg + 2, 3 * dims.nz / 4))
                                     : uni(1, std::max<std::int64_t>(2, dims.nz / 8));
        const std::int64_t x0 = uni(0, dims.nx - w), y0 = uni(0, dims.ny - h);
        for (std::int64_t x = x0; x < x0 + w; ++x)
            for (std::int64_t y = y0; y < y0 + h; ++y)
                for (std::int64_t z = zg; z < std::min(dims.nz, zg + bh); ++z) scene.at(x, y, z) = id;
    }

    SyntheticScene out;
    out.occ = OccupancyGrid::empty(dims);
    out.labels = LabelGrid::filled(dims, kUnknownLabel);

    const double vs = dims.voxel_size;
    const double sx = (static_cast<double>(dims.nx) / 2.0 +
                       static_cast<double>(uni(-dims.nx / 8, dims.nx / 8))) * vs;
    const double sy = (static_cast<double>(dims.ny) / 2.0 +
                       static_cast<double>(uni(-dims.ny / 8, dims.ny / 8))) * vs;
    const double sz = (static_cast<double>(std::min(dims.nz - 1, zg + 2)) + 0.5) * vs;
    out.sensor = {sx, sy, sz};

    const double max_range = vs * std::sqrt(static_cast<double>(dims.nx * dims.nx + dims.ny * dims.ny +
                                                                dims.nz * dims.nz));
    const double elev_lo = -25.0 * kPi / 180.0, elev_hi = 3.0 * kPi / 180.0;
    const double step = 0.3 * vs;

    for (int ring = 0; ring < rings; ++ring) {
        const double elev = elev_lo + (elev_hi - elev_lo) * static_cast<double>(ring) /
                                          static_cast<double>(std::max(1, rings - 1));
        const double ce = std::cos(elev), se = std::sin(elev);
        for (int a = 0; a < azimuth_steps; ++a) {
            const double az = 2.0 * kPi * static_cast<double>(a) / static_cast<double>(azimuth_steps);
            const double dx = ce * std::cos(az), dy = ce * std::sin(az), dz = se;
            for (double t = 0.75 * vs; t < max_range; t += step) {
                const double px = sx + t * dx, py = sy + t * dy, pz = sz + t * dz;
                const std::int64_t x = static_cast<std::int64_t>(std::floor(px / vs));
                const std::int64_t y = static_cast<std::int64_t>(std::floor(py / vs));
                const std::int64_t z = static_cast<std::int64_t>(std::floor(pz / vs));
                if (x < 0 || x >= dims.nx || y < 0 || y >= dims.ny || z < 0 || z >= dims.nz) break;
                const std::uint16_t lab = scene.at(x, y, z);
                if (lab == 0) {
                    out.labels.at(x, y, z) = 0; // observed free space
                    continue;
                }
                out.labels.at(x, y, z) = lab;
                out.occ.set(x, y, z);
                out.cloud.push_back({px, py, pz, ring});
                break;
            }
        }
    }
    return out;
}

} // namespace lmsc
