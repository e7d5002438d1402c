#include "lmsc/ply.hpp"

#include <iomanip>

namespace lmsc {

void export_ply(std::ostream& out, const LabelGrid& labels, const ClassTable& classes) {
    const auto& d = labels.dims;
    std::int64_t n = 0;
    for (std::uint16_t l : labels.labels)
        if (l != 0 && l != kUnknownLabel) ++n;

    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << n << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    out << std::setprecision(9);
    for (std::int64_t x = 0; x < d.nx; ++x)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t z = 0; z < d.nz; ++z) {
                const std::uint16_t l = labels.at(x, y, z);
                if (l == 0 || l == kUnknownLabel) continue;
                const auto c = classes.color(static_cast<int>(l));
                out << (static_cast<double>(x) + 0.5) * d.voxel_size << " "
                    << (static_cast<double>(y) + 0.5) * d.voxel_size << " "
                    << (static_cast<double>(z) + 0.5) * d.voxel_size << " " << int(c[0]) << " "
                    << int(c[1]) << " " << int(c[2]) << "\n";
            }
}

} // namespace lmsc
