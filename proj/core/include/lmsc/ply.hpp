#pragma once

#include <ostream>

#include "lmsc/grid.hpp"

namespace lmsc {

// ASCII PLY point export: one colored cube-center vertex per non-free known
// voxel; colors from the class palette.
void export_ply(std::ostream& out, const LabelGrid& labels, const ClassTable& classes);

} // namespace lmsc
