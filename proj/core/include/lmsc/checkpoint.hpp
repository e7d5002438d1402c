#pragma once

#include <istream>
#include <optional>
#include <ostream>

#include "lmsc/adam.hpp"
#include "lmsc/model.hpp"

namespace lmsc {

// Chunked binary checkpoint: magic, format version, serialized config, then
// per parameter (name, shape, raw 64-bit little-endian scalars), plus an
// optional Adam state chunk.
void checkpoint_save(LMSCNetModel& model, const AdamState* adam, std::ostream& out);

struct Checkpoint {
    LMSCNetModel model;
    std::optional<AdamState> adam;
};

Checkpoint checkpoint_load(std::istream& in);

} // namespace lmsc
