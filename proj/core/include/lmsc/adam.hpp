#pragma once

#include <cstdint>
#include <vector>

#include "lmsc/tensor.hpp"

namespace lmsc {

// Per-parameter first/second moment buffers; step counts completed updates.
struct AdamState {
    std::int64_t step = 0;
    scalar beta1 = scalar(0.9);
    scalar beta2 = scalar(0.999);
    scalar eps = scalar(1e-8);
    std::vector<std::vector<scalar>> m;
    std::vector<std::vector<scalar>> v;

    static AdamState init(const std::vector<Parameter>& params,
                          scalar beta1 = scalar(0.9), scalar beta2 = scalar(0.999),
                          scalar eps = scalar(1e-8));
};

// Standard Adam update with bias correction; consumes the .grad buffers of
// the parameters and writes the new values in place.
void adam_step(std::vector<Parameter>& params, AdamState& state, scalar lr);

} // namespace lmsc
