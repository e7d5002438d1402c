#pragma once

#include <ostream>
#include <vector>

#include "lmsc/model.hpp"

namespace lmsc {

struct ScaleBench {
    int level = 0;
    double mean_s = 0, median_s = 0;
    double fps = 0; // 1 / mean latency
    std::int64_t flops = 0;
};

struct BenchReport {
    int warmup = 3, reps = 10;
    std::int64_t params = 0;
    std::vector<ScaleBench> scales;
};

// Times scale-pruned forward passes on a fixed seeded random input.
// Each requested level is benchmarked as its own single-scale selection.
BenchReport benchmark(LMSCNetModel& model, const std::vector<int>& levels, int reps, int warmup,
                      std::uint64_t seed = 7);

void render_bench(std::ostream& out, const BenchReport& report);

} // namespace lmsc
