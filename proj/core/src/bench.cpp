#include "lmsc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <random>

namespace lmsc {

BenchReport benchmark(LMSCNetModel& model, const std::vector<int>& levels, int reps, int warmup,
                      std::uint64_t seed) {
    if (reps < 10) throw ConfigError("benchmark: need at least 10 repetitions");
    if (warmup < 3) throw ConfigError("benchmark: need at least 3 warmup runs");

    const auto& g = model.config.grid;
    Tensor input = Tensor::zeros({1, g.nz, g.nx, g.ny});
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution occ(0.067); // sparse input, dataset-like density
    for (auto& v : input.data()) v = occ(rng) ? scalar(1) : scalar(0);

    BenchReport rep;
    rep.warmup = warmup;
    rep.reps = reps;
    rep.params = count_params(model);

    NoGradGuard ng;
    for (int l : levels) {
        const ScaleSelection sel{l};
        for (int i = 0; i < warmup; ++i) forward(model, input, sel);
        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(reps));
        for (int i = 0; i < reps; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            forward(model, input, sel);
            times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        ScaleBench sb;
        sb.level = l;
        double s = 0;
        for (double t : times) s += t;
        sb.mean_s = s / static_cast<double>(times.size());
        std::sort(times.begin(), times.end());
        sb.median_s = times[times.size() / 2];
        sb.fps = 1.0 / sb.mean_s;
        sb.flops = count_flops(model.config, sel);
        rep.scales.push_back(sb);
    }
    return rep;
}

void render_bench(std::ostream& out, const BenchReport& report) {
    out << "params = " << report.params << "  (reps = " << report.reps
        << ", warmup = " << report.warmup << ")\n";
    out << std::fixed;
    for (const auto& s : report.scales)
        out << "  scale 1:" << (1 << s.level) << "  flops = " << s.flops
            << "  mean_ms = " << std::setprecision(3) << 1e3 * s.mean_s
            << "  median_ms = " << 1e3 * s.median_s << "  fps = " << std::setprecision(2) << s.fps
            << "\n";
}

} // namespace lmsc
