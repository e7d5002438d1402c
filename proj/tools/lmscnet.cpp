// Command-line front end: train/eval/infer/bench plus synthetic data
// generation and PLY export. Exit codes: 0 ok, 1 config/checkpoint error,
// 2 data error, 3 numerical abort.

#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmsc/commands.hpp"

namespace {

// Fold leftover "--dotted.key value" tokens into key=value overrides so any
// config key can be overridden directly (e.g. `--train.epochs 1`).
std::vector<std::string> fold_extras(std::vector<std::string> extras,
                                     std::vector<std::string> overrides) {
    // CLI11 yields remaining() in reverse-ish order on some paths; keep as-is
    for (std::size_t i = 0; i < extras.size(); ++i) {
        std::string key = extras[i];
        if (key.rfind("--", 0) != 0)
            throw lmsc::ConfigError("unexpected argument '" + key + "'");
        key = key.substr(2);
        const auto eq = key.find('=');
        if (eq != std::string::npos) {
            overrides.push_back(key);
        } else {
            if (i + 1 >= extras.size())
                throw lmsc::ConfigError("flag --" + key + " is missing a value");
            overrides.push_back(key + "=" + extras[++i]);
        }
    }
    return overrides;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LMSCNet: multiscale semantic scene completion from sparse voxelized LiDAR"};
    app.require_subcommand(1);

    std::string config_path, checkpoint, manifest, occ_path, label_path, out_path, out_dir = "out";
    std::string absent_mode = "exclude";
    std::vector<std::string> overrides;
    std::vector<int> scales;
    int scale = 0, reps = 50, warmup = 3, count = 4, num_classes = 19;
    std::int64_t nx = 64, ny = 64, nz = 8;
    double voxel_size = 0.2;
    std::uint64_t seed = 1;

    auto* train = app.add_subcommand("train", "train a model on a dataset manifest");
    train->add_option("--config", config_path, "run config file (flat dotted keys)");
    train->add_option("--set", overrides, "override key=value (repeatable)");
    train->allow_extras();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint, write metric reports");
    eval->add_option("--checkpoint", checkpoint)->required();
    eval->add_option("--manifest", manifest)->required();
    eval->add_option("--scales", scales, "levels to evaluate (default 0)")->delimiter(',');
    eval->add_option("--out", out_dir, "output directory");
    eval->add_option("--iou-absent", absent_mode, "exclude|zero for classes absent everywhere");

    auto* infer = app.add_subcommand("infer", "predict labels for one occupancy file");
    infer->add_option("--checkpoint", checkpoint)->required();
    infer->add_option("--input", occ_path, "occupancy bitset file")->required();
    infer->add_option("--scale", scale, "output level (0..3)");
    infer->add_option("--out", out_path, "output label file")->required();

    auto* bench = app.add_subcommand("bench", "latency/FLOP/param report per scale");
    bench->add_option("--checkpoint", checkpoint);
    bench->add_option("--config", config_path);
    bench->add_option("--set", overrides);
    bench->add_option("--scales", scales)->delimiter(',');
    bench->add_option("--reps", reps, "timed repetitions (>= 10)");
    bench->add_option("--warmup", warmup, "warmup runs (>= 3)");
    bench->allow_extras();

    auto* synth = app.add_subcommand("make-synthetic", "generate a procedural desk-scale dataset");
    synth->add_option("--out", out_dir)->required();
    synth->add_option("--count", count, "number of scenes");
    synth->add_option("--nx", nx);
    synth->add_option("--ny", ny);
    synth->add_option("--nz", nz);
    synth->add_option("--voxel-size", voxel_size);
    synth->add_option("--classes", num_classes, "number of semantic classes");
    synth->add_option("--seed", seed);

    auto* ply = app.add_subcommand("export-ply", "label file -> colored ASCII PLY point set");
    ply->add_option("--labels", label_path)->required();
    ply->add_option("--nx", nx);
    ply->add_option("--ny", ny);
    ply->add_option("--nz", nz);
    ply->add_option("--voxel-size", voxel_size);
    ply->add_option("--classes", num_classes);
    ply->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? lmsc::kExitOk : lmsc::kExitConfig;
    }

    try {
        if (train->parsed())
            return lmsc::cmd_train(config_path, fold_extras(train->remaining(), overrides));
        if (eval->parsed())
            return lmsc::cmd_eval(checkpoint, manifest, scales, out_dir, absent_mode);
        if (infer->parsed()) return lmsc::cmd_infer(checkpoint, occ_path, scale, out_path);
        if (bench->parsed())
            return lmsc::cmd_bench(checkpoint, config_path, fold_extras(bench->remaining(), overrides),
                                   scales, reps, warmup);
        if (synth->parsed())
            return lmsc::cmd_make_synthetic(out_dir, count, {nx, ny, nz, voxel_size}, num_classes,
                                            seed);
        if (ply->parsed())
            return lmsc::cmd_export_ply(label_path, {nx, ny, nz, voxel_size}, num_classes, out_path);
    } catch (const lmsc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return lmsc::kExitConfig;
    }
    return lmsc::kExitConfig;
}
