#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lmsc/kvconfig.hpp"
#include "lmsc/train.hpp"

namespace lmsc {

// Exit codes shared by every command: 0 success, 1 config/checkpoint error,
// 2 data error, 3 numerical abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Merged view of model + train config + dataset manifest + output directory.
// Loaded from a flat dotted-key file, then overridden by "key=value" pairs
// from the command line (flag wins).
struct RunConfig {
    KVList kv;
    ModelConfig model;
    TrainConfig train;
    std::string manifest;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 1;
    bool channels_explicit = false;
};

RunConfig resolve_run_config(const std::string& config_path,
                             const std::vector<std::string>& overrides);

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides);
int cmd_eval(const std::string& checkpoint_path, const std::string& manifest_path,
             const std::vector<int>& scales, const std::string& out_dir,
             const std::string& absent_mode = "exclude");
int cmd_infer(const std::string& checkpoint_path, const std::string& occupancy_path, int scale,
              const std::string& out_path);
int cmd_bench(const std::string& checkpoint_path, const std::string& config_path,
              const std::vector<std::string>& overrides, const std::vector<int>& scales, int reps,
              int warmup);
int cmd_make_synthetic(const std::string& out_dir, int count, const GridDims& dims, int num_classes,
                       std::uint64_t seed);
int cmd_export_ply(const std::string& label_path, const GridDims& dims, int num_classes,
                   const std::string& out_path);

} // namespace lmsc
