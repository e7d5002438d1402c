#pragma once

#include <array>
#include <filesystem>
#include <ostream>

#include "lmsc/adam.hpp"
#include "lmsc/dataset.hpp"
#include "lmsc/loss.hpp"
#include "lmsc/model.hpp"

namespace lmsc {

struct TrainConfig {
    double lr0 = 0.001;
    double lr_decay = 0.98; // lr = lr0 * lr_decay^epoch
    scalar beta1 = scalar(0.9);
    scalar beta2 = scalar(0.999);
    scalar adam_eps = scalar(1e-8);
    int batch = 4;
    int epochs = 80;
    std::array<scalar, 4> alpha = {scalar(1), scalar(1), scalar(1), scalar(1)};
    bool singlescale = false;
    bool augment = true; // independent 50% x/y flips per sample
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0;
    double lr = 0;
    double wall_s = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
};

// Shuffled, flip-augmented epochs over the dataset; Adam with the decayed
// learning-rate schedule. Emits a checkpoint per epoch and at the end when
// out_dir is non-empty; log lines go to log_stream when given.
TrainResult train(LMSCNetModel& model, const std::vector<Sample>& data, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir = {}, std::ostream* log_stream = nullptr);

} // namespace lmsc
