#include "lmsc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

#include "lmsc/checkpoint.hpp"

namespace lmsc {

void TrainConfig::validate() const {
    if (lr0 <= 0) throw ConfigError("train: lr0 must be positive");
    if (lr_decay <= 0) throw ConfigError("train: lr decay must be positive");
    if (batch < 1) throw ConfigError("train: batch must be >= 1");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    bool any = false;
    for (scalar a : alpha) {
        if (a < 0) throw ConfigError("train: level weights must be >= 0");
        any = any || a > 0;
    }
    if (!any && !singlescale) throw ConfigError("train: at least one level weight must be positive");
}

TrainResult train(LMSCNetModel& model, const std::vector<Sample>& data, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* log_stream) {
    cfg.validate();
    if (data.empty()) throw DataError("train: dataset is empty");
    if (static_cast<int>(data.size()) < cfg.batch)
        throw ConfigError("train: dataset smaller than one batch (incomplete batches are dropped)");

    const std::array<scalar, 4> alpha =
        cfg.singlescale ? std::array<scalar, 4>{1, 0, 0, 0} : cfg.alpha;
    ScaleSelection scales;
    for (int l = 0; l < 4; ++l)
        if (alpha[static_cast<std::size_t>(l)] > 0) scales.insert(l);

    auto freq = compute_class_frequencies(
        [&] {
            std::vector<const LabelGrid*> v;
            for (const auto& s : data) v.push_back(&s.labels);
            return v;
        }(),
        model.config.num_classes);
    const ClassWeights cw = class_weights(freq);

    auto params = model.parameters();
    AdamState adam = AdamState::init(params, cfg.beta1, cfg.beta2, cfg.adam_eps);

    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    auto emit_checkpoint = [&](const std::string& name) {
        if (out_dir.empty()) return;
        std::ofstream out(out_dir / name, std::ios::binary);
        checkpoint_save(model, &adam, out);
    };

    TrainResult result;
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = cfg.lr0 * std::pow(cfg.lr_decay, epoch);

        std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0;
        int batches = 0;
        const std::size_t nb = data.size() / static_cast<std::size_t>(cfg.batch);
        for (std::size_t bi = 0; bi < nb; ++bi) {
            std::vector<Tensor> inputs;
            std::vector<LabelGrid> gts;
            for (int k = 0; k < cfg.batch; ++k) {
                const std::size_t idx = order[bi * static_cast<std::size_t>(cfg.batch) +
                                              static_cast<std::size_t>(k)];
                OccupancyGrid occ = data[idx].occ;
                LabelGrid lab = data[idx].labels;
                if (cfg.augment) {
                    std::mt19937_64 aug_rng(
                        derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 0x10000u,
                                    static_cast<std::uint64_t>(idx)));
                    const bool fx = (aug_rng() & 1) != 0;
                    const bool fy = (aug_rng() & 1) != 0;
                    flip_xy(occ, lab, fx, fy);
                }
                inputs.push_back(grid_to_input(occ));
                gts.push_back(std::move(lab));
            }
            Tensor input = inputs.size() == 1 ? inputs[0] : concat(inputs, 0);
            std::vector<const LabelGrid*> gt_ptrs;
            for (const auto& g : gts) gt_ptrs.push_back(&g);

            auto outs = forward(model, input, scales);
            std::vector<Tensor> level_losses(4);
            for (int l : scales)
                level_losses[static_cast<std::size_t>(l)] = level_loss(outs.at(l), gt_ptrs, cw.w, l);
            Tensor loss = total_loss(level_losses, alpha);
            const double lv = static_cast<double>(loss.item());
            if (!std::isfinite(lv))
                throw NumericalError("non-finite loss " + std::to_string(lv) + " at epoch " +
                                     std::to_string(epoch) + " batch " + std::to_string(bi));
            model.zero_grad();
            backward(loss);
            adam_step(params, adam, static_cast<scalar>(lr));
            loss_sum += lv;
            ++batches;
        }

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        EpochLog el{epoch, batches ? loss_sum / batches : 0.0, lr, wall};
        result.log.push_back(el);
        if (log_stream)
            (*log_stream) << "epoch = " << el.epoch << "  loss = " << std::setprecision(8)
                          << el.mean_loss << "  lr = " << el.lr << "  wall_s = " << std::setprecision(3)
                          << el.wall_s << "\n";
        emit_checkpoint("ckpt-epoch-" + std::to_string(epoch) + ".lmsc");
    }
    emit_checkpoint("final.lmsc");
    return result;
}

} // namespace lmsc
