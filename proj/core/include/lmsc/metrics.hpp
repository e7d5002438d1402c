#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "lmsc/dataset.hpp"
#include "lmsc/grid.hpp"
#include "lmsc/kvconfig.hpp"
#include "lmsc/model.hpp"

namespace lmsc {

// (N+1)x(N+1) prediction-by-truth counts over unknown-masked voxels.
struct ConfusionMatrix {
    int num_logits = 0;
    std::vector<std::uint64_t> counts; // pred * num_logits + truth

    explicit ConfusionMatrix(int num_logits_ = 0)
        : num_logits(num_logits_),
          counts(static_cast<std::size_t>(num_logits_) * static_cast<std::size_t>(num_logits_), 0) {}
    void add(int pred, int truth) {
        counts[static_cast<std::size_t>(pred) * num_logits + static_cast<std::size_t>(truth)] += 1;
    }
    std::uint64_t at(int pred, int truth) const {
        return counts[static_cast<std::size_t>(pred) * num_logits + static_cast<std::size_t>(truth)];
    }
    std::uint64_t total() const;
    void merge(const ConfusionMatrix& other);
};

// How classes absent from both prediction and truth enter the mIoU mean.
enum class AbsentIoU { exclude, zero };

struct ScaleReport {
    int level = 0;
    ConfusionMatrix confusion;
    std::vector<std::optional<double>> class_iou; // index 0 -> internal id 1
    double miou = 0;
    double completion_iou = 0, completion_precision = 0, completion_recall = 0;
};

struct MetricsReport {
    std::vector<ScaleReport> scales;
};

// Argmax over the class axis (ties to the smallest id) of sample b.
LabelGrid predict_labels(const Tensor& logits, std::int64_t b, double voxel_size);

void accumulate_confusion(ConfusionMatrix& cm, const LabelGrid& pred, const LabelGrid& truth);

ScaleReport summarize_confusion(int level, const ConfusionMatrix& cm,
                                AbsentIoU absent = AbsentIoU::exclude);

MetricsReport evaluate(LMSCNetModel& model, const std::vector<Sample>& data,
                       const ScaleSelection& scales, AbsentIoU absent = AbsentIoU::exclude);

// Human-readable table, values as percentages with 2 decimals.
void render_metrics(std::ostream& out, const MetricsReport& report, const ClassTable& classes);

// Machine-readable twin.
KVList metrics_to_kv(const MetricsReport& report, const ClassTable& classes);

} // namespace lmsc
