#include "lmsc/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "lmsc/ops.hpp"

namespace lmsc {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.num_logits != num_logits) throw ShapeError("confusion merge: class count mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

LabelGrid predict_labels(const Tensor& logits, std::int64_t b, double voxel_size) {
    if (logits.ndim() != 5) throw ShapeError("predict_labels: logits must be [B,C,X,Y,Z]");
    const std::int64_t C = logits.dim(1);
    const std::int64_t X = logits.dim(2), Y = logits.dim(3), Z = logits.dim(4);
    const std::int64_t S = X * Y * Z;
    GridDims d{X, Y, Z, voxel_size};
    LabelGrid out;
    out.dims = d;
    out.labels.resize(static_cast<std::size_t>(S));
    const scalar* x = logits.data().data() + b * C * S;
    for (std::int64_t s = 0; s < S; ++s) {
        int best = 0;
        scalar bv = x[s];
        for (std::int64_t c = 1; c < C; ++c)
            if (x[c * S + s] > bv) { // strict: ties keep the smaller id
                bv = x[c * S + s];
                best = static_cast<int>(c);
            }
        out.labels[static_cast<std::size_t>(s)] = static_cast<std::uint16_t>(best);
    }
    return out;
}

void accumulate_confusion(ConfusionMatrix& cm, const LabelGrid& pred, const LabelGrid& truth) {
    if (pred.labels.size() != truth.labels.size())
        throw ShapeError("accumulate_confusion: grid size mismatch");
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        const std::uint16_t t = truth.labels[i];
        if (t == kUnknownLabel) continue;
        cm.add(pred.labels[i], t);
    }
}

ScaleReport summarize_confusion(int level, const ConfusionMatrix& cm, AbsentIoU absent) {
    ScaleReport r;
    r.level = level;
    r.confusion = cm;
    const int C = cm.num_logits;

    double iou_sum = 0;
    int iou_n = 0;
    for (int c = 1; c < C; ++c) {
        std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (int o = 0; o < C; ++o) {
            if (o != c) {
                fp += cm.at(c, o);
                fn += cm.at(o, c);
            }
        }
        const std::uint64_t denom = tp + fp + fn;
        if (denom == 0) {
            r.class_iou.push_back(std::nullopt);
            if (absent == AbsentIoU::zero) {
                iou_sum += 0;
                ++iou_n;
            }
        } else {
            const double iou = static_cast<double>(tp) / static_cast<double>(denom);
            r.class_iou.push_back(iou);
            iou_sum += iou;
            ++iou_n;
        }
    }
    r.miou = iou_n > 0 ? iou_sum / iou_n : 0.0;

    // binary free/occupied setting: occupied = any non-free class
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (int p = 0; p < C; ++p)
        for (int t = 0; t < C; ++t) {
            const bool po = p != 0, to = t != 0;
            if (po && to)
                tp += cm.at(p, t);
            else if (po && !to)
                fp += cm.at(p, t);
            else if (!po && to)
                fn += cm.at(p, t);
        }
    r.completion_iou = (tp + fp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fp + fn) : 0.0;
    r.completion_precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.completion_recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return r;
}

MetricsReport evaluate(LMSCNetModel& model, const std::vector<Sample>& data,
                       const ScaleSelection& scales, AbsentIoU absent) {
    NoGradGuard ng;
    const int C = model.config.num_logits();
    std::map<int, ConfusionMatrix> cms;
    for (int l : scales) cms.emplace(l, ConfusionMatrix(C));

    for (const auto& s : data) {
        Tensor input = grid_to_input(s.occ);
        auto outs = forward(model, input, scales);
        for (int l : scales) {
            const LabelGrid pooled = majority_pool(s.labels, 1 << l);
            const LabelGrid pred =
                predict_labels(outs.at(l), 0, s.occ.dims.voxel_size * (1 << l));
            accumulate_confusion(cms.at(l), pred, pooled);
        }
    }
    MetricsReport rep;
    for (int l : scales) rep.scales.push_back(summarize_confusion(l, cms.at(l), absent));
    return rep;
}

void render_metrics(std::ostream& out, const MetricsReport& report, const ClassTable& classes) {
    out << std::fixed << std::setprecision(2);
    for (const auto& s : report.scales) {
        out << "scale 1:" << (1 << s.level) << "  (known voxels: " << s.confusion.total() << ")\n";
        out << "  completion  IoU " << 100.0 * s.completion_iou << "  P " << 100.0 * s.completion_precision
            << "  R " << 100.0 * s.completion_recall << "\n";
        out << "  mIoU " << 100.0 * s.miou << "\n";
        for (std::size_t c = 0; c < s.class_iou.size(); ++c) {
            const std::string name =
                c < classes.names.size() ? classes.names[c] : "class-" + std::to_string(c + 1);
            out << "    " << std::setw(14) << name << "  ";
            if (s.class_iou[c])
                out << 100.0 * *s.class_iou[c];
            else
                out << "--";
            out << "\n";
        }
    }
}

KVList metrics_to_kv(const MetricsReport& report, const ClassTable& classes) {
    KVList kv;
    auto num = [](double v) {
        std::ostringstream o;
        o << std::setprecision(17) << v;
        return o.str();
    };
    for (const auto& s : report.scales) {
        const std::string p = "scale" + std::to_string(s.level) + ".";
        kv.set(p + "known_voxels", std::to_string(s.confusion.total()));
        kv.set(p + "completion.iou", num(s.completion_iou));
        kv.set(p + "completion.precision", num(s.completion_precision));
        kv.set(p + "completion.recall", num(s.completion_recall));
        kv.set(p + "miou", num(s.miou));
        for (std::size_t c = 0; c < s.class_iou.size(); ++c) {
            const std::string name =
                c < classes.names.size() ? classes.names[c] : "class-" + std::to_string(c + 1);
            kv.set(p + "iou." + name, s.class_iou[c] ? num(*s.class_iou[c]) : "undefined");
        }
    }
    return kv;
}

} // namespace lmsc
