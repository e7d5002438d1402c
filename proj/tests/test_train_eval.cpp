#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "lmsc/loss.hpp"
#include "lmsc/metrics.hpp"
#include "lmsc/train.hpp"
#include "oracles.hpp"

using namespace lmsc;

namespace {
GridDims dims8() {
    GridDims d;
    d.nx = d.ny = d.nz = 8;
    d.voxel_size = 0.2;
    return d;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.grid = dims8();
    cfg.channels = {8, 16, 24, 32};
    cfg.head_width = 2;
    cfg.init_seed = 3;
    return cfg;
}

// Logits tensor [1, C, nx, ny, nz] with a fixed margin on the labeled class.
Tensor one_hot_logits(const LabelGrid& gt, int num_logits, scalar margin) {
    const auto& d = gt.dims;
    Tensor t = Tensor::zeros({1, num_logits, d.nx, d.ny, d.nz});
    const std::int64_t S = d.voxels();
    for (std::int64_t v = 0; v < S; ++v) {
        const std::uint16_t l = gt.labels[static_cast<std::size_t>(v)];
        if (l == kUnknownLabel) continue;
        t.data()[static_cast<std::size_t>(l * S + v)] = margin;
    }
    return t;
}
} // namespace

TEST_CASE("level loss saturates on confident correct logits") {
    GridDims d = dims8();
    LabelGrid gt = LabelGrid::filled(d, 0);
    gt.at(1, 1, 1) = 1;
    gt.at(2, 2, 2) = 2;
    std::vector<scalar> w = {1, 1, 1};
    Tensor logits = one_hot_logits(gt, 3, scalar(30));
    Tensor loss = level_loss(logits, {&gt}, w, 0);
    CHECK(loss.item() < 1e-3);
}

TEST_CASE("level loss is zero on fully-unknown ground truth") {
    GridDims d = dims8();
    LabelGrid gt = LabelGrid::filled(d, kUnknownLabel);
    std::mt19937_64 rng(1);
    Tensor logits = oracle::random_tensor({1, 3, d.nx, d.ny, d.nz}, rng);
    CHECK(level_loss(logits, {&gt}, {1, 1, 1}, 0).item() == 0.0);
}

TEST_CASE("level loss matches the direct softmax+NLL formula") {
    GridDims d = dims8();
    LabelGrid gt = LabelGrid::filled(d, kUnknownLabel);
    gt.at(0, 0, 0) = 0;
    gt.at(0, 0, 1) = 2;
    gt.at(3, 4, 5) = 1;
    gt.at(7, 7, 7) = 2;
    std::vector<scalar> w = {0.9, 1.7, 2.4};
    std::mt19937_64 rng(2);
    Tensor logits = oracle::random_tensor({1, 3, d.nx, d.ny, d.nz}, rng);

    std::vector<std::uint16_t> labels(static_cast<std::size_t>(d.voxels()), 0);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(d.voxels()), 0);
    for (std::int64_t v = 0; v < d.voxels(); ++v) {
        const std::uint16_t l = gt.labels[static_cast<std::size_t>(v)];
        if (l == kUnknownLabel) continue;
        labels[static_cast<std::size_t>(v)] = l;
        mask[static_cast<std::size_t>(v)] = 1;
    }
    const double ref = oracle::masked_nll(logits.data(), 3, d.voxels(), labels, w, mask);
    CHECK(std::abs(level_loss(logits, {&gt}, w, 0).item() - ref) < 1e-10);
}

TEST_CASE("level loss pools ground truth before masking") {
    GridDims d = dims8();
    LabelGrid gt = LabelGrid::filled(d, kUnknownLabel);
    // One known block at origin: majority label 1.
    for (std::int64_t x = 0; x < 2; ++x)
        for (std::int64_t y = 0; y < 2; ++y)
            for (std::int64_t z = 0; z < 2; ++z) gt.at(x, y, z) = 1;
    Tensor logits = Tensor::zeros({1, 3, 4, 4, 4}); // level-1 shape
    Tensor loss = level_loss(logits, {&gt}, {1, 1, 1}, 1);
    // Exactly one masked voxel with uniform logits: loss = ln 3.
    CHECK(loss.item() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("total loss combines levels by alpha") {
    Tensor a = Tensor::from_data({1}, {1.0});
    Tensor b = Tensor::from_data({1}, {2.0});
    Tensor c = Tensor::from_data({1}, {3.0});
    Tensor d = Tensor::from_data({1}, {4.0});
    std::vector<Tensor> losses = {a, b, c, d};
    CHECK(total_loss(losses, {1, 1, 1, 1}).item() == doctest::Approx(10.0));
    CHECK(total_loss(losses, {1, 0, 0, 0}).item() == doctest::Approx(1.0));
    CHECK(total_loss(losses, {0.5, 0, 2, 0}).item() == doctest::Approx(6.5));
    // The singlescale flag overrides alpha with (1,0,0,0).
    CHECK(total_loss(losses, {1, 1, 1, 1}, true).item() == doctest::Approx(1.0));
}

TEST_CASE("total loss gradient is the sum of per-level gradients") {
    std::mt19937_64 rng(4);
    Tensor x = oracle::random_tensor({1, 2, 2, 2, 2}, rng);
    x.set_trainable();
    GridDims d;
    d.nx = d.ny = 8;
    d.nz = 8;
    // Use raw cross-entropy terms as the "levels" to keep the graph tiny.
    std::vector<std::uint16_t> labels(8, 1);
    std::vector<std::uint8_t> mask(8, 1);
    auto make_losses = [&] {
        std::vector<Tensor> v;
        v.push_back(weighted_masked_cross_entropy(x, labels, {1, 2}, mask));
        v.push_back(weighted_masked_cross_entropy(x, labels, {2, 1}, mask));
        v.push_back(scale(sum(relu(x)), scalar(0.1)));
        v.push_back(scale(sum(x), scalar(-0.05)));
        return v;
    };
    auto r = oracle::check_gradients(
        [&] { return total_loss(make_losses(), {1.0, 0.5, 2.0, 1.0}); }, {x});
    CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("training follows the decayed learning-rate schedule") {
    ModelConfig mc = tiny_config();
    LMSCNetModel model = build(mc);

    std::mt19937_64 rng(5);
    Sample s;
    s.occ = OccupancyGrid::empty(mc.grid);
    s.labels = LabelGrid::filled(mc.grid, 0);
    std::uniform_int_distribution<int> coin(0, 3);
    for (std::int64_t x = 0; x < 8; ++x)
        for (std::int64_t y = 0; y < 8; ++y)
            for (std::int64_t z = 0; z < 8; ++z)
                if (coin(rng) == 0) {
                    s.occ.set(x, y, z);
                    s.labels.at(x, y, z) = static_cast<std::uint16_t>(1 + (x + y) % 2);
                }

    TrainConfig tc;
    tc.batch = 1;
    tc.epochs = 11;
    tc.augment = false;
    tc.seed = 9;
    const auto out_dir = std::filesystem::temp_directory_path() / "lmsc-test-lr";
    std::filesystem::remove_all(out_dir);
    TrainResult r = train(model, {s}, tc, out_dir);
    REQUIRE(r.log.size() == 11);
    CHECK(r.log[0].lr == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(r.log[10].lr == doctest::Approx(0.001 * std::pow(0.98, 10)).epsilon(1e-12));
    CHECK(std::abs(r.log[10].lr - 8.17e-4) < 1e-6);
    CHECK(std::filesystem::exists(out_dir / "final.lmsc"));
    CHECK(std::filesystem::exists(out_dir / "ckpt-epoch-0.lmsc"));
    for (const auto& e : r.log) CHECK(std::isfinite(e.mean_loss));
    std::filesystem::remove_all(out_dir);
}

TEST_CASE("training config validation") {
    TrainConfig tc;
    tc.lr0 = 0;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
    tc = TrainConfig{};
    tc.alpha = {0, 0, 0, 0};
    CHECK_THROWS_AS(tc.validate(), ConfigError);
    tc = TrainConfig{};
    tc.alpha = {1, -1, 0, 0};
    CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("completion metrics on the 10-true/6-hit/2-false case") {
    GridDims d = dims8();
    LabelGrid truth = LabelGrid::filled(d, 0);
    LabelGrid pred = LabelGrid::filled(d, 0);
    // 10 occupied ground-truth voxels, the first 6 predicted correctly.
    for (int i = 0; i < 10; ++i) {
        truth.at(i % 8, i / 8, 0) = 1;
        if (i < 6) pred.at(i % 8, i / 8, 0) = 1;
    }
    // 2 false occupied predictions elsewhere.
    pred.at(0, 7, 7) = 1;
    pred.at(1, 7, 7) = 1;

    ConfusionMatrix cm(2);
    accumulate_confusion(cm, pred, truth);
    ScaleReport rep = summarize_confusion(0, cm);
    CHECK(rep.completion_iou == 0.5);
    CHECK(rep.completion_precision == 0.75);
    CHECK(rep.completion_recall == 0.6);
    CHECK(cm.total() == static_cast<std::uint64_t>(d.voxels()));

    // Perfect prediction: every defined score is 1.
    ConfusionMatrix pc(2);
    accumulate_confusion(pc, truth, truth);
    ScaleReport perfect = summarize_confusion(0, pc);
    CHECK(perfect.completion_iou == 1.0);
    CHECK(perfect.completion_precision == 1.0);
    CHECK(perfect.completion_recall == 1.0);
    CHECK(perfect.miou == 1.0);
}

TEST_CASE("all-free prediction uses the zero-precision convention") {
    GridDims d = dims8();
    LabelGrid truth = LabelGrid::filled(d, 0);
    truth.at(0, 0, 0) = 1;
    LabelGrid pred = LabelGrid::filled(d, 0);
    ConfusionMatrix cm(2);
    accumulate_confusion(cm, pred, truth);
    ScaleReport rep = summarize_confusion(0, cm);
    CHECK(rep.completion_precision == 0.0);
    CHECK(rep.completion_recall == 0.0);
    CHECK(rep.completion_iou == 0.0);
}

TEST_CASE("unknown voxels never enter the confusion matrix") {
    GridDims d = dims8();
    std::mt19937_64 rng(6);
    LabelGrid truth = LabelGrid::filled(d, 0);
    LabelGrid pred = LabelGrid::filled(d, 0);
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_real_distribution<double> u(0, 1);
    std::int64_t known = 0;
    for (auto& l : truth.labels) {
        l = u(rng) < 0.3 ? kUnknownLabel : static_cast<std::uint16_t>(cls(rng));
        if (l != kUnknownLabel) ++known;
    }
    for (auto& l : pred.labels) l = static_cast<std::uint16_t>(cls(rng));

    ConfusionMatrix cm(3);
    accumulate_confusion(cm, pred, truth);
    CHECK(cm.total() == static_cast<std::uint64_t>(known));

    // Rewriting predictions at unknown-truth voxels changes nothing.
    LabelGrid pred2 = pred;
    for (std::size_t i = 0; i < truth.labels.size(); ++i)
        if (truth.labels[i] == kUnknownLabel) pred2.labels[i] = 2;
    ConfusionMatrix cm2(3);
    accumulate_confusion(cm2, pred2, truth);
    CHECK(cm2.counts == cm.counts);
}

TEST_CASE("mIoU treats absent classes by the chosen convention") {
    // Two semantic classes; class 2 never appears anywhere.
    ConfusionMatrix cm(3);
    for (int i = 0; i < 10; ++i) cm.add(1, 1);
    for (int i = 0; i < 5; ++i) cm.add(0, 1);
    ScaleReport ex = summarize_confusion(0, cm, AbsentIoU::exclude);
    REQUIRE(ex.class_iou.size() == 2);
    CHECK(ex.class_iou[0].has_value());
    CHECK_FALSE(ex.class_iou[1].has_value());
    CHECK(ex.miou == doctest::Approx(10.0 / 15.0));
    ScaleReport ze = summarize_confusion(0, cm, AbsentIoU::zero);
    CHECK(ze.miou == doctest::Approx(0.5 * 10.0 / 15.0));
}

TEST_CASE("argmax prediction is shift invariant and ties to the smaller id") {
    GridDims d;
    d.nx = d.ny = 8;
    d.nz = 1;
    std::mt19937_64 rng(7);
    Tensor logits = oracle::random_tensor({1, 3, d.nx, d.ny, d.nz}, rng);
    LabelGrid base = predict_labels(logits, 0, d.voxel_size);
    for (auto l : base.labels) CHECK(l <= 2);

    Tensor shifted = Tensor::from_data(logits.shape(), logits.data());
    const std::int64_t S = d.voxels();
    for (std::int64_t v = 0; v < S; ++v)
        for (std::int64_t c = 0; c < 3; ++c)
            shifted.data()[static_cast<std::size_t>(c * S + v)] += scalar(0.25) * scalar(v % 5);
    CHECK(predict_labels(shifted, 0, d.voxel_size).labels == base.labels);

    Tensor ties = Tensor::zeros({1, 3, d.nx, d.ny, d.nz});
    LabelGrid t = predict_labels(ties, 0, d.voxel_size);
    for (auto l : t.labels) CHECK(l == 0);
}

TEST_CASE("confusion counts are invariant under consistent flips") {
    GridDims d = dims8();
    std::mt19937_64 rng(8);
    LabelGrid truth = LabelGrid::filled(d, 0);
    LabelGrid pred = LabelGrid::filled(d, 0);
    std::uniform_int_distribution<int> cls(0, 2);
    for (auto& l : truth.labels) l = static_cast<std::uint16_t>(cls(rng));
    for (auto& l : pred.labels) l = static_cast<std::uint16_t>(cls(rng));

    ConfusionMatrix cm(3);
    accumulate_confusion(cm, pred, truth);

    OccupancyGrid dummy1 = OccupancyGrid::empty(d), dummy2 = OccupancyGrid::empty(d);
    flip_xy(dummy1, truth, true, true);
    flip_xy(dummy2, pred, true, true);
    ConfusionMatrix cf(3);
    accumulate_confusion(cf, pred, truth);
    CHECK(cf.counts == cm.counts);
}

TEST_CASE("evaluate produces one sub-report per requested scale") {
    ModelConfig mc = tiny_config();
    LMSCNetModel model = build(mc);
    Sample s;
    s.occ = OccupancyGrid::empty(mc.grid);
    s.occ.set(1, 2, 3);
    s.labels = LabelGrid::filled(mc.grid, 0);
    s.labels.at(1, 2, 3) = 1;
    MetricsReport rep = evaluate(model, {s, s}, {0, 2});
    REQUIRE(rep.scales.size() == 2);
    CHECK(rep.scales[0].level == 0);
    CHECK(rep.scales[1].level == 2);
    CHECK(rep.scales[0].confusion.total() == static_cast<std::uint64_t>(2 * mc.grid.voxels()));
    CHECK(rep.scales[1].confusion.total() == static_cast<std::uint64_t>(2 * mc.grid.voxels() / 64));
}

TEST_CASE("metrics reports round trip through the machine-readable twin") {
    GridDims d = dims8();
    LabelGrid truth = LabelGrid::filled(d, 0);
    LabelGrid pred = LabelGrid::filled(d, 0);
    for (int i = 0; i < 10; ++i) {
        truth.at(i % 8, i / 8, 0) = 1;
        if (i < 6) pred.at(i % 8, i / 8, 0) = 1;
    }
    pred.at(0, 7, 7) = 1;
    pred.at(1, 7, 7) = 1;
    ConfusionMatrix cm(2);
    accumulate_confusion(cm, pred, truth);
    MetricsReport rep;
    rep.scales.push_back(summarize_confusion(0, cm));

    ClassTable classes = ClassTable::generic(1);
    KVList kv = KVList::parse(metrics_to_kv(rep, classes).serialize());
    CHECK(kv.get_double("scale0.completion.iou", -1) == rep.scales[0].completion_iou);
    CHECK(kv.get_double("scale0.completion.precision", -1) == rep.scales[0].completion_precision);
    CHECK(kv.get_double("scale0.completion.recall", -1) == rep.scales[0].completion_recall);
    CHECK(kv.get_double("scale0.miou", -1) == rep.scales[0].miou);
    CHECK(kv.get_int("scale0.known_voxels", -1) == static_cast<std::int64_t>(cm.total()));

    std::ostringstream table;
    render_metrics(table, rep, classes);
    CHECK(table.str().find("50.00") != std::string::npos); // completion IoU as a percentage
    CHECK(table.str().find("75.00") != std::string::npos);
}

TEST_CASE("singlescale training leaves coarse-head gradients at zero") {
    ModelConfig mc = tiny_config();
    LMSCNetModel model = build(mc);
    Sample s;
    s.occ = OccupancyGrid::empty(mc.grid);
    s.occ.set(0, 0, 0);
    s.labels = LabelGrid::filled(mc.grid, 0);
    s.labels.at(0, 0, 0) = 1;

    model.zero_grad();
    Tensor input = grid_to_input(s.occ);
    auto logits = forward(model, input, {0, 1, 2, 3});
    std::vector<Tensor> losses(4);
    for (int l = 0; l < 4; ++l)
        losses[static_cast<std::size_t>(l)] = level_loss(logits.at(l), {&s.labels}, {1, 1, 1}, l);
    backward(total_loss(losses, {1, 1, 1, 1}, /*singlescale=*/true));

    bool fine_head_touched = false;
    for (auto& p : model.parameters()) {
        const bool coarse_head = p.name.rfind("head.l1", 0) == 0 ||
                                 p.name.rfind("head.l2", 0) == 0 ||
                                 p.name.rfind("head.l3", 0) == 0;
        bool all_zero = true;
        for (auto g : p.value.grad())
            if (g != scalar(0)) all_zero = false;
        if (coarse_head) CHECK(all_zero);
        if (p.name.rfind("head.l0", 0) == 0 && !all_zero) fine_head_touched = true;
    }
    CHECK(fine_head_touched);
}
