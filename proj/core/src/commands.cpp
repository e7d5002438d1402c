#include "lmsc/commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "lmsc/bench.hpp"
#include "lmsc/checkpoint.hpp"
#include "lmsc/metrics.hpp"
#include "lmsc/ply.hpp"
#include "lmsc/synthetic.hpp"

namespace lmsc {

namespace {

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const GeometryError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

TrainConfig train_config_from_kv(const KVList& kv, std::uint64_t seed) {
    TrainConfig t;
    t.lr0 = kv.get_double("train.lr0", t.lr0);
    t.lr_decay = kv.get_double("train.lr_decay", t.lr_decay);
    t.beta1 = static_cast<scalar>(kv.get_double("train.beta1", static_cast<double>(t.beta1)));
    t.beta2 = static_cast<scalar>(kv.get_double("train.beta2", static_cast<double>(t.beta2)));
    t.batch = static_cast<int>(kv.get_int("train.batch", t.batch));
    t.epochs = static_cast<int>(kv.get_int("train.epochs", t.epochs));
    if (auto a = kv.get("train.alpha")) {
        const auto v = parse_int_list(*a);
        if (v.size() != 4) throw ConfigError("train.alpha: expected 4 comma-separated weights");
        for (std::size_t i = 0; i < 4; ++i) t.alpha[i] = static_cast<scalar>(v[i]);
    }
    t.singlescale = kv.get_bool("train.singlescale", t.singlescale);
    t.augment = kv.get_bool("train.augment", t.augment);
    t.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", static_cast<std::int64_t>(seed)));
    return t;
}

Checkpoint load_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("checkpoint not readable: " + path);
    return checkpoint_load(in);
}

} // namespace

RunConfig resolve_run_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
    KVList kv;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("config file not readable: " + config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        kv = KVList::parse(buf.str());
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + ov + "': expected key=value");
        kv.set(ov.substr(0, eq), ov.substr(eq + 1));
    }

    RunConfig rc;
    rc.channels_explicit = kv.has("model.channels");
    rc.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    if (!kv.has("model.init_seed")) kv.set("model.init_seed", std::to_string(rc.seed));
    rc.model = model_config_from_kv(kv);
    rc.train = train_config_from_kv(kv, rc.seed);
    rc.manifest = kv.get_or("data.manifest", "");
    rc.out_dir = kv.get_or("out.dir", "out");
    // echo the fully resolved view back into kv
    model_config_to_kv(rc.model, kv);
    kv.set("seed", std::to_string(rc.seed));
    kv.set("train.lr0", std::to_string(rc.train.lr0));
    kv.set("train.lr_decay", std::to_string(rc.train.lr_decay));
    kv.set("train.batch", std::to_string(rc.train.batch));
    kv.set("train.epochs", std::to_string(rc.train.epochs));
    kv.set("train.seed", std::to_string(rc.train.seed));
    kv.set("train.singlescale", rc.train.singlescale ? "true" : "false");
    kv.set("train.augment", rc.train.augment ? "true" : "false");
    kv.set("out.dir", rc.out_dir.string());
    if (!rc.manifest.empty()) kv.set("data.manifest", rc.manifest);
    rc.kv = kv;
    return rc;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    return guarded([&] {
        RunConfig rc = resolve_run_config(config_path, overrides);
        if (rc.manifest.empty()) throw ConfigError("train: data.manifest is required");
        DatasetManifest manifest = DatasetManifest::load(rc.manifest);
        rc.model.grid = manifest.dims;
        rc.model.num_classes = manifest.num_classes;
        if (!rc.channels_explicit && manifest.dims.nz != rc.model.channels[0]) {
            const int nz = static_cast<int>(manifest.dims.nz);
            rc.model.channels = {nz, nz + 16, nz + 32, nz + 48};
        }
        auto data = load_all(manifest);

        std::filesystem::create_directories(rc.out_dir);
        {
            KVList echo = rc.kv;
            model_config_to_kv(rc.model, echo);
            std::ofstream cfg_out(rc.out_dir / "config.resolved.txt");
            cfg_out << echo.serialize();
        }

        LMSCNetModel model = build(rc.model);
        std::ofstream log_file(rc.out_dir / "train.log");
        struct Tee : std::ostream, std::streambuf {
            std::ostream &a, &b;
            Tee(std::ostream& a_, std::ostream& b_) : std::ostream(this), a(a_), b(b_) {}
            int overflow(int c) override {
                if (c != EOF) {
                    a.put(static_cast<char>(c));
                    b.put(static_cast<char>(c));
                }
                return c;
            }
        } tee(std::cout, log_file);
        train(model, data, rc.train, rc.out_dir, &tee);
    });
}

int cmd_eval(const std::string& checkpoint_path, const std::string& manifest_path,
             const std::vector<int>& scales, const std::string& out_dir,
             const std::string& absent_mode) {
    return guarded([&] {
        AbsentIoU absent;
        if (absent_mode == "exclude")
            absent = AbsentIoU::exclude;
        else if (absent_mode == "zero")
            absent = AbsentIoU::zero;
        else
            throw ConfigError("--iou-absent: expected 'exclude' or 'zero'");

        Checkpoint ck = load_checkpoint_file(checkpoint_path);
        DatasetManifest manifest = DatasetManifest::load(manifest_path);
        if (!(manifest.dims == ck.model.config.grid))
            throw DataError("eval: manifest grid does not match checkpoint grid");
        auto data = load_all(manifest);

        ScaleSelection sel(scales.begin(), scales.end());
        if (sel.empty()) sel = {0};
        MetricsReport rep = evaluate(ck.model, data, sel, absent);
        const ClassTable table = ClassTable::generic(ck.model.config.num_classes);

        render_metrics(std::cout, rep, table);
        std::filesystem::create_directories(out_dir);
        std::ofstream human(std::filesystem::path(out_dir) / "metrics.txt");
        render_metrics(human, rep, table);
        std::ofstream machine(std::filesystem::path(out_dir) / "metrics.kv");
        machine << metrics_to_kv(rep, table).serialize();
    });
}

int cmd_infer(const std::string& checkpoint_path, const std::string& occupancy_path, int scale,
              const std::string& out_path) {
    return guarded([&] {
        Checkpoint ck = load_checkpoint_file(checkpoint_path);
        if (scale < 0 || scale >= ck.model.config.levels)
            throw ConfigError("infer: scale must be in [0,3]");
        std::ifstream occ_in(occupancy_path, std::ios::binary);
        if (!occ_in) throw DataError("occupancy file not readable: " + occupancy_path);
        OccupancyGrid occ = load_occupancy(occ_in, ck.model.config.grid);

        NoGradGuard ng;
        auto outs = forward(ck.model, grid_to_input(occ), {scale});
        LabelGrid pred = predict_labels(outs.at(scale), 0,
                                        ck.model.config.grid.voxel_size * (1 << scale));
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw DataError("output not writable: " + out_path);
        save_labels(out, pred);
    });
}

int cmd_bench(const std::string& checkpoint_path, const std::string& config_path,
              const std::vector<std::string>& overrides, const std::vector<int>& scales, int reps,
              int warmup) {
    return guarded([&] {
        LMSCNetModel model;
        if (!checkpoint_path.empty()) {
            model = std::move(load_checkpoint_file(checkpoint_path).model);
        } else {
            RunConfig rc = resolve_run_config(config_path, overrides);
            model = build(rc.model);
        }
        std::vector<int> levels = scales;
        if (levels.empty()) levels = {0, 1, 2, 3};
        BenchReport rep = benchmark(model, levels, reps, warmup);
        render_bench(std::cout, rep);
    });
}

int cmd_make_synthetic(const std::string& out_dir, int count, const GridDims& dims, int num_classes,
                       std::uint64_t seed) {
    return guarded([&] {
        if (count < 1) throw ConfigError("make-synthetic: count must be >= 1");
        dims.validate();
        std::filesystem::create_directories(out_dir);
        DatasetManifest manifest;
        manifest.dims = dims;
        manifest.num_classes = num_classes;
        for (int c = 0; c <= num_classes; ++c)
            manifest.label_map.emplace_back(static_cast<std::uint16_t>(c),
                                            static_cast<std::uint16_t>(c));
        manifest.label_map.emplace_back(255, kUnknownLabel); // raw unknown

        for (int i = 0; i < count; ++i) {
            SyntheticScene scene = make_scene(dims, num_classes, derive_seed(seed, static_cast<std::uint64_t>(i)));
            char name[64];
            std::snprintf(name, sizeof(name), "scene_%03d", i);
            const auto occ_path = std::filesystem::path(out_dir) / (std::string(name) + ".occ.bin");
            const auto lab_path = std::filesystem::path(out_dir) / (std::string(name) + ".labels.bin");
            {
                std::ofstream out(occ_path, std::ios::binary);
                save_occupancy(out, scene.occ);
            }
            {
                // raw file encodes unknown as 255 per the label map above
                LabelGrid raw = scene.labels;
                for (auto& l : raw.labels)
                    if (l == kUnknownLabel) l = 255;
                std::ofstream out(lab_path, std::ios::binary);
                save_labels(out, raw);
            }
            manifest.samples.emplace_back(occ_path, lab_path);
        }
        manifest.save(std::filesystem::path(out_dir) / "manifest.txt");
        std::cout << "wrote " << count << " scenes to " << out_dir << "\n";
    });
}

int cmd_export_ply(const std::string& label_path, const GridDims& dims, int num_classes,
                   const std::string& out_path) {
    return guarded([&] {
        std::ifstream in(label_path, std::ios::binary);
        if (!in) throw DataError("label file not readable: " + label_path);
        std::vector<std::pair<std::uint16_t, std::uint16_t>> map;
        for (int c = 0; c <= num_classes; ++c)
            map.emplace_back(static_cast<std::uint16_t>(c), static_cast<std::uint16_t>(c));
        map.emplace_back(255, kUnknownLabel);
        LabelGrid g = load_labels(in, dims, map);
        std::ofstream out(out_path);
        if (!out) throw DataError("output not writable: " + out_path);
        export_ply(out, g, ClassTable::generic(num_classes));
    });
}

} // namespace lmsc
