// seppmix command-line driver: synthetic data generation, stage-0
// pretraining, mixed training, episodic evaluation, mix previews and the
// mixer comparison table.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "seppmix/colormap.hpp"
#include "seppmix/common.hpp"
#include "seppmix/datakit.hpp"
#include "seppmix/fewshot.hpp"
#include "seppmix/imageio.hpp"
#include "seppmix/mixkit.hpp"
#include "seppmix/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seppmix;

namespace {

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out;
    bool overwrite = false;

    std::string dataset_type = "synthetic"; // synthetic | folder
    std::string dataset_root;
    std::string manifest;
    std::string train_split = "train";
    std::string eval_split = "test";
    int synth_classes = 24;
    int synth_per_class = 100;
    int synth_image_size = 32;
    std::uint64_t synth_seed = 0;
    double base_fraction = 2.0 / 3.0;

    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int epochs = 65;
    int pretrain_epochs = 5;
    std::vector<int> milestones{30, 45, 60};
    double lr_decay = 0.1;
    int batch_size = 64;
    int grid_n = 2;
    std::string mixer = "seppmix";
    double alpha = 1.0;
    double beta = 0.5;
    std::string rotations = "all";               // all | sampled | off
    std::string lm_rotation_reduction = "sum";   // sum | mean
    std::string cam_refresh = "batch";           // batch | epoch | frozen
    double mix_probability = 1.0;
    double mixup_alpha = 1.0;
    double cutmix_alpha = 1.0;
    bool hflip = true;
    double dropout = 0.0;
    bool freeze_head = false;
    std::vector<int> channels{16, 32, 64, 64};

    int n_way = 5;
    int k_shot = 1;
    int h_query = 15;
    int episodes = 600;
    double probe_l2 = 1.0;
    bool embed_normalize = true;
    int workers = 1;
};

json config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["dataset_type"] = c.dataset_type;
    j["dataset_root"] = c.dataset_root;
    j["manifest"] = c.manifest;
    j["train_split"] = c.train_split;
    j["eval_split"] = c.eval_split;
    j["synth_classes"] = c.synth_classes;
    j["synth_per_class"] = c.synth_per_class;
    j["synth_image_size"] = c.synth_image_size;
    j["synth_seed"] = c.synth_seed;
    j["base_fraction"] = c.base_fraction;
    j["lr"] = c.lr;
    j["momentum"] = c.momentum;
    j["weight_decay"] = c.weight_decay;
    j["epochs"] = c.epochs;
    j["pretrain_epochs"] = c.pretrain_epochs;
    j["milestones"] = c.milestones;
    j["lr_decay"] = c.lr_decay;
    j["batch_size"] = c.batch_size;
    j["grid_n"] = c.grid_n;
    j["mixer"] = c.mixer;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["rotations"] = c.rotations;
    j["lm_rotation_reduction"] = c.lm_rotation_reduction;
    j["cam_refresh"] = c.cam_refresh;
    j["mix_probability"] = c.mix_probability;
    j["mixup_alpha"] = c.mixup_alpha;
    j["cutmix_alpha"] = c.cutmix_alpha;
    j["hflip"] = c.hflip;
    j["dropout"] = c.dropout;
    j["freeze_head"] = c.freeze_head;
    j["channels"] = c.channels;
    j["n_way"] = c.n_way;
    j["k_shot"] = c.k_shot;
    j["h_query"] = c.h_query;
    j["episodes"] = c.episodes;
    j["probe_l2"] = c.probe_l2;
    j["embed_normalize"] = c.embed_normalize;
    j["workers"] = c.workers;
    return j;
}

template <class T>
void read_key(const json& j, const char* key, T& into) {
    try {
        into = j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

void apply_config_json(const json& j, RunConfig& c) {
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") read_key(value, "seed", c.seed);
        else if (key == "dataset_type") read_key(value, "dataset_type", c.dataset_type);
        else if (key == "dataset_root") read_key(value, "dataset_root", c.dataset_root);
        else if (key == "manifest") read_key(value, "manifest", c.manifest);
        else if (key == "train_split") read_key(value, "train_split", c.train_split);
        else if (key == "eval_split") read_key(value, "eval_split", c.eval_split);
        else if (key == "synth_classes") read_key(value, "synth_classes", c.synth_classes);
        else if (key == "synth_per_class") read_key(value, "synth_per_class", c.synth_per_class);
        else if (key == "synth_image_size") read_key(value, "synth_image_size", c.synth_image_size);
        else if (key == "synth_seed") read_key(value, "synth_seed", c.synth_seed);
        else if (key == "base_fraction") read_key(value, "base_fraction", c.base_fraction);
        else if (key == "lr") read_key(value, "lr", c.lr);
        else if (key == "momentum") read_key(value, "momentum", c.momentum);
        else if (key == "weight_decay") read_key(value, "weight_decay", c.weight_decay);
        else if (key == "epochs") read_key(value, "epochs", c.epochs);
        else if (key == "pretrain_epochs") read_key(value, "pretrain_epochs", c.pretrain_epochs);
        else if (key == "milestones") read_key(value, "milestones", c.milestones);
        else if (key == "lr_decay") read_key(value, "lr_decay", c.lr_decay);
        else if (key == "batch_size") read_key(value, "batch_size", c.batch_size);
        else if (key == "grid_n") read_key(value, "grid_n", c.grid_n);
        else if (key == "mixer") read_key(value, "mixer", c.mixer);
        else if (key == "alpha") read_key(value, "alpha", c.alpha);
        else if (key == "beta") read_key(value, "beta", c.beta);
        else if (key == "rotations") read_key(value, "rotations", c.rotations);
        else if (key == "lm_rotation_reduction")
            read_key(value, "lm_rotation_reduction", c.lm_rotation_reduction);
        else if (key == "cam_refresh") read_key(value, "cam_refresh", c.cam_refresh);
        else if (key == "mix_probability") read_key(value, "mix_probability", c.mix_probability);
        else if (key == "mixup_alpha") read_key(value, "mixup_alpha", c.mixup_alpha);
        else if (key == "cutmix_alpha") read_key(value, "cutmix_alpha", c.cutmix_alpha);
        else if (key == "hflip") read_key(value, "hflip", c.hflip);
        else if (key == "dropout") read_key(value, "dropout", c.dropout);
        else if (key == "freeze_head") read_key(value, "freeze_head", c.freeze_head);
        else if (key == "channels") read_key(value, "channels", c.channels);
        else if (key == "n_way") read_key(value, "n_way", c.n_way);
        else if (key == "k_shot") read_key(value, "k_shot", c.k_shot);
        else if (key == "h_query") read_key(value, "h_query", c.h_query);
        else if (key == "episodes") read_key(value, "episodes", c.episodes);
        else if (key == "probe_l2") read_key(value, "probe_l2", c.probe_l2);
        else if (key == "embed_normalize") read_key(value, "embed_normalize", c.embed_normalize);
        else if (key == "workers") read_key(value, "workers", c.workers);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

void load_config_file(const std::string& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid config JSON '" + path + "': " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    apply_config_json(j, c);
}

nnet::RotationsMode rotations_from(const std::string& s) {
    if (s == "all") return nnet::RotationsMode::all;
    if (s == "sampled") return nnet::RotationsMode::sampled;
    if (s == "off") return nnet::RotationsMode::off;
    throw ConfigError("rotations must be all, sampled or off (got '" + s + "')");
}

nnet::CamRefresh cam_refresh_from(const std::string& s) {
    if (s == "batch") return nnet::CamRefresh::batch;
    if (s == "epoch") return nnet::CamRefresh::epoch;
    if (s == "frozen") return nnet::CamRefresh::frozen;
    throw ConfigError("cam_refresh must be batch, epoch or frozen (got '" + s + "')");
}

nnet::LmReduction lm_reduction_from(const std::string& s) {
    if (s == "sum") return nnet::LmReduction::sum;
    if (s == "mean") return nnet::LmReduction::mean;
    throw ConfigError("lm_rotation_reduction must be sum or mean (got '" + s + "')");
}

nnet::TrainConfig to_train_config(const RunConfig& c, int epochs, MixerKind mixer) {
    nnet::TrainConfig tc;
    tc.lr = c.lr;
    tc.momentum = c.momentum;
    tc.weight_decay = c.weight_decay;
    tc.epochs = epochs;
    tc.milestones = c.milestones;
    tc.lr_decay = c.lr_decay;
    tc.batch_size = c.batch_size;
    tc.grid_n = c.grid_n;
    tc.seed = c.seed;
    tc.mixer = mixer;
    tc.loss_weights = {c.alpha, c.beta};
    tc.rotations = rotations_from(c.rotations);
    tc.lm_reduction = lm_reduction_from(c.lm_rotation_reduction);
    tc.cam_refresh = cam_refresh_from(c.cam_refresh);
    tc.mix_probability = c.mix_probability;
    tc.mixup_alpha = c.mixup_alpha;
    tc.cutmix_alpha = c.cutmix_alpha;
    tc.hflip = c.hflip;
    tc.dropout = c.dropout;
    tc.freeze_head = c.freeze_head;
    tc.backbone.channels = c.channels;
    tc.workers = c.workers;
    nnet::validate(tc);
    return tc;
}

struct DatasetPair {
    datakit::LabeledDataset base;
    datakit::LabeledDataset novel;
};

DatasetPair load_datasets(const RunConfig& c) {
    DatasetPair out;
    if (c.dataset_type == "synthetic") {
        auto full = datakit::make_synthetic(c.synth_classes, c.synth_per_class, c.synth_image_size,
                                            c.synth_seed);
        auto [base, novel] = datakit::split_base_novel(full, c.base_fraction);
        out.base = std::move(base);
        out.novel = std::move(novel);
    } else if (c.dataset_type == "folder") {
        if (c.dataset_root.empty() || c.manifest.empty())
            throw ConfigError("folder datasets need dataset_root and manifest");
        const auto manifest = datakit::load_manifest(c.manifest);
        out.base = datakit::load_image_folder(c.dataset_root, manifest, c.train_split);
        out.novel = datakit::load_image_folder(c.dataset_root, manifest, c.eval_split);
        out.novel.role = datakit::DatasetRole::novel;
    } else {
        throw ConfigError("dataset_type must be synthetic or folder (got '" + c.dataset_type + "')");
    }
    return out;
}

fs::path prepare_out_dir(const RunConfig& c, std::initializer_list<const char*> outputs) {
    if (c.out.empty()) throw ConfigError("--out is required");
    const fs::path out(c.out);
    fs::create_directories(out);
    for (const char* f : outputs)
        if (fs::exists(out / f) && !c.overwrite)
            throw OutputConflictError("output '" + (out / f).string() +
                                      "' exists; pass --overwrite to replace it");
    return out;
}

json metrics_to_json(const nnet::EpochMetrics& m) {
    json j;
    j["epoch"] = m.epoch;
    j["lr"] = m.lr;
    j["L_m"] = m.l_m;
    j["L_r"] = m.l_r;
    j["L_base"] = m.l_base;
    j["train_acc"] = m.train_acc;
    return j;
}

void write_run_outputs(const fs::path& out, const RunConfig& c, const nnet::TrainResult& result) {
    nnet::Checkpoint ckpt{result.model, result.momentum, result.epoch, ""};
    const std::string id = nnet::save_checkpoint(out / "model.ckpt", ckpt);
    json manifest;
    manifest["checkpoint_id"] = id;
    manifest["seed"] = c.seed;
    manifest["epoch"] = result.epoch;
    manifest["config"] = config_to_json(c);
    json hist = json::array();
    for (const auto& m : result.metrics) hist.push_back(metrics_to_json(m));
    manifest["metrics"] = hist;
    std::ofstream mf(out / "manifest.json");
    mf << manifest.dump(2) << '\n';
    std::cout << "checkpoint " << id << " written to " << (out / "model.ckpt").string() << "\n";
}

int cmd_pretrain(const RunConfig& c) {
    const fs::path out = prepare_out_dir(c, {"model.ckpt", "manifest.json", "metrics.jsonl"});
    auto data = load_datasets(c);
    const auto tc = to_train_config(c, c.pretrain_epochs, MixerKind::none);
    std::ofstream mlog(out / "metrics.jsonl");
    const auto result = nnet::pretrain_for_cams(
        data.base, tc, [&](const nnet::EpochMetrics& m) { mlog << metrics_to_json(m).dump() << '\n'; });
    mlog.close();
    write_run_outputs(out, c, result);
    return 0;
}

int cmd_train(const RunConfig& c, const std::string& pretrained) {
    const MixerKind mixer = mixer_from_name(c.mixer);
    if (mixer == MixerKind::seppmix && pretrained.empty())
        throw ConfigError("mixer=seppmix requires --pretrained (CAM source)");
    const fs::path out = prepare_out_dir(c, {"model.ckpt", "manifest.json", "metrics.jsonl"});
    auto data = load_datasets(c);
    const auto tc = to_train_config(c, c.epochs, mixer);
    std::optional<nnet::Checkpoint> start;
    if (!pretrained.empty()) start = nnet::load_checkpoint(pretrained);
    std::ofstream mlog(out / "metrics.jsonl");
    const auto result = nnet::train(
        data.base, tc, start ? &*start : nullptr,
        [&](const nnet::EpochMetrics& m) { mlog << metrics_to_json(m).dump() << '\n'; });
    mlog.close();
    write_run_outputs(out, c, result);
    return 0;
}

int cmd_eval(const RunConfig& c, const std::string& pretrained) {
    if (pretrained.empty()) throw ConfigError("eval requires --pretrained");
    const fs::path out = prepare_out_dir(c, {"eval_report.json"});
    auto data = load_datasets(c);
    const auto ckpt = nnet::load_checkpoint(pretrained);
    fewshot::EvalConfig ec;
    ec.n_way = c.n_way;
    ec.k_shot = c.k_shot;
    ec.h_query = c.h_query;
    ec.episodes = c.episodes;
    ec.probe_l2 = c.probe_l2;
    ec.l2_normalize = c.embed_normalize;
    ec.seed = c.seed;
    ec.workers = c.workers;
    const auto report = fewshot::evaluate(ckpt.model, data.novel, ec, ckpt.id);
    std::ofstream rf(out / "eval_report.json");
    rf << fewshot::report_to_json(report) << '\n';
    std::cout << "acc " << fewshot::format_accuracy(report.mean_accuracy, report.ci95_halfwidth)
              << "\n";
    return 0;
}

json provenance_to_json(const MixProvenance& prov, const datakit::LabeledDataset& ds) {
    json j;
    j["mixer"] = mixer_name(prov.kind);
    j["class_a"] = prov.class_a;
    j["class_b"] = prov.class_b;
    if (prov.source_a >= 0) j["source_a"] = ds.items[static_cast<std::size_t>(prov.source_a)].instance_id;
    if (prov.source_b >= 0) j["source_b"] = ds.items[static_cast<std::size_t>(prov.source_b)].instance_id;
    j["rho_a"] = prov.rho_a;
    j["rho_b"] = prov.rho_b;
    if (prov.mask.grid_n > 0) {
        json rows = json::array();
        for (int r = 0; r < prov.mask.grid_n; ++r) {
            json row = json::array();
            for (int cc = 0; cc < prov.mask.grid_n; ++cc) row.push_back(static_cast<int>(prov.mask.at(r, cc)));
            rows.push_back(row);
        }
        j["mask_cells"] = rows;
    }
    if (prov.kind == MixerKind::cutmix) {
        j["box"] = {{"x1", prov.box.x1}, {"y1", prov.box.y1}, {"x2", prov.box.x2}, {"y2", prov.box.y2}};
        j["lambda"] = prov.lambda;
    }
    if (prov.kind == MixerKind::mixup) j["lambda"] = prov.lambda;
    return j;
}

int cmd_mix_preview(const RunConfig& c, const std::string& pretrained, int count) {
    const MixerKind mixer = mixer_from_name(c.mixer);
    if (mixer == MixerKind::none) throw ConfigError("mix-preview needs a mixer other than none");
    if (mixer == MixerKind::seppmix && pretrained.empty())
        throw ConfigError("mix-preview with mixer=seppmix requires --pretrained (CAM source)");
    if (count < 1) throw ConfigError("--count must be positive");
    const fs::path out = prepare_out_dir(c, {"preview_0.json"});
    auto data = load_datasets(c);
    const auto& ds = data.base;
    if (ds.size() < 2) throw InputDomainError("mix-preview: dataset too small");

    std::optional<nnet::Checkpoint> ckpt;
    if (!pretrained.empty()) ckpt = nnet::load_checkpoint(pretrained);

    auto rng = derive_rng(c.seed, {kStreamPreview});
    const int num_classes = ds.class_count();
    for (int p = 0; p < count; ++p) {
        const int ia = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ds.size())));
        int ib = ia;
        while (ib == ia) ib = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ds.size())));
        const auto& a = ds.items[static_cast<std::size_t>(ia)];
        const auto& b = ds.items[static_cast<std::size_t>(ib)];

        MixedSample sample;
        SemanticMap sa, sb;
        switch (mixer) {
            case MixerKind::seppmix:
                sa = nnet::semantic_map_for(ckpt->model, a.image, a.class_id);
                sb = nnet::semantic_map_for(ckpt->model, b.image, b.class_id);
                sample = mixkit::seppmix(a.image, a.class_id, b.image, b.class_id, sa, sb,
                                         num_classes, c.grid_n, rng);
                break;
            case MixerKind::patchmix:
                sample = mixkit::patchmix(a.image, a.class_id, b.image, b.class_id, num_classes,
                                          c.grid_n, rng);
                break;
            case MixerKind::mixup:
                sample = mixkit::mixup(a.image, a.class_id, b.image, b.class_id, num_classes,
                                       rng.beta(c.mixup_alpha, c.mixup_alpha));
                break;
            case MixerKind::cutmix:
                sample = mixkit::cutmix(a.image, a.class_id, b.image, b.class_id, num_classes, rng,
                                        c.cutmix_alpha);
                break;
            case MixerKind::none: break;
        }
        sample.prov.source_a = ia;
        sample.prov.source_b = ib;

        const std::string stem = "preview_" + std::to_string(p);
        imageio::save_png(out / (stem + "_xa.png"), a.image);
        imageio::save_png(out / (stem + "_xb.png"), b.image);
        imageio::save_png(out / (stem + "_mix.png"), sample.image);

        json j = provenance_to_json(sample.prov, ds);
        json weights = json::object();
        for (int k = 0; k < sample.label.size(); ++k)
            if (sample.label.weights[static_cast<std::size_t>(k)] != 0.0)
                weights[std::to_string(k)] = sample.label.weights[static_cast<std::size_t>(k)];
        j["label_weights"] = weights;
        if (mixer == MixerKind::seppmix) {
            imageio::save_png(out / (stem + "_cam_a.png"), render_heatmap(sa));
            imageio::save_png(out / (stem + "_cam_b.png"), render_heatmap(sb));
            j["semantic_a"] = sa.data;
            j["semantic_b"] = sb.data;
        }
        std::ofstream jf(out / (stem + ".json"));
        jf << j.dump(2) << '\n';
    }
    std::cout << count << " preview sets written to " << out.string() << "\n";
    return 0;
}

int cmd_make_synthetic(const RunConfig& c, int train_classes, int val_classes, int test_classes) {
    const fs::path out = prepare_out_dir(c, {"manifest.json"});
    auto ds = datakit::make_synthetic(c.synth_classes, c.synth_per_class, c.synth_image_size,
                                      c.synth_seed);
    if (train_classes + val_classes + test_classes == 0) {
        // default split: ~2/3 train, remainder evenly val/test
        train_classes = std::max(1, (2 * c.synth_classes) / 3);
        val_classes = std::max(1, (c.synth_classes - train_classes) / 2);
        test_classes = c.synth_classes - train_classes - val_classes;
    }
    datakit::write_image_folder(out, ds, train_classes, val_classes, test_classes, "synthetic");
    std::cout << "synthetic dataset (" << c.synth_classes << " classes x " << c.synth_per_class
              << ") written to " << out.string() << "\n";
    return 0;
}

struct CompareRow {
    std::string key;
    std::string display;
    MixerKind mixer;
    bool rotations = false;
};

int cmd_compare_mixers(const RunConfig& c) {
    const fs::path out = prepare_out_dir(c, {"compare.md", "compare.json"});
    auto data = load_datasets(c);

    // Shared stage-0 bootstrap; every row continues from it.
    RunConfig stage0_cfg = c;
    const auto tc0 = to_train_config(c, c.pretrain_epochs, MixerKind::none);
    const auto stage0 = nnet::pretrain_for_cams(data.base, tc0);
    nnet::Checkpoint stage0_ckpt{stage0.model, stage0.momentum, stage0.epoch, ""};

    const std::vector<CompareRow> rows = {
        {"none", "baseline", MixerKind::none, false},
        {"mixup", "Mixup", MixerKind::mixup, false},
        {"cutmix", "Cutmix", MixerKind::cutmix, false},
        {"patchmix", "Patchmix", MixerKind::patchmix, false},
        {"seppmix_wo_r", "SePPMix (w/o r)", MixerKind::seppmix, false},
        {"seppmix_w_r", "SePPMix (w/ r)", MixerKind::seppmix, true},
    };

    json jrows = json::array();
    double base_1 = 0.0, base_5 = 0.0;
    std::vector<std::array<double, 2>> accs;
    for (const auto& row : rows) {
        RunConfig rc = c;
        rc.mixer = mixer_name(row.mixer);
        if (!row.rotations) {
            rc.rotations = "off";
            rc.beta = 0.0;
        }
        auto tc = to_train_config(rc, c.epochs, row.mixer);
        const auto result = nnet::train(data.base, tc, &stage0_ckpt);

        fewshot::EvalConfig ec;
        ec.n_way = c.n_way;
        ec.h_query = c.h_query;
        ec.episodes = c.episodes;
        ec.probe_l2 = c.probe_l2;
        ec.l2_normalize = c.embed_normalize;
        ec.seed = c.seed;
        ec.workers = c.workers;
        ec.k_shot = 1;
        const auto rep1 = fewshot::evaluate(result.model, data.novel, ec);
        ec.k_shot = 5;
        const auto rep5 = fewshot::evaluate(result.model, data.novel, ec);
        if (row.key == "none") {
            base_1 = rep1.mean_accuracy;
            base_5 = rep5.mean_accuracy;
        }
        accs.push_back({rep1.mean_accuracy, rep5.mean_accuracy});

        json jr;
        jr["mixer"] = row.key;
        jr["display"] = row.display;
        jr["one_shot"] = rep1.mean_accuracy;
        jr["one_shot_ci95"] = rep1.ci95_halfwidth;
        jr["five_shot"] = rep5.mean_accuracy;
        jr["five_shot_ci95"] = rep5.ci95_halfwidth;
        jrows.push_back(jr);
        std::cout << row.display << ": 1-shot "
                  << fewshot::format_accuracy(rep1.mean_accuracy, rep1.ci95_halfwidth) << ", 5-shot "
                  << fewshot::format_accuracy(rep5.mean_accuracy, rep5.ci95_halfwidth) << "\n";
    }

    auto fmt_cell = [](double acc, double base, bool with_delta) {
        char buf[64];
        if (with_delta)
            std::snprintf(buf, sizeof(buf), "%.2f (%+.2f)", acc * 100.0, (acc - base) * 100.0);
        else
            std::snprintf(buf, sizeof(buf), "%.2f", acc * 100.0);
        return std::string(buf);
    };

    for (std::size_t i = 0; i < rows.size(); ++i) {
        jrows[i]["one_shot_delta"] = accs[i][0] - base_1;
        jrows[i]["five_shot_delta"] = accs[i][1] - base_5;
    }
    json jout;
    jout["seed"] = c.seed;
    jout["pretrain_epochs"] = c.pretrain_epochs;
    jout["epochs"] = c.epochs;
    jout["rows"] = jrows;
    std::ofstream jf(out / "compare.json");
    jf << jout.dump(2) << '\n';

    std::ofstream md(out / "compare.md");
    md << "| Method | 1-shot | 5-shot |\n|---|---|---|\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool delta = rows[i].key != "none";
        md << "| " << rows[i].display << " | " << fmt_cell(accs[i][0], base_1, delta) << " | "
           << fmt_cell(accs[i][1], base_5, delta) << " |\n";
    }
    (void)stage0_cfg;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch-grid image mixing with semantically proportional labels for few-shot "
                 "classification: training, evaluation and inspection tools"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path, pretrained;
    int preview_count = 4;
    int train_classes = 0, val_classes = 0, test_classes = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (flags win over file values)");
        sub->add_option("--seed", cfg.seed, "master seed for all randomness");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_flag("--overwrite", cfg.overwrite, "replace existing outputs");
        sub->add_option("--workers", cfg.workers, "worker thread cap");
        sub->add_option("--mixer", cfg.mixer, "none|mixup|cutmix|patchmix|seppmix");
        sub->add_option("--pretrained", pretrained, "checkpoint path");
        sub->add_option("--n-way", cfg.n_way, "episode way count");
        sub->add_option("--k-shot", cfg.k_shot, "support shots per class");
        sub->add_option("--h-query", cfg.h_query, "query images per class");
        sub->add_option("--episodes", cfg.episodes, "episode count");
    };

    auto* sub_pre = app.add_subcommand("pretrain", "stage-0 supervised bootstrap (CAM source)");
    add_common(sub_pre);
    auto* sub_train = app.add_subcommand("train", "mixed training with the configured mixer");
    add_common(sub_train);
    sub_train->add_option("--epochs", cfg.epochs, "epochs to run");
    auto* sub_eval = app.add_subcommand("eval", "episodic N-way K-shot evaluation");
    add_common(sub_eval);
    auto* sub_prev = app.add_subcommand("mix-preview", "dump mixed-sample previews and heatmaps");
    add_common(sub_prev);
    sub_prev->add_option("--count", preview_count, "number of preview sets");
    auto* sub_cmp = app.add_subcommand("compare-mixers", "ablation table over the six mixer rows");
    add_common(sub_cmp);
    auto* sub_synth = app.add_subcommand("make-synthetic", "materialize a synthetic dataset folder");
    add_common(sub_synth);
    sub_synth->add_option("--classes", cfg.synth_classes, "synthetic class count");
    sub_synth->add_option("--per-class", cfg.synth_per_class, "images per class");
    sub_synth->add_option("--image-size", cfg.synth_image_size, "square image size");
    sub_synth->add_option("--train-classes", train_classes, "classes in the train split");
    sub_synth->add_option("--val-classes", val_classes, "classes in the val split");
    sub_synth->add_option("--test-classes", test_classes, "classes in the test split");

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* sub = app.get_subcommands().front();
        // File values first, then re-apply any explicitly passed flags.
        if (!config_path.empty()) {
            RunConfig flag_snapshot = cfg;
            cfg = RunConfig();
            load_config_file(config_path, cfg);
            auto keep = [&](const std::string& flag, auto member) {
                if (sub->count(flag) > 0) cfg.*member = flag_snapshot.*member;
            };
            keep("--seed", &RunConfig::seed);
            keep("--out", &RunConfig::out);
            keep("--overwrite", &RunConfig::overwrite);
            keep("--workers", &RunConfig::workers);
            keep("--mixer", &RunConfig::mixer);
            keep("--n-way", &RunConfig::n_way);
            keep("--k-shot", &RunConfig::k_shot);
            keep("--h-query", &RunConfig::h_query);
            keep("--episodes", &RunConfig::episodes);
            if (sub->get_name() == "train" && sub->count("--epochs") > 0)
                cfg.epochs = flag_snapshot.epochs;
            if (sub->get_name() == "make-synthetic") {
                if (sub->count("--classes") > 0) cfg.synth_classes = flag_snapshot.synth_classes;
                if (sub->count("--per-class") > 0) cfg.synth_per_class = flag_snapshot.synth_per_class;
                if (sub->count("--image-size") > 0)
                    cfg.synth_image_size = flag_snapshot.synth_image_size;
            }
        }

        if (sub == sub_pre) return cmd_pretrain(cfg);
        if (sub == sub_train) return cmd_train(cfg, pretrained);
        if (sub == sub_eval) return cmd_eval(cfg, pretrained);
        if (sub == sub_prev) return cmd_mix_preview(cfg, pretrained, preview_count);
        if (sub == sub_cmp) return cmd_compare_mixers(cfg);
        if (sub == sub_synth) return cmd_make_synthetic(cfg, train_classes, val_classes, test_classes);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputDomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IngestError& e) {
        std::cerr << "ingestion error: " << e.what() << "\n";
        return 3;
    } catch (const OutputConflictError& e) {
        std::cerr << "output conflict: " << e.what() << "\n";
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
