#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "json.hpp"

#include "testutil.hpp"

#include "seppmix/train.hpp"

using namespace seppmix;
using namespace testutil;
using nlohmann::json;

namespace {

const char* kCli = SEPPMIX_CLI_PATH;

int run(const std::string& args, const std::string& log = "/dev/null") {
    const std::string cmd = std::string(kCli) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

// Tiny synthetic run configuration: 4 classes (2 base / 2 novel), 12x12.
std::string write_tiny_config(const std::filesystem::path& dir) {
    json j;
    j["dataset_type"] = "synthetic";
    j["synth_classes"] = 4;
    j["synth_per_class"] = 8;
    j["synth_image_size"] = 12;
    j["synth_seed"] = 0;
    j["base_fraction"] = 0.5;
    j["channels"] = {4};
    j["batch_size"] = 8;
    j["pretrain_epochs"] = 2;
    j["epochs"] = 1;
    j["milestones"] = json::array();
    j["n_way"] = 2;
    j["k_shot"] = 1;
    j["h_query"] = 2;
    j["episodes"] = 6;
    j["workers"] = 1;
    const auto path = dir / "config.json";
    std::ofstream out(path);
    out << j.dump(2);
    return path.string();
}

} // namespace

TEST_CASE("pretrain: outputs, seed echo, determinism, conflict handling") {
    const auto dir = std::filesystem::path(temp_dir("cli_pretrain"));
    const auto cfg = write_tiny_config(dir);

    const std::string out = (dir / "pre").string();
    CHECK(run("pretrain --config " + cfg + " --seed 7 --out " + out) == 0);
    CHECK(std::filesystem::exists(dir / "pre" / "model.ckpt"));
    CHECK(std::filesystem::exists(dir / "pre" / "metrics.jsonl"));

    json manifest;
    std::ifstream(dir / "pre" / "manifest.json") >> manifest;
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["config"]["synth_classes"] == 4);

    // refusal to clobber, then byte-identical rerun
    CHECK(run("pretrain --config " + cfg + " --seed 7 --out " + out) == 4);
    const std::string before = read_file(dir / "pre" / "metrics.jsonl");
    CHECK(run("pretrain --config " + cfg + " --seed 7 --out " + out + " --overwrite") == 0);
    CHECK(read_file(dir / "pre" / "metrics.jsonl") == before);
}

TEST_CASE("train: validation and metric fields") {
    const auto dir = std::filesystem::path(temp_dir("cli_train"));
    const auto cfg = write_tiny_config(dir);

    // seppmix without a CAM source is a config error
    CHECK(run("train --config " + cfg + " --mixer seppmix --seed 1 --out " + (dir / "t0").string()) ==
          2);

    CHECK(run("pretrain --config " + cfg + " --seed 1 --out " + (dir / "pre").string()) == 0);
    CHECK(run("train --config " + cfg + " --mixer seppmix --seed 1 --pretrained " +
              (dir / "pre" / "model.ckpt").string() + " --out " + (dir / "tr").string()) == 0);

    std::ifstream mlog(dir / "tr" / "metrics.jsonl");
    std::string line;
    REQUIRE(static_cast<bool>(std::getline(mlog, line)));
    const json m = json::parse(line);
    for (const char* key : {"epoch", "lr", "L_m", "L_r", "L_base", "train_acc"})
        CHECK(m.contains(key));
    CHECK(m["L_r"].get<double>() > 0.0);

    // determinism audit for the training command
    const std::string first = read_file(dir / "tr" / "metrics.jsonl");
    CHECK(run("train --config " + cfg + " --mixer seppmix --seed 1 --pretrained " +
              (dir / "pre" / "model.ckpt").string() + " --out " + (dir / "tr").string() +
              " --overwrite") == 0);
    CHECK(read_file(dir / "tr" / "metrics.jsonl") == first);
}

TEST_CASE("train with mixer=none continues the pretrain trajectory") {
    const auto dir = std::filesystem::path(temp_dir("cli_none"));
    const auto cfg = write_tiny_config(dir);

    // 2 pretrain epochs + 1 train-none epoch == 3 pretrain epochs
    CHECK(run("pretrain --config " + cfg + " --seed 3 --out " + (dir / "pre2").string()) == 0);
    CHECK(run("train --config " + cfg + " --mixer none --seed 3 --pretrained " +
              (dir / "pre2" / "model.ckpt").string() + " --out " + (dir / "cont").string()) == 0);

    // standalone three-epoch pretrain on the same seed
    json j;
    std::ifstream(cfg) >> j;
    j["pretrain_epochs"] = 3;
    {
        std::ofstream out(dir / "config3.json");
        out << j.dump(2);
    }
    CHECK(run("pretrain --config " + (dir / "config3.json").string() + " --seed 3 --out " +
              (dir / "pre3").string()) == 0);

    // rotations default to all for the train command; disable them to match
    json j2;
    std::ifstream(cfg) >> j2;
    j2["rotations"] = "off";
    {
        std::ofstream out(dir / "config_off.json");
        out << j2.dump(2);
    }
    CHECK(run("train --config " + (dir / "config_off.json").string() +
              " --mixer none --seed 3 --pretrained " + (dir / "pre2" / "model.ckpt").string() +
              " --out " + (dir / "cont_off").string()) == 0);

    const auto full = nnet::load_checkpoint(dir / "pre3" / "model.ckpt");
    const auto cont = nnet::load_checkpoint(dir / "cont_off" / "model.ckpt");
    CHECK(full.model.theta() == cont.model.theta());
}

TEST_CASE("eval: report schema and seeded reproducibility") {
    const auto dir = std::filesystem::path(temp_dir("cli_eval"));
    const auto cfg = write_tiny_config(dir);
    CHECK(run("pretrain --config " + cfg + " --seed 2 --out " + (dir / "pre").string()) == 0);

    const std::string evalcmd = "eval --config " + cfg + " --seed 11 --pretrained " +
                                (dir / "pre" / "model.ckpt").string() + " --out " +
                                (dir / "ev").string();
    CHECK(run(evalcmd, (dir / "eval_out.txt").string()) == 0);
    const std::string printed = read_file(dir / "eval_out.txt");
    CHECK(printed.find("acc ") != std::string::npos);
    CHECK(printed.find("±") != std::string::npos);

    json report;
    std::ifstream(dir / "ev" / "eval_report.json") >> report;
    CHECK(report["episodes"] == 6);
    CHECK(report["n_way"] == 2);
    CHECK(report["seed"] == 11);
    CHECK(report.contains("checkpoint_id"));

    const std::string bytes = read_file(dir / "ev" / "eval_report.json");
    CHECK(run(evalcmd + " --overwrite") == 0);
    CHECK(read_file(dir / "ev" / "eval_report.json") == bytes);
}

TEST_CASE("config errors and ingestion errors map to exit codes") {
    const auto dir = std::filesystem::path(temp_dir("cli_errors"));
    const auto cfg = write_tiny_config(dir);

    // unknown config key -> 2
    {
        json j;
        std::ifstream(cfg) >> j;
        j["no_such_key"] = 1;
        std::ofstream out(dir / "bad.json");
        out << j.dump(2);
    }
    CHECK(run("pretrain --config " + (dir / "bad.json").string() + " --out " +
              (dir / "x1").string()) == 2);

    // bad manifest path -> 3
    {
        json j;
        std::ifstream(cfg) >> j;
        j["dataset_type"] = "folder";
        j["dataset_root"] = (dir / "nowhere").string();
        j["manifest"] = (dir / "missing_manifest.json").string();
        std::ofstream out(dir / "folder.json");
        out << j.dump(2);
    }
    CHECK(run("pretrain --config " + (dir / "folder.json").string() + " --out " +
              (dir / "x2").string()) == 3);

    // invalid flag value -> 2
    CHECK(run("train --config " + cfg + " --mixer bogus --out " + (dir / "x3").string()) == 2);
}

TEST_CASE("mix-preview artifacts and label round trip") {
    const auto dir = std::filesystem::path(temp_dir("cli_preview"));
    const auto cfg = write_tiny_config(dir);
    CHECK(run("pretrain --config " + cfg + " --seed 5 --out " + (dir / "pre").string()) == 0);
    CHECK(run("mix-preview --config " + cfg + " --mixer seppmix --seed 5 --count 3 --pretrained " +
              (dir / "pre" / "model.ckpt").string() + " --out " + (dir / "pv").string()) == 0);

    for (int p = 0; p < 3; ++p) {
        const std::string stem = "preview_" + std::to_string(p);
        for (const char* suffix : {"_xa.png", "_xb.png", "_mix.png", "_cam_a.png", "_cam_b.png"})
            CHECK(std::filesystem::exists(dir / "pv" / (stem + suffix)));

        json j;
        std::ifstream(dir / "pv" / (stem + ".json")) >> j;
        CHECK(j["mixer"] == "seppmix");
        REQUIRE(j.contains("mask_cells"));
        REQUIRE(j.contains("semantic_a"));

        // recompute the semantic proportions from the dumped mask and maps
        const auto cells = j["mask_cells"].get<std::vector<std::vector<int>>>();
        const auto sa = j["semantic_a"].get<std::vector<double>>();
        const auto sb = j["semantic_b"].get<std::vector<double>>();
        const int side = 12;
        const int grid = static_cast<int>(cells.size());
        double rho_a = 0.0, rho_b = 0.0;
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const int gy = y * grid / side, gx = x * grid / side;
                const double va = sa[static_cast<std::size_t>(y) * side + x];
                const double vb = sb[static_cast<std::size_t>(y) * side + x];
                if (cells[static_cast<std::size_t>(gy)][static_cast<std::size_t>(gx)]) rho_a += va;
                else rho_b += vb;
            }
        CHECK(j["rho_a"].get<double>() == doctest::Approx(rho_a).epsilon(1e-9));
        CHECK(j["rho_b"].get<double>() == doctest::Approx(rho_b).epsilon(1e-9));

        // label weights match the provenance weights
        const auto weights = j["label_weights"];
        const int ca = j["class_a"].get<int>();
        const int cb = j["class_b"].get<int>();
        if (ca != cb) {
            CHECK(weights[std::to_string(ca)].get<double>() ==
                  doctest::Approx(j["rho_a"].get<double>()).epsilon(1e-12));
            CHECK(weights[std::to_string(cb)].get<double>() ==
                  doctest::Approx(j["rho_b"].get<double>()).epsilon(1e-12));
        }
    }

    // patchmix previews need no checkpoint
    CHECK(run("mix-preview --config " + cfg + " --mixer patchmix --seed 5 --count 1 --out " +
              (dir / "pv2").string()) == 0);
    // mixer=none rejected
    CHECK(run("mix-preview --config " + cfg + " --mixer none --seed 5 --count 1 --out " +
              (dir / "pv3").string()) == 2);
}

TEST_CASE("make-synthetic materializes a loadable dataset") {
    const auto dir = std::filesystem::path(temp_dir("cli_synth"));
    CHECK(run("make-synthetic --classes 5 --per-class 3 --image-size 12 --seed 3 --out " +
              (dir / "ds").string() + " --train-classes 3 --val-classes 1 --test-classes 1") == 0);
    const auto manifest = datakit::load_manifest(dir / "ds" / "manifest.json");
    CHECK(manifest.train.size() == 3);
    const auto ds = datakit::load_image_folder(dir / "ds", manifest, "train");
    CHECK(ds.size() == 9);
}

TEST_CASE("compare-mixers emits the six-row table") {
    const auto dir = std::filesystem::path(temp_dir("cli_compare"));
    const auto cfg = write_tiny_config(dir);
    CHECK(run("compare-mixers --config " + cfg + " --seed 4 --out " + (dir / "cmp").string(),
              (dir / "cmp_out.txt").string()) == 0);

    json j;
    std::ifstream(dir / "cmp" / "compare.json") >> j;
    REQUIRE(j["rows"].size() == 6);
    const std::vector<std::string> want = {"none", "mixup", "cutmix", "patchmix",
                                           "seppmix_wo_r", "seppmix_w_r"};
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(j["rows"][i]["mixer"] == want[i]);
        CHECK(j["rows"][i].contains("one_shot"));
        CHECK(j["rows"][i].contains("five_shot"));
        CHECK(j["rows"][i].contains("one_shot_delta"));
    }
    CHECK(j["rows"][0]["one_shot_delta"].get<double>() == 0.0);

    const std::string md = read_file(dir / "cmp" / "compare.md");
    CHECK(md.find("| Method | 1-shot | 5-shot |") != std::string::npos);
    CHECK(md.find("SePPMix (w/ r)") != std::string::npos);
    CHECK(md.find("(+") != std::string::npos); // delta presentation

    // pipeline consistency: the none row equals a standalone
    // pretrain(P+T) + eval run on the same seed
    json jc;
    std::ifstream(cfg) >> jc;
    jc["pretrain_epochs"] = jc["pretrain_epochs"].get<int>() + jc["epochs"].get<int>();
    {
        std::ofstream out(dir / "config_full.json");
        out << jc.dump(2);
    }
    CHECK(run("pretrain --config " + (dir / "config_full.json").string() + " --seed 4 --out " +
              (dir / "pre_full").string()) == 0);
    CHECK(run("eval --config " + cfg + " --seed 4 --k-shot 1 --pretrained " +
              (dir / "pre_full" / "model.ckpt").string() + " --out " + (dir / "ev_full").string()) ==
          0);
    json report;
    std::ifstream(dir / "ev_full" / "eval_report.json") >> report;
    CHECK(report["mean_accuracy"].get<double>() ==
          doctest::Approx(j["rows"][0]["one_shot"].get<double>()).epsilon(1e-12));
}
