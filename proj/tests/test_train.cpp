#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "testutil.hpp"

#include "seppmix/datakit.hpp"
#include "seppmix/train.hpp"

using namespace seppmix;
using namespace testutil;

namespace {

nnet::TrainConfig tiny_config() {
    nnet::TrainConfig cfg;
    cfg.backbone.channels = {4};
    cfg.batch_size = 8;
    cfg.epochs = 2;
    cfg.milestones = {};
    cfg.mixer = MixerKind::none;
    cfg.rotations = nnet::RotationsMode::off;
    cfg.hflip = false;
    cfg.seed = 0;
    return cfg;
}

datakit::LabeledDataset tiny_dataset(int classes = 4, int per_class = 6, int size = 12) {
    return datakit::make_synthetic(classes, per_class, size, 3);
}

} // namespace

TEST_CASE("config validation") {
    auto cfg = tiny_config();
    cfg.milestones = {10, 10};
    CHECK_THROWS_AS(nnet::validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.epochs = 0;
    CHECK_THROWS_AS(nnet::validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.mix_probability = 1.5;
    CHECK_THROWS_AS(nnet::validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(nnet::validate(cfg), ConfigError);
}

TEST_CASE("learning-rate schedule") {
    nnet::TrainConfig cfg;
    CHECK(nnet::lr_at(cfg, 0) == 0.05);
    CHECK(nnet::lr_at(cfg, 29) == 0.05);
    CHECK(nnet::lr_at(cfg, 30) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(nnet::lr_at(cfg, 44) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(nnet::lr_at(cfg, 45) == doctest::Approx(0.0005).epsilon(1e-12));
    CHECK(nnet::lr_at(cfg, 59) == doctest::Approx(0.0005).epsilon(1e-12));
    CHECK(nnet::lr_at(cfg, 60) == doctest::Approx(0.00005).epsilon(1e-12));
    CHECK(nnet::lr_at(cfg, 64) == doctest::Approx(0.00005).epsilon(1e-12));
}

TEST_CASE("recorded lr values across a full 65-epoch run") {
    auto ds = datakit::make_synthetic(2, 4, 8, 1);
    auto cfg = tiny_config();
    cfg.backbone.channels = {3};
    cfg.epochs = 65;
    cfg.milestones = {30, 45, 60};
    cfg.batch_size = 8;
    const auto result = nnet::pretrain_for_cams(ds, cfg);
    REQUIRE(result.metrics.size() == 65);
    for (const auto& m : result.metrics) {
        const double want = m.epoch < 30 ? 0.05 : m.epoch < 45 ? 0.005 : m.epoch < 60 ? 0.0005 : 0.00005;
        CHECK(m.lr == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("overfit a 16-image subset") {
    auto ds = datakit::make_synthetic(4, 4, 16, 7);
    nnet::TrainConfig cfg;
    cfg.backbone.channels = {8, 16};
    cfg.batch_size = 16;
    cfg.epochs = 200;
    cfg.lr = 0.02;
    cfg.milestones = {};
    cfg.mixer = MixerKind::none;
    cfg.rotations = nnet::RotationsMode::off;
    cfg.hflip = false;
    cfg.seed = 5;
    const auto result = nnet::pretrain_for_cams(ds, cfg);
    CHECK(result.metrics.back().train_acc == 1.0);
    // descent sanity
    CHECK(result.metrics[1].l_base < result.metrics[0].l_base);
}

TEST_CASE("seeded determinism of full runs") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    cfg.epochs = 3;
    const auto a = nnet::pretrain_for_cams(ds, cfg);
    const auto b = nnet::pretrain_for_cams(ds, cfg);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].l_base == b.metrics[i].l_base);
        CHECK(a.metrics[i].train_acc == b.metrics[i].train_acc);
    }
    CHECK(a.model.theta() == b.model.theta());
}

TEST_CASE("resume reproduces the uninterrupted trajectory") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    cfg.epochs = 4;
    const auto full = nnet::pretrain_for_cams(ds, cfg);

    cfg.epochs = 2;
    const auto first = nnet::pretrain_for_cams(ds, cfg);
    nnet::Checkpoint mid{first.model, first.momentum, first.epoch, ""};
    auto cfg2 = cfg;
    cfg2.epochs = 2; // epochs 2..3, absolute indexing
    const auto second = nnet::train(ds, cfg2, &mid);

    REQUIRE(second.metrics.size() == 2);
    CHECK(second.metrics[0].epoch == 2);
    CHECK(second.metrics[0].l_base == full.metrics[2].l_base);
    CHECK(second.metrics[1].l_base == full.metrics[3].l_base);
    CHECK(second.model.theta() == full.model.theta());
}

TEST_CASE("mixer=none with rotations off matches pretraining exactly") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    cfg.epochs = 2;
    const auto pre = nnet::pretrain_for_cams(ds, cfg);

    auto cfg2 = cfg;
    cfg2.mixer = MixerKind::none;
    cfg2.rotations = nnet::RotationsMode::off;
    const auto tr = nnet::train(ds, cfg2, nullptr);
    CHECK(tr.model.theta() == pre.model.theta());
    for (std::size_t i = 0; i < tr.metrics.size(); ++i)
        CHECK(tr.metrics[i].l_base == pre.metrics[i].l_base);
}

TEST_CASE("seppmix requires a CAM source") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    cfg.mixer = MixerKind::seppmix;
    CHECK_THROWS_AS(nnet::train(ds, cfg, nullptr), ConfigError);
}

TEST_CASE("empty dataset rejected") {
    datakit::LabeledDataset empty;
    CHECK_THROWS_AS(nnet::train(empty, tiny_config(), nullptr), InputDomainError);
}

TEST_CASE("mixed training runs and logs both loss terms") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    const auto pre = nnet::pretrain_for_cams(ds, cfg);
    nnet::Checkpoint start{pre.model, pre.momentum, pre.epoch, ""};

    auto mix_cfg = cfg;
    mix_cfg.mixer = MixerKind::seppmix;
    mix_cfg.rotations = nnet::RotationsMode::all;
    mix_cfg.epochs = 1;
    const auto result = nnet::train(ds, mix_cfg, &start);
    REQUIRE(result.metrics.size() == 1);
    CHECK(result.metrics[0].l_r > 0.0);
    CHECK(result.metrics[0].l_base ==
          doctest::Approx(mix_cfg.loss_weights.alpha * result.metrics[0].l_m +
                          mix_cfg.loss_weights.beta * result.metrics[0].l_r)
              .epsilon(1e-12));

    // beta = 0 with rotations off: l_base collapses to alpha * l_m
    auto ablated = mix_cfg;
    ablated.rotations = nnet::RotationsMode::off;
    ablated.loss_weights.beta = 0.0;
    const auto ab = nnet::train(ds, ablated, &start);
    CHECK(ab.metrics[0].l_r == 0.0);
    CHECK(ab.metrics[0].l_base == ab.metrics[0].l_m);
}

TEST_CASE("every mixer trains for an epoch") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    const auto pre = nnet::pretrain_for_cams(ds, cfg);
    nnet::Checkpoint start{pre.model, pre.momentum, pre.epoch, ""};
    for (MixerKind mixer : {MixerKind::mixup, MixerKind::cutmix, MixerKind::patchmix,
                            MixerKind::seppmix}) {
        auto c = cfg;
        c.mixer = mixer;
        c.epochs = 1;
        c.rotations = nnet::RotationsMode::all;
        const auto r = nnet::train(ds, c, &start);
        CHECK(std::isfinite(r.metrics[0].l_base));
    }
    // sampled rotations path
    auto c = cfg;
    c.mixer = MixerKind::patchmix;
    c.rotations = nnet::RotationsMode::sampled;
    c.epochs = 1;
    CHECK(std::isfinite(nnet::train(ds, c, &start).metrics[0].l_base));
}

TEST_CASE("worker count does not change results for fixed chunking") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    cfg.epochs = 2;
    cfg.workers = 1;
    const auto one = nnet::pretrain_for_cams(ds, cfg);
    cfg.workers = 2;
    const auto two = nnet::pretrain_for_cams(ds, cfg);
    // reductions reassociate across workers; trajectories agree to rounding
    for (std::size_t i = 0; i < one.metrics.size(); ++i)
        CHECK(one.metrics[i].l_base == doctest::Approx(two.metrics[i].l_base).epsilon(1e-9));
}

TEST_CASE("frozen head leaves the classification rows untouched") {
    auto ds = tiny_dataset();
    auto cfg = tiny_config();
    const auto pre = nnet::pretrain_for_cams(ds, cfg);
    nnet::Checkpoint start{pre.model, pre.momentum, pre.epoch, ""};

    auto c = cfg;
    c.freeze_head = true;
    c.epochs = 1;
    const auto r = nnet::train(ds, c, &start);
    const auto before_w = start.model.param("cls.weight");
    const auto after_w = r.model.param("cls.weight");
    for (std::size_t i = 0; i < before_w.size(); ++i) CHECK(before_w[i] == after_w[i]);
    const auto before_c = start.model.param("block0.conv.weight");
    const auto after_c = r.model.param("block0.conv.weight");
    bool changed = false;
    for (std::size_t i = 0; i < before_c.size(); ++i)
        if (before_c[i] != after_c[i]) changed = true;
    CHECK(changed);
}

TEST_CASE("divergence raises a numerical error") {
    auto ds = tiny_dataset(2, 4, 8);
    auto cfg = tiny_config();
    cfg.backbone.channels = {3};
    cfg.lr = 1e14;
    cfg.epochs = 50;
    CHECK_THROWS_AS(nnet::pretrain_for_cams(ds, cfg), NumericalError);
}
