#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "seppmix/datakit.hpp"
#include "seppmix/losses.hpp"
#include "seppmix/nnet.hpp"

namespace seppmix::nnet {

// all: every sample contributes its four rotations per step.
// sampled: one random rotation per sample (memory saver; loss magnitudes
// differ from all-mode accordingly).
// off: no rotation task, images pass through unrotated.
enum class RotationsMode { all, sampled, off };

// Which model supplies the semantic maps during mixed training: the live
// model per batch, a snapshot taken at each epoch start, or the loaded
// stage-0 model.
enum class CamRefresh { batch, epoch, frozen };

struct TrainConfig {
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int epochs = 65; // epochs to run in this invocation
    std::vector<int> milestones{30, 45, 60};
    double lr_decay = 0.1;
    int batch_size = 64;
    int grid_n = 2;
    std::uint64_t seed = 0;
    MixerKind mixer = MixerKind::seppmix;
    LossWeights loss_weights{};
    RotationsMode rotations = RotationsMode::all;
    LmReduction lm_reduction = LmReduction::sum;
    CamRefresh cam_refresh = CamRefresh::batch;
    double mix_probability = 1.0; // per-batch probability of applying the mixer
    double mixup_alpha = 1.0;
    double cutmix_alpha = 1.0;
    bool hflip = true;
    double dropout = 0.0; // embedding dropout, off by default
    bool freeze_head = false;
    BackboneConfig backbone{};
    int workers = 1;
};

void validate(const TrainConfig& cfg);

// Milestone schedule over absolute epoch indices: lr * decay^(milestones
// passed). Milestones beyond the range of a short run simply never fire.
double lr_at(const TrainConfig& cfg, int epoch);

struct EpochMetrics {
    int epoch = 0;
    double lr = 0.0;
    double l_m = 0.0;
    double l_r = 0.0;
    double l_base = 0.0;
    double train_acc = 0.0;
};

struct Checkpoint {
    Model model;
    std::vector<double> momentum;
    int epoch = 0; // absolute epochs completed
    std::string id;
};

// Binary blob: magic, architecture, epoch, then named little-endian double
// tensors (parameters plus optimizer momentum). Returns the content hash
// used as the checkpoint id.
std::string save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

using MetricsHook = std::function<void(const EpochMetrics&)>;

struct TrainResult {
    Model model;
    std::vector<double> momentum;
    int epoch = 0; // absolute epochs completed
    std::vector<EpochMetrics> metrics;
};

// Runs cfg.epochs epochs of the configured objective, resuming from start
// when given (parameters, momentum and absolute epoch carry over, so a
// resumed run reproduces an uninterrupted one exactly). The seppmix mixer
// requires start as its CAM source. Per-epoch randomness derives from
// (seed, stream, absolute epoch, batch), never from a shared sequential
// stream, and single-worker runs are byte-reproducible.
TrainResult train(const datakit::LabeledDataset& base, const TrainConfig& cfg,
                  const Checkpoint* start, const MetricsHook& hook = {});

// Stage-0 bootstrap: plain supervised cross-entropy, no mixing, no
// rotations. Provides the classifier rows that seed the semantic maps.
TrainResult pretrain_for_cams(const datakit::LabeledDataset& base, const TrainConfig& cfg,
                              const MetricsHook& hook = {});

// Semantic map of an image under a CAM-source model, at image resolution.
SemanticMap semantic_map_for(const Model& cam_source, const Image& img, int class_id);

Image hflip_image(const Image& in);

} // namespace seppmix::nnet
