#include "seppmix/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "seppmix/cam.hpp"
#include "seppmix/kernels.hpp"
#include "seppmix/mixkit.hpp"
#include "seppmix/parallel.hpp"
#include "seppmix/rotation.hpp"

namespace seppmix::nnet {
namespace {

struct WorkItem {
    Image image;
    LabelDistribution label;
    int rot_target = -1; // -1: no rotation-loss contribution
};

std::string fnv1a_hex(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(buf, bits);
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t off = 0;

    void need(std::size_t n) const {
        if (off + n > buf.size()) throw IngestError("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[off + static_cast<std::size_t>(i)]) << (8 * i);
        off += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[off + static_cast<std::size_t>(i)]) << (8 * i);
        off += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + off), n);
        off += n;
        return s;
    }
};

constexpr char kCkptMagic[8] = {'S', 'P', 'M', 'X', 'C', 'K', 'P', '1'};

} // namespace

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be positive");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (cfg.grid_n < 1) throw ConfigError("grid_n must be >= 1");
    if (cfg.lr <= 0.0) throw ConfigError("lr must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
    if (cfg.weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (cfg.loss_weights.alpha < 0.0 || cfg.loss_weights.beta < 0.0)
        throw ConfigError("loss weights must be non-negative");
    if (cfg.mix_probability < 0.0 || cfg.mix_probability > 1.0)
        throw ConfigError("mix_probability must lie in [0, 1]");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    if (cfg.backbone.channels.empty()) throw ConfigError("backbone needs at least one block");
    for (std::size_t i = 1; i < cfg.milestones.size(); ++i)
        if (cfg.milestones[i] <= cfg.milestones[i - 1])
            throw ConfigError("milestones must be strictly increasing");
}

double lr_at(const TrainConfig& cfg, int epoch) {
    double lr = cfg.lr;
    for (int m : cfg.milestones)
        if (epoch >= m) lr *= cfg.lr_decay;
    return lr;
}

Image hflip_image(const Image& in) {
    Image out(in.height, in.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < in.height; ++y)
            for (int x = 0; x < in.width; ++x)
                out.at(c, y, x) = in.at(c, y, in.width - 1 - x);
    return out;
}

SemanticMap semantic_map_for(const Model& cam_source, const Image& img, int class_id) {
    const auto feats = cam_source.forward_features(img);
    const auto weights = cam_source.classifier_weights();
    const Map2D raw = cam::compute_cam(feats.maps, weights, class_id, img.height, img.width);
    return cam::normalize_to_semantic_map(raw);
}

TrainResult train(const datakit::LabeledDataset& base, const TrainConfig& cfg,
                  const Checkpoint* start, const MetricsHook& hook) {
    validate(cfg);
    if (base.size() == 0) throw InputDomainError("train: empty dataset");
    const int num_classes = base.class_count();
    if (num_classes < 2) throw InputDomainError("train: need at least two classes");
    if (cfg.mixer == MixerKind::seppmix && start == nullptr)
        throw ConfigError("mixer=seppmix requires a pretrained CAM source");

    TrainResult result;
    int start_epoch = 0;
    if (start) {
        if (start->model.num_classes() != num_classes)
            throw ConfigError("checkpoint class count differs from dataset");
        result.model = start->model;
        result.momentum = start->momentum;
        start_epoch = start->epoch;
    } else {
        result.model = Model(cfg.backbone, num_classes);
        result.model.init_params(derive_seed(cfg.seed, {kStreamInit}));
        result.momentum.assign(result.model.theta().size(), 0.0);
    }
    if (result.momentum.size() != result.model.theta().size())
        throw ConfigError("checkpoint momentum size differs from parameters");

    Model& model = result.model;
    const Model frozen_cam = start ? start->model : Model();
    const auto& k = kernels::ops();
    const int n = base.size();
    const auto [cls_off, cls_len] = model.cls_range();
    const std::size_t theta_len = model.theta().size();

    const int workers = std::max(1, cfg.workers);
    std::vector<std::vector<double>> worker_grads(static_cast<std::size_t>(workers));
    for (auto& g : worker_grads) g.assign(theta_len, 0.0);

    for (int epoch = start_epoch; epoch < start_epoch + cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg, epoch);
        auto order = derive_rng(cfg.seed, {kStreamShuffle, static_cast<std::uint64_t>(epoch)})
                         .permutation(n);

        Model epoch_cam;
        if (cfg.mixer == MixerKind::seppmix && cfg.cam_refresh == CamRefresh::epoch) epoch_cam = model;

        double sum_lm = 0.0, sum_lr = 0.0;
        long correct = 0, seen = 0;

        const int num_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
        for (int b = 0; b < num_batches; ++b) {
            const int lo = b * cfg.batch_size;
            const int hi = std::min(n, lo + cfg.batch_size);
            const int bs = hi - lo;

            // --- batch preparation (single-threaded draws, pinned order) ---
            std::vector<Image> images(static_cast<std::size_t>(bs));
            std::vector<int> labels(static_cast<std::size_t>(bs));
            {
                auto flip_rng = derive_rng(cfg.seed, {kStreamFlip, static_cast<std::uint64_t>(epoch),
                                                      static_cast<std::uint64_t>(b)});
                for (int i = 0; i < bs; ++i) {
                    const auto& item = base.items[static_cast<std::size_t>(order[static_cast<std::size_t>(lo + i)])];
                    labels[static_cast<std::size_t>(i)] = item.class_id;
                    const bool flip = cfg.hflip && flip_rng.bernoulli(0.5);
                    images[static_cast<std::size_t>(i)] = flip ? hflip_image(item.image) : item.image;
                }
            }

            std::vector<MixedSample> mixed(static_cast<std::size_t>(bs));
            bool apply_mix = false;
            auto mix_rng = derive_rng(cfg.seed, {kStreamMix, static_cast<std::uint64_t>(epoch),
                                                 static_cast<std::uint64_t>(b)});
            if (cfg.mixer != MixerKind::none) apply_mix = mix_rng.uniform01() < cfg.mix_probability;

            if (apply_mix) {
                const auto partner = mix_rng.permutation(bs);
                std::vector<SemanticMap> maps;
                if (cfg.mixer == MixerKind::seppmix) {
                    const Model* src = cfg.cam_refresh == CamRefresh::batch ? &model
                                       : cfg.cam_refresh == CamRefresh::epoch ? &epoch_cam
                                                                              : &frozen_cam;
                    const auto weights = src->classifier_weights();
                    maps.resize(static_cast<std::size_t>(bs));
                    parallel_for(static_cast<std::size_t>(bs), workers,
                                 [&](std::size_t lo_i, std::size_t hi_i, int) {
                                     for (std::size_t i = lo_i; i < hi_i; ++i) {
                                         const auto feats = src->forward_features(images[i]);
                                         const Map2D raw = cam::compute_cam(
                                             feats.maps, weights, labels[i],
                                             images[i].height, images[i].width);
                                         maps[i] = cam::normalize_to_semantic_map(raw);
                                     }
                                 });
                }
                for (int i = 0; i < bs; ++i) {
                    const auto ii = static_cast<std::size_t>(i);
                    const auto jj = static_cast<std::size_t>(partner[ii]);
                    switch (cfg.mixer) {
                        case MixerKind::seppmix:
                            mixed[ii] = mixkit::seppmix(images[ii], labels[ii], images[jj], labels[jj],
                                                        maps[ii], maps[jj], num_classes, cfg.grid_n,
                                                        mix_rng);
                            break;
                        case MixerKind::patchmix:
                            mixed[ii] = mixkit::patchmix(images[ii], labels[ii], images[jj], labels[jj],
                                                         num_classes, cfg.grid_n, mix_rng);
                            break;
                        case MixerKind::mixup:
                            mixed[ii] = mixkit::mixup(images[ii], labels[ii], images[jj], labels[jj],
                                                      num_classes,
                                                      mix_rng.beta(cfg.mixup_alpha, cfg.mixup_alpha));
                            break;
                        case MixerKind::cutmix:
                            mixed[ii] = mixkit::cutmix(images[ii], labels[ii], images[jj], labels[jj],
                                                       num_classes, mix_rng, cfg.cutmix_alpha);
                            break;
                        case MixerKind::none: break;
                    }
                    mixed[ii].prov.source_a = order[static_cast<std::size_t>(lo + i)];
                    mixed[ii].prov.source_b = order[static_cast<std::size_t>(lo + partner[ii])];
                }
            } else {
                for (int i = 0; i < bs; ++i) {
                    const auto ii = static_cast<std::size_t>(i);
                    mixed[ii].image = std::move(images[ii]);
                    mixed[ii].label = mixkit::one_hot(labels[ii], num_classes);
                    mixed[ii].prov.class_a = labels[ii];
                    mixed[ii].prov.rho_a = 1.0;
                }
            }

            std::vector<WorkItem> work;
            if (cfg.rotations == RotationsMode::all) {
                work.reserve(static_cast<std::size_t>(bs) * 4);
                for (const auto& s : mixed)
                    for (auto& r : rotation::expand_with_rotations(s))
                        work.push_back({std::move(r.image), std::move(r.label), r.rotation_target});
            } else if (cfg.rotations == RotationsMode::sampled) {
                auto rot_rng = derive_rng(cfg.seed, {kStreamRotation, static_cast<std::uint64_t>(epoch),
                                                     static_cast<std::uint64_t>(b)});
                work.reserve(static_cast<std::size_t>(bs));
                for (const auto& s : mixed) {
                    const int r = static_cast<int>(rot_rng.uniform_int(4));
                    work.push_back({rotation::rotate(s.image, static_cast<rotation::RotationAngle>(r)),
                                    s.label, r});
                }
            } else {
                work.reserve(static_cast<std::size_t>(bs));
                for (auto& s : mixed) work.push_back({std::move(s.image), std::move(s.label), -1});
            }

            // Per-work-item loss weights (metrics stay unscaled by alpha/beta).
            const double inv_bs = 1.0 / static_cast<double>(bs);
            const double w_m = cfg.rotations == RotationsMode::all && cfg.lm_reduction == LmReduction::mean
                                   ? 0.25 * inv_bs
                                   : inv_bs;
            const double w_r = cfg.rotations == RotationsMode::all ? 0.25 * inv_bs : inv_bs;
            const bool rot_on = cfg.rotations != RotationsMode::off;
            const bool use_dropout = cfg.dropout > 0.0;

            // --- forward/backward over work items ---
            std::vector<double> part_lm(static_cast<std::size_t>(workers), 0.0);
            std::vector<double> part_lr(static_cast<std::size_t>(workers), 0.0);
            std::vector<long> part_correct(static_cast<std::size_t>(workers), 0);
            parallel_for(work.size(), workers, [&](std::size_t lo_i, std::size_t hi_i, int w_idx) {
                auto& grad = worker_grads[static_cast<std::size_t>(w_idx)];
                std::fill(grad.begin(), grad.end(), 0.0);
                Model::Cache cache;
                std::vector<double> emb, d_emb, mask;
                std::vector<double> cls_z(static_cast<std::size_t>(num_classes)), d_cls(cls_z.size());
                std::vector<double> rot_z(4), d_rot(4);
                for (std::size_t i = lo_i; i < hi_i; ++i) {
                    const WorkItem& wi = work[i];
                    model.forward(wi.image, cache);
                    emb = cache.embedding;
                    if (use_dropout) {
                        auto drng = derive_rng(cfg.seed, {kStreamDropout, static_cast<std::uint64_t>(epoch),
                                                          static_cast<std::uint64_t>(b),
                                                          static_cast<std::uint64_t>(i)});
                        mask.resize(emb.size());
                        const double keep = 1.0 - cfg.dropout;
                        for (auto& m : mask) m = drng.bernoulli(keep) ? 1.0 / keep : 0.0;
                        for (std::size_t c = 0; c < emb.size(); ++c) emb[c] *= mask[c];
                    }
                    model.cls_logits(emb.data(), cls_z.data());
                    part_lm[static_cast<std::size_t>(w_idx)] += w_m * soft_cross_entropy(cls_z, wi.label);
                    if (argmax(cls_z) == wi.label.argmax()) ++part_correct[static_cast<std::size_t>(w_idx)];

                    d_emb.assign(emb.size(), 0.0);
                    std::fill(d_cls.begin(), d_cls.end(), 0.0);
                    soft_cross_entropy_grad(cls_z, wi.label, cfg.loss_weights.alpha * w_m, d_cls.data());
                    model.cls_backward(emb.data(), d_cls.data(), grad.data(), d_emb.data());

                    if (rot_on && wi.rot_target >= 0) {
                        model.rot_logits(emb.data(), rot_z.data());
                        LabelDistribution t(4);
                        t.weights[static_cast<std::size_t>(wi.rot_target)] = 1.0;
                        part_lr[static_cast<std::size_t>(w_idx)] += w_r * soft_cross_entropy(rot_z, t);
                        std::fill(d_rot.begin(), d_rot.end(), 0.0);
                        soft_cross_entropy_grad(rot_z, t, cfg.loss_weights.beta * w_r, d_rot.data());
                        model.rot_backward(emb.data(), d_rot.data(), grad.data(), d_emb.data());
                    }
                    if (use_dropout)
                        for (std::size_t c = 0; c < d_emb.size(); ++c) d_emb[c] *= mask[c];
                    model.backward(cache, d_emb.data(), grad.data());
                }
            });

            // Fixed-order reduction keeps runs reproducible per worker count.
            const std::size_t active = std::min<std::size_t>(static_cast<std::size_t>(workers), work.size());
            double l_m = 0.0, l_r = 0.0;
            for (std::size_t w = 0; w < active; ++w) {
                l_m += part_lm[w];
                l_r += part_lr[w];
                correct += part_correct[w];
                if (w > 0) k.add(theta_len, worker_grads[w].data(), worker_grads[0].data());
            }
            seen += static_cast<long>(work.size());
            const double l_base = total_loss(l_m, l_r, cfg.loss_weights);
            if (!std::isfinite(l_base))
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(b));
            sum_lm += l_m * bs;
            sum_lr += l_r * bs;

            double* theta = model.theta().data();
            double* grad = worker_grads[0].data();
            double* mom = result.momentum.data();
            if (cfg.freeze_head) {
                k.sgd_step(cls_off, theta, grad, mom, lr, cfg.momentum, cfg.weight_decay);
                const std::size_t rest = cls_off + cls_len;
                k.sgd_step(theta_len - rest, theta + rest, grad + rest, mom + rest, lr, cfg.momentum,
                           cfg.weight_decay);
            } else {
                k.sgd_step(theta_len, theta, grad, mom, lr, cfg.momentum, cfg.weight_decay);
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.lr = lr;
        m.l_m = sum_lm / static_cast<double>(n);
        m.l_r = sum_lr / static_cast<double>(n);
        m.l_base = total_loss(m.l_m, m.l_r, cfg.loss_weights);
        m.train_acc = seen > 0 ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
        result.metrics.push_back(m);
        if (hook) hook(m);
    }
    result.epoch = start_epoch + cfg.epochs;
    return result;
}

TrainResult pretrain_for_cams(const datakit::LabeledDataset& base, const TrainConfig& cfg,
                              const MetricsHook& hook) {
    TrainConfig plain = cfg;
    plain.mixer = MixerKind::none;
    plain.rotations = RotationsMode::off;
    return train(base, plain, nullptr, hook);
}

std::string save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kCkptMagic, kCkptMagic + 8);
    put_u32(buf, 1);
    put_u32(buf, static_cast<std::uint32_t>(ckpt.model.num_classes()));
    const auto& channels = ckpt.model.config().channels;
    put_u32(buf, static_cast<std::uint32_t>(channels.size()));
    for (int c : channels) put_u32(buf, static_cast<std::uint32_t>(c));
    put_f64(buf, ckpt.model.config().norm_eps);
    put_u32(buf, static_cast<std::uint32_t>(ckpt.epoch));

    const auto& views = ckpt.model.params();
    put_u32(buf, static_cast<std::uint32_t>(views.size() + 1));
    for (const auto& v : views) {
        put_u32(buf, static_cast<std::uint32_t>(v.name.size()));
        buf.insert(buf.end(), v.name.begin(), v.name.end());
        put_u64(buf, v.size);
        for (std::size_t i = 0; i < v.size; ++i) put_f64(buf, ckpt.model.theta()[v.offset + i]);
    }
    const std::string mom_name = "opt.momentum";
    put_u32(buf, static_cast<std::uint32_t>(mom_name.size()));
    buf.insert(buf.end(), mom_name.begin(), mom_name.end());
    put_u64(buf, ckpt.momentum.size());
    for (double v : ckpt.momentum) put_f64(buf, v);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write checkpoint '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    return fnv1a_hex(buf);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open checkpoint '" + path.string() + "'");
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r{buf};
    if (r.str(8) != std::string(kCkptMagic, 8)) throw IngestError("checkpoint: bad magic");
    if (r.u32() != 1) throw IngestError("checkpoint: unsupported version");
    const int num_classes = static_cast<int>(r.u32());
    BackboneConfig bc;
    bc.channels.resize(r.u32());
    for (auto& c : bc.channels) c = static_cast<int>(r.u32());
    bc.norm_eps = r.f64();
    Checkpoint ckpt;
    ckpt.epoch = static_cast<int>(r.u32());
    ckpt.model = Model(bc, num_classes);
    const std::uint32_t n_tensors = r.u32();
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
        const std::string name = r.str(r.u32());
        const std::uint64_t count = r.u64();
        if (name == "opt.momentum") {
            ckpt.momentum.resize(count);
            for (auto& v : ckpt.momentum) v = r.f64();
        } else {
            auto span = ckpt.model.param(name);
            if (span.size() != count) throw IngestError("checkpoint: size mismatch for '" + name + "'");
            for (auto& v : span) v = r.f64();
        }
    }
    if (ckpt.momentum.size() != ckpt.model.theta().size())
        throw IngestError("checkpoint: missing or mismatched optimizer state");
    ckpt.id = fnv1a_hex(buf);
    return ckpt;
}

} // namespace seppmix::nnet
