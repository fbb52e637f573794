#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seppmix/types.hpp"

namespace seppmix::nnet {

// Desk-scale stand-in for a deeper residual backbone: a stack of
// conv3x3 -> instance norm -> relu -> 2x2 maxpool blocks followed by global
// average pooling. The embedding length equals the last block's channel
// count, and the classification head's weight rows double as the CAM
// classifier weights.
struct BackboneConfig {
    std::vector<int> channels{16, 32, 64, 64};
    double norm_eps = 1e-5;
};

struct ParamView {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::vector<int> shape;
};

class Model {
public:
    Model() = default;
    // Builds the parameter layout zero-initialized; call init_params to
    // randomize.
    Model(BackboneConfig cfg, int num_classes);

    void init_params(std::uint64_t seed);

    int num_classes() const { return num_classes_; }
    int embedding_dim() const { return cfg_.channels.back(); }
    const BackboneConfig& config() const { return cfg_; }

    std::vector<double>& theta() { return theta_; }
    const std::vector<double>& theta() const { return theta_; }
    const std::vector<ParamView>& params() const { return views_; }
    std::span<double> param(const std::string& name);
    std::span<const double> param(const std::string& name) const;
    // [offset, offset+size) of the classification head inside theta.
    std::pair<std::size_t, std::size_t> cls_range() const;

    // Reusable per-item forward state; workers own one each.
    struct BlockCache {
        int h = 0, w = 0;   // block input dims
        int oh = 0, ow = 0; // pooled dims
        std::vector<double> in_pad;
        std::vector<double> conv_out;
        std::vector<double> mu, invstd;
        std::vector<double> norm_out;
        std::vector<double> act;
        std::vector<int> argmax;
        std::vector<double> pooled;
    };
    struct Cache {
        std::vector<BlockCache> blocks;
        std::vector<double> embedding;
        int feat_h = 0, feat_w = 0;
    };

    // Image -> pooled embedding, caching every intermediate needed by
    // backward. Deterministic; identical across batch compositions.
    void forward(const Image& img, Cache& cache) const;
    // d(embedding) -> parameter gradients, accumulated into grad (same
    // layout as theta).
    void backward(const Cache& cache, const double* d_embedding, double* grad) const;

    void cls_logits(const double* emb, double* out) const;
    void rot_logits(const double* emb, double* out) const;
    void cls_backward(const double* emb, const double* d_logits, double* grad, double* d_emb) const;
    void rot_backward(const double* emb, const double* d_logits, double* grad, double* d_emb) const;

    struct Features {
        FeatureStack maps;
        std::vector<double> embedding;
    };
    Features forward_features(const Image& img) const;
    std::vector<double> embed(const Image& img) const;
    ClassifierWeights classifier_weights() const;

private:
    struct ConvOff {
        std::size_t w = 0, b = 0;
        int in_c = 0, out_c = 0;
    };
    struct NormOff {
        std::size_t g = 0, b = 0;
        int c = 0;
    };
    struct LinOff {
        std::size_t w = 0, b = 0;
        int in = 0, out = 0;
    };

    std::size_t add_view(const std::string& name, std::vector<int> shape);
    void linear_forward(const LinOff& lin, const double* in, double* out) const;
    void linear_backward(const LinOff& lin, const double* in, const double* d_out,
                         double* grad, double* d_in) const;

    BackboneConfig cfg_;
    int num_classes_ = 0;
    std::vector<double> theta_;
    std::vector<ParamView> views_;
    std::vector<ConvOff> conv_;
    std::vector<NormOff> norm_;
    LinOff cls_{}, rot_{};
};

// Index of the largest logit, ties toward the lowest index.
int argmax(std::span<const double> v);

} // namespace seppmix::nnet
