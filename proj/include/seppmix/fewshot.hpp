#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seppmix/datakit.hpp"
#include "seppmix/nnet.hpp"
#include "seppmix/random.hpp"

namespace seppmix::fewshot {

// One N-way K-shot task. Labels are episode-local in class draw order;
// support and query are disjoint item sets.
struct Episode {
    int n_way = 0, k_shot = 0, h_query = 0;
    std::vector<int> classes;       // dataset class ids in draw order
    std::vector<int> support_items; // dataset item indices
    std::vector<int> query_items;
    std::vector<int> support_labels; // 0..n_way-1
    std::vector<int> query_labels;
};

Episode sample_episode(const datakit::LabeledDataset& ds, int n_way, int k_shot, int h_query,
                       SeededRng& rng);

// Pooled embeddings of the requested items; optionally L2-normalized.
// Item-parallel and batch-independent, so results do not depend on workers.
std::vector<std::vector<double>> extract_embeddings(const nnet::Model& model,
                                                    const datakit::LabeledDataset& ds,
                                                    std::span<const int> item_indices,
                                                    bool l2_normalize, int workers = 1);

// Multinomial logistic regression over frozen embeddings: minimizes
// sum-of-cross-entropies plus l2_strength * ||W||^2 (bias unpenalized) by
// deterministic gradient descent with Armijo backtracking, zero init,
// stopping at gradient norm < 1e-6 or 1000 iterations.
struct LinearProbe {
    int n_way = 0;
    int dim = 0;
    std::vector<double> weights; // n_way x dim
    std::vector<double> bias;    // n_way
    bool degenerate = false;     // all support embeddings identical
    int iterations = 0;
    double grad_norm = 0.0;

    void logits(const double* x, double* out) const;
};

LinearProbe fit_linear_probe(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                             int n_way, double l2_strength);

// Fraction of argmax-correct predictions; ties break toward the lowest
// class index.
double evaluate_episode(const LinearProbe& probe, const std::vector<std::vector<double>>& x_query,
                        const std::vector<int>& y_query);

struct EvalConfig {
    int n_way = 5;
    int k_shot = 1;
    int h_query = 15;
    int episodes = 600;
    double probe_l2 = 1.0;
    bool l2_normalize = true;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct EvalReport {
    int n_way = 0, k_shot = 0, h_query = 0, episodes = 0;
    double mean_accuracy = 0.0;
    double ci95_halfwidth = 0.0;
    std::uint64_t seed = 0;
    std::string checkpoint_id;
    int degenerate_episodes = 0;
    std::vector<double> per_episode;
};

// Episode i draws from SeededRng(seed ^ i), so reports are identical for
// any worker count. Embeddings are extracted once per item up front.
EvalReport evaluate(const nnet::Model& model, const datakit::LabeledDataset& novel,
                    const EvalConfig& cfg, const std::string& checkpoint_id = "");

// 1.96 * sample standard deviation / sqrt(n); 0 for n < 2.
double ci95_halfwidth(std::span<const double> values);

// Percent formatting with two decimals: "66.98 ± 0.81".
std::string format_accuracy(double mean, double ci);

std::string report_to_json(const EvalReport& report);

} // namespace seppmix::fewshot
