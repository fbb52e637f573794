#include "seppmix/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "seppmix/kernels.hpp"
#include "seppmix/parallel.hpp"

namespace seppmix::fewshot {
namespace {

// First k elements of a seeded partial Fisher-Yates over 0..n-1.
std::vector<int> draw_without_replacement(int n, int k, SeededRng& rng) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

struct ProbeObjective {
    const std::vector<std::vector<double>>& x;
    const std::vector<int>& y;
    int n_way;
    int dim;
    double l2;

    double value(const std::vector<double>& theta) const {
        const double* w = theta.data();
        const double* b = theta.data() + static_cast<std::size_t>(n_way) * dim;
        double f = 0.0;
        std::vector<double> z(static_cast<std::size_t>(n_way));
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (int o = 0; o < n_way; ++o)
                z[static_cast<std::size_t>(o)] =
                    b[o] + kernels::ops().dot(static_cast<std::size_t>(dim),
                                              w + static_cast<std::size_t>(o) * dim, x[i].data());
            double m = z[0];
            for (double v : z) m = std::max(m, v);
            double s = 0.0;
            for (double v : z) s += std::exp(v - m);
            f += m + std::log(s) - z[static_cast<std::size_t>(y[i])];
        }
        for (std::size_t k = 0; k < static_cast<std::size_t>(n_way) * dim; ++k) f += l2 * w[k] * w[k];
        return f;
    }

    // Returns value; fills grad (same layout as theta).
    double value_grad(const std::vector<double>& theta, std::vector<double>& grad) const {
        const double* w = theta.data();
        const double* b = theta.data() + static_cast<std::size_t>(n_way) * dim;
        grad.assign(theta.size(), 0.0);
        double* gw = grad.data();
        double* gb = grad.data() + static_cast<std::size_t>(n_way) * dim;
        double f = 0.0;
        std::vector<double> z(static_cast<std::size_t>(n_way));
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (int o = 0; o < n_way; ++o)
                z[static_cast<std::size_t>(o)] =
                    b[o] + kernels::ops().dot(static_cast<std::size_t>(dim),
                                              w + static_cast<std::size_t>(o) * dim, x[i].data());
            double m = z[0];
            for (double v : z) m = std::max(m, v);
            double s = 0.0;
            for (double v : z) s += std::exp(v - m);
            const double lse = m + std::log(s);
            f += lse - z[static_cast<std::size_t>(y[i])];
            for (int o = 0; o < n_way; ++o) {
                const double p = std::exp(z[static_cast<std::size_t>(o)] - lse);
                const double g = p - (o == y[i] ? 1.0 : 0.0);
                gb[o] += g;
                kernels::ops().axpy(static_cast<std::size_t>(dim), g, x[i].data(),
                                    gw + static_cast<std::size_t>(o) * dim);
            }
        }
        for (std::size_t k = 0; k < static_cast<std::size_t>(n_way) * dim; ++k) {
            f += l2 * w[k] * w[k];
            gw[k] += 2.0 * l2 * w[k];
        }
        return f;
    }
};

} // namespace

Episode sample_episode(const datakit::LabeledDataset& ds, int n_way, int k_shot, int h_query,
                       SeededRng& rng) {
    if (n_way < 2 || k_shot < 1 || h_query < 1)
        throw InputDomainError("sample_episode: need n_way >= 2, k_shot >= 1, h_query >= 1");
    if (ds.class_count() < n_way)
        throw InputDomainError("sample_episode: dataset has fewer classes than n_way");
    const int need = k_shot + h_query;
    Episode ep;
    ep.n_way = n_way;
    ep.k_shot = k_shot;
    ep.h_query = h_query;
    ep.classes = draw_without_replacement(ds.class_count(), n_way, rng);
    for (int local = 0; local < n_way; ++local) {
        const auto& members = ds.by_class[static_cast<std::size_t>(ep.classes[static_cast<std::size_t>(local)])];
        if (static_cast<int>(members.size()) < need)
            throw InputDomainError("sample_episode: class '" +
                                   ds.class_names[static_cast<std::size_t>(ep.classes[static_cast<std::size_t>(local)])] +
                                   "' has fewer than k_shot + h_query images");
        const auto picks = draw_without_replacement(static_cast<int>(members.size()), need, rng);
        for (int i = 0; i < k_shot; ++i) {
            ep.support_items.push_back(members[static_cast<std::size_t>(picks[static_cast<std::size_t>(i)])]);
            ep.support_labels.push_back(local);
        }
        for (int i = k_shot; i < need; ++i) {
            ep.query_items.push_back(members[static_cast<std::size_t>(picks[static_cast<std::size_t>(i)])]);
            ep.query_labels.push_back(local);
        }
    }
    return ep;
}

std::vector<std::vector<double>> extract_embeddings(const nnet::Model& model,
                                                    const datakit::LabeledDataset& ds,
                                                    std::span<const int> item_indices,
                                                    bool l2_normalize, int workers) {
    std::vector<std::vector<double>> out(item_indices.size());
    parallel_for(item_indices.size(), workers, [&](std::size_t begin, std::size_t end, int) {
        nnet::Model::Cache cache;
        for (std::size_t i = begin; i < end; ++i) {
            model.forward(ds.items[static_cast<std::size_t>(item_indices[i])].image, cache);
            out[i] = cache.embedding;
            if (l2_normalize) {
                double norm = std::sqrt(kernels::ops().dot(out[i].size(), out[i].data(), out[i].data()));
                if (norm > 0.0) kernels::ops().scal(out[i].size(), 1.0 / norm, out[i].data());
            }
        }
    });
    return out;
}

void LinearProbe::logits(const double* x, double* out) const {
    for (int o = 0; o < n_way; ++o)
        out[o] = bias[static_cast<std::size_t>(o)] +
                 kernels::ops().dot(static_cast<std::size_t>(dim),
                                    weights.data() + static_cast<std::size_t>(o) * dim, x);
}

LinearProbe fit_linear_probe(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                             int n_way, double l2_strength) {
    if (x.empty() || x.size() != y.size())
        throw InputDomainError("fit_linear_probe: empty or mismatched inputs");
    std::vector<char> seen(static_cast<std::size_t>(n_way), 0);
    for (int label : y) {
        if (label < 0 || label >= n_way) throw InputDomainError("fit_linear_probe: label out of range");
        seen[static_cast<std::size_t>(label)] = 1;
    }
    for (char s : seen)
        if (!s) throw InputDomainError("fit_linear_probe: every class needs at least one example");

    const int dim = static_cast<int>(x.front().size());
    LinearProbe probe;
    probe.n_way = n_way;
    probe.dim = dim;
    probe.degenerate = std::all_of(x.begin(), x.end(), [&](const auto& v) { return v == x.front(); });

    ProbeObjective obj{x, y, n_way, dim, l2_strength};
    std::vector<double> theta(static_cast<std::size_t>(n_way) * dim + static_cast<std::size_t>(n_way), 0.0);
    std::vector<double> grad, trial(theta.size());
    double f = obj.value_grad(theta, grad);
    double step = 1.0;
    int it = 0;
    double gnorm = 0.0;
    for (; it < 1000; ++it) {
        gnorm = std::sqrt(kernels::ops().dot(grad.size(), grad.data(), grad.data()));
        if (gnorm < 1e-6) break;
        // Armijo backtracking on the steepest-descent direction.
        const double g2 = gnorm * gnorm;
        double t = step;
        bool accepted = false;
        for (int back = 0; back < 60; ++back) {
            for (std::size_t k = 0; k < theta.size(); ++k) trial[k] = theta[k] - t * grad[k];
            const double ft = obj.value(trial);
            if (ft <= f - 1e-4 * t * g2) {
                theta.swap(trial);
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break; // step underflow; gradient noise floor reached
        step = std::min(t * 2.0, 1e3);
        f = obj.value_grad(theta, grad);
    }
    probe.iterations = it;
    probe.grad_norm = gnorm;
    probe.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(n_way) * dim);
    probe.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(n_way) * dim, theta.end());
    return probe;
}

double evaluate_episode(const LinearProbe& probe, const std::vector<std::vector<double>>& x_query,
                        const std::vector<int>& y_query) {
    if (x_query.empty() || x_query.size() != y_query.size())
        throw InputDomainError("evaluate_episode: empty or mismatched query set");
    std::vector<double> z(static_cast<std::size_t>(probe.n_way));
    int correct = 0;
    for (std::size_t i = 0; i < x_query.size(); ++i) {
        probe.logits(x_query[i].data(), z.data());
        if (nnet::argmax(z) == y_query[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(x_query.size());
}

double ci95_halfwidth(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    return 1.96 * sd / std::sqrt(static_cast<double>(n));
}

EvalReport evaluate(const nnet::Model& model, const datakit::LabeledDataset& novel,
                    const EvalConfig& cfg, const std::string& checkpoint_id) {
    if (cfg.episodes < 1) throw InputDomainError("evaluate: episodes must be positive");

    // Embeddings depend only on the item, so extract each once up front.
    std::vector<int> all(static_cast<std::size_t>(novel.size()));
    for (int i = 0; i < novel.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    const auto emb = extract_embeddings(model, novel, all, cfg.l2_normalize, cfg.workers);

    EvalReport report;
    report.n_way = cfg.n_way;
    report.k_shot = cfg.k_shot;
    report.h_query = cfg.h_query;
    report.episodes = cfg.episodes;
    report.seed = cfg.seed;
    report.checkpoint_id = checkpoint_id;
    report.per_episode.assign(static_cast<std::size_t>(cfg.episodes), 0.0);

    std::vector<int> degenerate(static_cast<std::size_t>(cfg.episodes), 0);
    parallel_for(static_cast<std::size_t>(cfg.episodes), cfg.workers,
                 [&](std::size_t begin, std::size_t end, int) {
                     for (std::size_t i = begin; i < end; ++i) {
                         SeededRng rng(cfg.seed ^ static_cast<std::uint64_t>(i));
                         const Episode ep = sample_episode(novel, cfg.n_way, cfg.k_shot, cfg.h_query, rng);
                         std::vector<std::vector<double>> xs, xq;
                         xs.reserve(ep.support_items.size());
                         xq.reserve(ep.query_items.size());
                         for (int idx : ep.support_items) xs.push_back(emb[static_cast<std::size_t>(idx)]);
                         for (int idx : ep.query_items) xq.push_back(emb[static_cast<std::size_t>(idx)]);
                         const LinearProbe probe =
                             fit_linear_probe(xs, ep.support_labels, cfg.n_way, cfg.probe_l2);
                         degenerate[i] = probe.degenerate ? 1 : 0;
                         report.per_episode[i] = evaluate_episode(probe, xq, ep.query_labels);
                     }
                 });

    double mean = 0.0;
    for (double a : report.per_episode) mean += a;
    report.mean_accuracy = mean / static_cast<double>(cfg.episodes);
    report.ci95_halfwidth = ci95_halfwidth(report.per_episode);
    for (int d : degenerate) report.degenerate_episodes += d;
    return report;
}

std::string format_accuracy(double mean, double ci) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", mean * 100.0, ci * 100.0);
    return buf;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["n_way"] = report.n_way;
    j["k_shot"] = report.k_shot;
    j["h_query"] = report.h_query;
    j["episodes"] = report.episodes;
    j["mean_accuracy"] = report.mean_accuracy;
    j["ci95_halfwidth"] = report.ci95_halfwidth;
    j["seed"] = report.seed;
    j["checkpoint_id"] = report.checkpoint_id;
    j["degenerate_episodes"] = report.degenerate_episodes;
    return j.dump(2);
}

} // namespace seppmix::fewshot
