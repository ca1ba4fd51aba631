#pragma once
// Shared helpers for the unit and acceptance tests. Reference implementations here are
// written from the formulas directly and do not call the library's loss or scoring code.

#include "aada/active_loop.hpp"
#include "aada/config.hpp"
#include "aada/dann.hpp"
#include "aada/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace aada::testing {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.normal() * scale;
    return m;
}

/// Rows drawn from a flat Dirichlet.
inline Matrix random_distributions(std::size_t n, std::size_t k, Rng& rng) {
    Matrix p(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            p(i, j) = -std::log(1.0 - rng.uniform());
            s += p(i, j);
        }
        for (std::size_t j = 0; j < k; ++j) p(i, j) /= s;
    }
    return p;
}

// ---- reference losses --------------------------------------------------------------------

inline double ref_logsumexp(std::span<const double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

inline double ref_cross_entropy(const Matrix& logits, const std::vector<Label>& y) {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        total += ref_logsumexp(logits.row(i)) - logits(i, static_cast<std::size_t>(y[i]));
    }
    return total / static_cast<double>(logits.rows());
}

inline double ref_entropy_row(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

inline double ref_mean_entropy(const Matrix& logits) {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double lse = ref_logsumexp(logits.row(i));
        std::vector<double> p;
        for (double z : logits.row(i)) p.push_back(std::exp(z - lse));
        total += ref_entropy_row(p);
    }
    return total / static_cast<double>(logits.rows());
}

inline double ref_bce(const Matrix& logits, const std::vector<int>& y) {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double z = logits(i, 0);
        const double log1pexp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        total += log1pexp - y[i] * z;
    }
    return total / static_cast<double>(logits.rows());
}

// ---- full objective with ReLU pattern -----------------------------------------------------

struct ObjectiveValue {
    double class_loss = 0.0;
    double entropy_loss = 0.0;
    double domain_loss = 0.0;
    std::vector<bool> relu_pattern; ///< sign of every ReLU pre-activation
};

inline void record_pattern(const DenseStack& stack, const ForwardCache& cache, std::vector<bool>& out) {
    for (std::size_t li = 0; li < stack.depth(); ++li) {
        if (stack.layer(li).activation != Activation::ReLU) continue;
        for (double v : cache.pre_activations[li].values()) out.push_back(v > 0.0);
    }
}

inline ObjectiveValue evaluate_objective(const DannModel& m, const LabeledBatch& l, const UnlabeledBatch& u) {
    ObjectiveValue o;
    const auto fl = forward(m.feature_extractor, l.features);
    const auto yl = forward(m.class_predictor, fl.output);
    const auto fu = forward(m.feature_extractor, u.features);
    const auto yu = forward(m.class_predictor, fu.output);
    const auto d = forward(m.discriminator, vstack(fl.output, fu.output));
    o.class_loss = ref_cross_entropy(yl.output, l.class_labels);
    o.entropy_loss = ref_mean_entropy(yu.output);
    std::vector<int> dom(l.domain_labels);
    dom.insert(dom.end(), u.domain_labels.begin(), u.domain_labels.end());
    o.domain_loss = ref_bce(d.output, dom);
    record_pattern(m.feature_extractor, fl.cache, o.relu_pattern);
    record_pattern(m.class_predictor, yl.cache, o.relu_pattern);
    record_pattern(m.feature_extractor, fu.cache, o.relu_pattern);
    record_pattern(m.class_predictor, yu.cache, o.relu_pattern);
    record_pattern(m.discriminator, d.cache, o.relu_pattern);
    return o;
}

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_at_kink = 0;
};

inline double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    return std::abs(analytic - numeric) / denom;
}

/// Central differences of `objective(value)` over every parameter of `which` (0 = G_f,
/// 1 = G_y, 2 = G_d) against `analytic`. Parameters whose perturbation flips a ReLU are
/// skipped: the loss is not differentiable there.
inline GradCheckResult finite_difference_check(
    DannModel model, int which, const StackGradients& analytic, const LabeledBatch& l,
    const UnlabeledBatch& u, const std::function<double(const ObjectiveValue&)>& objective,
    double eps = 1e-6) {
    GradCheckResult r;
    const auto base_pattern = evaluate_objective(model, l, u).relu_pattern;
    DenseStack& stack = which == 0 ? model.feature_extractor
                        : which == 1 ? model.class_predictor
                                     : model.discriminator;
    for (std::size_t li = 0; li < stack.depth(); ++li) {
        const std::size_t n_w = stack.layer(li).weight.size();
        const std::size_t n_b = stack.layer(li).bias.size();
        for (std::size_t k = 0; k < n_w + n_b; ++k) {
            auto slot = [&]() -> double& {
                auto& layer = stack.mutable_layer(li);
                return k < n_w ? layer.weight.values()[k] : layer.bias[k - n_w];
            };
            const double orig = slot();
            slot() = orig + eps;
            const auto plus = evaluate_objective(model, l, u);
            slot() = orig - eps;
            const auto minus = evaluate_objective(model, l, u);
            slot() = orig;
            if (plus.relu_pattern != base_pattern || minus.relu_pattern != base_pattern) {
                ++r.skipped_at_kink;
                continue;
            }
            const double numeric = (objective(plus) - objective(minus)) / (2.0 * eps);
            const auto& g = analytic.layers[li];
            const double a = k < n_w ? g.weight.values()[k] : g.bias[k - n_w];
            r.max_relative_error = std::max(r.max_relative_error, relative_error(a, numeric));
            ++r.checked;
        }
    }
    return r;
}

// ---- brute-force selection references ------------------------------------------------------

/// Indices sorted by key (descending when `descending`), ties to the lower index; first b.
inline std::vector<std::size_t> brute_top_b(const std::vector<double>& key, std::size_t b, bool descending) {
    std::vector<std::size_t> idx(key.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t c) {
        if (key[a] != key[c]) return descending ? key[a] > key[c] : key[a] < key[c];
        return a < c;
    });
    idx.resize(b);
    return idx;
}

inline double covering_radius(const Matrix& points, const Matrix& labeled, const std::vector<std::size_t>& chosen) {
    double worst = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < labeled.rows(); ++j) {
            best = std::min(best, euclidean_distance(points.row(i), labeled.row(j)));
        }
        for (auto c : chosen) best = std::min(best, euclidean_distance(points.row(i), points.row(c)));
        worst = std::max(worst, best);
    }
    return worst;
}

inline double exhaustive_kcenter_radius(const Matrix& points, const Matrix& labeled, std::size_t b) {
    const std::size_t n = points.rows();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> chosen;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (chosen.size() == b) {
            best = std::min(best, covering_radius(points, labeled, chosen));
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            chosen.push_back(i);
            rec(i + 1);
            chosen.pop_back();
        }
    };
    rec(0);
    return best;
}

// ---- small experiments --------------------------------------------------------------------

/// Fast config on a small two_moons shift for loop-level tests.
inline RunConfig tiny_config(std::size_t max_round = 3, std::size_t budget = 4) {
    RunConfig c = preset_config("toy");
    c.dataset.shift.n_source = 160;
    c.dataset.shift.n_target = 150;
    c.model.feature_hidden = {8};
    c.model.feature_dim = 8;
    c.model.discriminator_hidden = {8};
    c.schedule.phases = {{2, 1e-3}};
    c.schedule.batch_size = 32;
    c.max_round = max_round;
    c.budgets = {static_cast<std::int64_t>(budget)};
    return c;
}

} // namespace aada::testing
