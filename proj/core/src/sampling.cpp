#include "aada/sampling.hpp"

#include "aada/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace aada {

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
    case Strategy::ImportanceWeight: return "importance_weight";
    case Strategy::DiversityCueOnly: return "diversity_cue";
    case Strategy::UncertaintyCueOnly: return "uncertainty_cue";
    case Strategy::KMeans: return "kmeans";
    case Strategy::KCenter: return "kcenter";
    case Strategy::AvgDistanceDiversity: return "avg_distance";
    case Strategy::BvSB: return "bvsb";
    case Strategy::EntropyOnly: return "entropy";
    case Strategy::Random: return "random";
    }
    return "random";
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all{
        Strategy::ImportanceWeight, Strategy::DiversityCueOnly, Strategy::UncertaintyCueOnly,
        Strategy::KMeans,           Strategy::KCenter,          Strategy::AvgDistanceDiversity,
        Strategy::BvSB,             Strategy::EntropyOnly,      Strategy::Random};
    return all;
}

Strategy strategy_from_string(std::string_view name) {
    for (auto s : all_strategies()) {
        if (to_string(s) == name) return s;
    }
    std::string known;
    for (auto s : all_strategies()) known += (known.empty() ? "" : ", ") + std::string(to_string(s));
    throw Error("unknown sampling strategy '" + std::string(name) + "' (expected " + known + ")");
}

// ---- scores ------------------------------------------------------------------

std::vector<ScoredCandidate> importance_scores(std::span<const double> domain_probs,
                                               const Matrix& class_probs) {
    if (domain_probs.size() != class_probs.rows()) {
        throw DimensionError("importance_scores", std::to_string(domain_probs.size()) +
                                                      " domain probabilities for " +
                                                      std::to_string(class_probs.rows()) +
                                                      " class-probability rows");
    }
    const auto h = entropy(class_probs);
    std::vector<ScoredCandidate> out(domain_probs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double raw = domain_probs[i];
        if (!(raw > 0.0 && raw < 1.0)) {
            throw DistributionError("importance_scores: domain probability " + std::to_string(raw) +
                                    " at row " + std::to_string(i) + " is outside (0, 1)");
        }
        const double g = std::clamp(raw, kDomainProbFloor, 1.0 - kDomainProbFloor);
        out[i].index = i;
        out[i].diversity_cue = (1.0 - g) / g;
        out[i].uncertainty_cue = h[i];
        out[i].score = out[i].diversity_cue * out[i].uncertainty_cue;
    }
    return out;
}

std::vector<double> bvsb_scores(const Matrix& class_probs) {
    if (class_probs.cols() < 2) {
        throw DimensionError("bvsb_scores", "need at least two classes, got " +
                                                std::to_string(class_probs.cols()));
    }
    std::vector<double> margins(class_probs.rows());
    for (std::size_t r = 0; r < class_probs.rows(); ++r) {
        double best = -std::numeric_limits<double>::infinity();
        double second = best;
        for (double p : class_probs.row(r)) {
            if (p > best) {
                second = best;
                best = p;
            } else if (p > second) {
                second = p;
            }
        }
        margins[r] = best - second;
    }
    return margins;
}

namespace {

std::vector<std::size_t> top_b(std::span<const double> scores, std::size_t b, bool descending) {
    if (b > scores.size()) {
        throw BudgetError("requested " + std::to_string(b) + " of " +
                          std::to_string(scores.size()) + " candidates");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto better = [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return descending ? scores[a] > scores[c] : scores[a] < scores[c];
        return a < c;
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(b), idx.end(), better);
    idx.resize(b);
    return idx;
}

void require_budget(std::size_t b, std::size_t n, const char* where) {
    if (b > n) {
        throw BudgetError(std::string(where) + ": budget " + std::to_string(b) + " exceeds " +
                          std::to_string(n) + " unlabeled samples");
    }
}

} // namespace

std::vector<std::size_t> top_b_descending(std::span<const double> scores, std::size_t b) {
    return top_b(scores, b, true);
}

std::vector<std::size_t> top_b_ascending(std::span<const double> scores, std::size_t b) {
    return top_b(scores, b, false);
}

// ---- k-center ------------------------------------------------------------------

std::vector<std::size_t> kcenter_select(const Matrix& unlabeled, const Matrix& labeled,
                                        std::size_t b) {
    const std::size_t n = unlabeled.rows();
    if (n == 0) throw BudgetError("kcenter_select: unlabeled pool is empty");
    require_budget(b, n, "kcenter_select");
    if (labeled.rows() > 0 && labeled.cols() != unlabeled.cols()) {
        throw DimensionError("kcenter_select", "labeled and unlabeled feature dims differ");
    }

    // Squared distance to the nearest center; monotone in the Euclidean distance.
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(n, false);
    for (std::size_t l = 0; l < labeled.rows(); ++l) {
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(unlabeled.row(i), labeled.row(l)));
        }
    }

    std::vector<std::size_t> picked;
    picked.reserve(b);
    while (picked.size() < b) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            if (best == n || nearest[i] > nearest[best]) best = i;
        }
        taken[best] = true;
        picked.push_back(best);
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(unlabeled.row(i), unlabeled.row(best)));
        }
    }
    return picked;
}

// ---- k-means -------------------------------------------------------------------------

namespace {

std::size_t nearest_center(std::span<const double> x, const Matrix& centers, double* dist = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        const double d = squared_distance(x, centers.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (dist != nullptr) *dist = best_d;
    return best;
}

Matrix kmeanspp_init(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows();
    Matrix centers(k, x.cols());
    std::vector<bool> chosen(n, false);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    std::size_t pick = rng.index(n);
    for (std::size_t c = 0; c < k; ++c) {
        if (c > 0) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += d2[i];
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                pick = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (d2[i] <= 0.0) continue;
                    acc += d2[i];
                    if (target < acc) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n) {
                    // Rounding left target at the end; take the last positive entry.
                    for (std::size_t i = n; i-- > 0;) {
                        if (d2[i] > 0.0) {
                            pick = i;
                            break;
                        }
                    }
                }
            } else {
                // Every point coincides with a center: lowest unchosen index.
                pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) -
                                                chosen.begin());
            }
        }
        chosen[pick] = true;
        auto dst = centers.row(c);
        auto src = x.row(pick);
        std::copy(src.begin(), src.end(), dst.begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), src));
    }
    return centers;
}

} // namespace

std::vector<std::size_t> kmeans_select(const Matrix& unlabeled, std::size_t b, std::uint64_t seed,
                                       const KMeansOptions& options) {
    const std::size_t n = unlabeled.rows();
    require_budget(b, n, "kmeans_select");
    if (b == 0) return {};
    Rng rng(seed);
    Matrix centers = kmeanspp_init(unlabeled, b, rng);
    std::vector<std::size_t> assignment(n, 0);

    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            assignment[i] = nearest_center(unlabeled.row(i), centers, &d);
            inertia += d;
        }
        Matrix sums(b, unlabeled.cols());
        std::vector<std::size_t> counts(b, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto s = sums.row(assignment[i]);
            auto x = unlabeled.row(i);
            for (std::size_t c = 0; c < s.size(); ++c) s[c] += x[c];
            ++counts[assignment[i]];
        }
        for (std::size_t k = 0; k < b; ++k) {
            if (counts[k] == 0) continue; // empty cluster keeps its center
            auto dst = centers.row(k);
            auto s = sums.row(k);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = s[c] / static_cast<double>(counts[k]);
        }
        const bool converged =
            inertia == 0.0 ||
            (std::isfinite(previous) && std::abs(previous - inertia) <= options.relative_tolerance * previous);
        previous = inertia;
        if (converged) break;
    }
    // Final assignment against the final centers.
    for (std::size_t i = 0; i < n; ++i) assignment[i] = nearest_center(unlabeled.row(i), centers);

    std::vector<bool> taken(n, false);
    std::vector<std::size_t> picked;
    picked.reserve(b);
    for (std::size_t k = 0; k < b; ++k) {
        std::size_t best = n;
        double best_d = std::numeric_limits<double>::infinity();
        for (bool members_only : {true, false}) {
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || (members_only && assignment[i] != k)) continue;
                const double d = squared_distance(unlabeled.row(i), centers.row(k));
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            if (best != n) break;
        }
        taken[best] = true;
        picked.push_back(best);
    }
    return picked;
}

// ---- average distance ------------------------------------------------------------------

std::vector<std::size_t> avg_distance_select(const Matrix& unlabeled,
                                             const Matrix& labeled_target, std::size_t b) {
    if (labeled_target.rows() == 0) {
        throw BudgetError("avg_distance_select: L_t is empty, mean distance is undefined");
    }
    if (labeled_target.cols() != unlabeled.cols()) {
        throw DimensionError("avg_distance_select", "labeled and unlabeled feature dims differ");
    }
    require_budget(b, unlabeled.rows(), "avg_distance_select");
    std::vector<double> mean(unlabeled.rows(), 0.0);
    for (std::size_t i = 0; i < unlabeled.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t l = 0; l < labeled_target.rows(); ++l) {
            acc += euclidean_distance(unlabeled.row(i), labeled_target.row(l));
        }
        mean[i] = acc / static_cast<double>(labeled_target.rows());
    }
    return top_b_descending(mean, b);
}

std::vector<std::size_t> random_select(std::size_t n, std::size_t b, std::uint64_t seed) {
    require_budget(b, n, "random_select");
    Rng rng(seed);
    return rng.sample_without_replacement(n, b);
}

// ---- dispatch -----------------------------------------------------------------------

SelectionInputs make_selection_inputs(const DannModel& model, const Matrix& unlabeled_x,
                                      const Matrix& labeled_target_x) {
    SelectionInputs in;
    auto u = infer(model, unlabeled_x);
    in.unlabeled_features = std::move(u.features);
    in.class_probs = std::move(u.class_probs);
    in.domain_probs = std::move(u.domain_probs);
    in.labeled_target_features = labeled_target_x.rows() > 0
                                     ? extract_features(model, labeled_target_x)
                                     : Matrix(0, in.unlabeled_features.cols());
    return in;
}

std::vector<double> strategy_scores(Strategy strategy, const SelectionInputs& inputs) {
    switch (strategy) {
    case Strategy::ImportanceWeight:
    case Strategy::DiversityCueOnly:
    case Strategy::UncertaintyCueOnly: {
        const auto cands = importance_scores(inputs.domain_probs, inputs.class_probs);
        std::vector<double> s(cands.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = strategy == Strategy::ImportanceWeight ? cands[i].score
                   : strategy == Strategy::DiversityCueOnly ? cands[i].diversity_cue
                                                            : cands[i].uncertainty_cue;
        }
        return s;
    }
    case Strategy::EntropyOnly: return entropy(inputs.class_probs);
    case Strategy::BvSB: return bvsb_scores(inputs.class_probs);
    default:
        throw Error("strategy '" + std::string(to_string(strategy)) + "' has no per-sample score");
    }
}

Selection select(Strategy strategy, const SelectionInputs& inputs, std::size_t b,
                 std::uint64_t seed) {
    const std::size_t n = inputs.unlabeled_features.rows();
    require_budget(b, n, "select");
    Selection sel;
    sel.applied = strategy;
    if (!inputs.domain_probs.empty() || inputs.class_probs.rows() > 0) {
        sel.candidates = importance_scores(inputs.domain_probs, inputs.class_probs);
    }
    if (strategy == Strategy::AvgDistanceDiversity && inputs.labeled_target_features.rows() == 0) {
        sel.applied = Strategy::Random;
    }

    switch (sel.applied) {
    case Strategy::ImportanceWeight:
    case Strategy::DiversityCueOnly:
    case Strategy::UncertaintyCueOnly:
    case Strategy::EntropyOnly:
        sel.indices = top_b_descending(strategy_scores(sel.applied, inputs), b);
        break;
    case Strategy::BvSB:
        sel.indices = top_b_ascending(strategy_scores(sel.applied, inputs), b);
        break;
    case Strategy::KMeans:
        sel.indices = kmeans_select(inputs.unlabeled_features, b, seed);
        break;
    case Strategy::KCenter:
        sel.indices = kcenter_select(inputs.unlabeled_features, inputs.labeled_target_features, b);
        break;
    case Strategy::AvgDistanceDiversity:
        sel.indices =
            avg_distance_select(inputs.unlabeled_features, inputs.labeled_target_features, b);
        break;
    case Strategy::Random:
        sel.indices = random_select(n, b, seed);
        break;
    }
    return sel;
}

// ---- score files ---------------------------------------------------------------------

void write_scores(std::ostream& out, const std::vector<ScoredCandidate>& candidates,
                  std::span<const std::size_t> selected) {
    std::vector<bool> flag(candidates.size(), false);
    for (auto i : selected) {
        if (i < flag.size()) flag[i] = true;
    }
    out << "index,score,diversity_cue,uncertainty_cue,selected\n";
    char buf[160];
    for (const auto& c : candidates) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d\n", c.index, c.score,
                      c.diversity_cue, c.uncertainty_cue, flag[c.index] ? 1 : 0);
        out << buf;
    }
}

void write_scores_file(const std::string& path, const std::vector<ScoredCandidate>& candidates,
                       std::span<const std::size_t> selected) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_scores(out, candidates, selected);
}

std::vector<ScoreRow> read_scores(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "index,score,diversity_cue,uncertainty_cue,selected") {
        throw FormatError("score file: missing or unexpected header");
    }
    std::vector<ScoreRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ScoreRow r;
        int sel = 0;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%d%c", &r.index, &r.score, &r.diversity_cue,
                        &r.uncertainty_cue, &sel, &tail) != 5 ||
            (sel != 0 && sel != 1)) {
            throw FormatError("score file: malformed line " + std::to_string(line_no));
        }
        r.selected = sel == 1;
        rows.push_back(r);
    }
    return rows;
}

std::vector<ScoreRow> read_scores_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_scores(in);
}

} // namespace aada
