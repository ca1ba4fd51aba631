#pragma once

#include "aada/dann.hpp"
#include "aada/matrix.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aada {

enum class Strategy {
    ImportanceWeight,     ///< s(x) = (1 - G_d)/G_d * H(G_y), descending
    DiversityCueOnly,     ///< (1 - G_d)/G_d, descending
    UncertaintyCueOnly,   ///< H(G_y), descending
    KMeans,               ///< sample nearest each of b k-means centroids
    KCenter,              ///< greedy farthest-first from L_t
    AvgDistanceDiversity, ///< mean distance to L_t, descending
    BvSB,                 ///< best-vs-second-best margin, ascending
    EntropyOnly,          ///< H(G_y), descending
    Random,
};

std::string_view to_string(Strategy s) noexcept;
Strategy strategy_from_string(std::string_view name);
const std::vector<Strategy>& all_strategies();

/// One unlabeled target sample with its selection score and the two cues behind it.
struct ScoredCandidate {
    std::size_t index = 0; ///< position in U_t
    double score = 0.0;
    double diversity_cue = 0.0;
    double uncertainty_cue = 0.0;
};

/// Importance-weight scores. `domain_probs[i]` is G_d(G_f(x_i)) in (0, 1); rows of
/// `class_probs` are distributions.
std::vector<ScoredCandidate> importance_scores(std::span<const double> domain_probs,
                                               const Matrix& class_probs);

/// max1 - max2 per row, in [0, 1].
std::vector<double> bvsb_scores(const Matrix& class_probs);

/// Indices of the `b` largest (or smallest) scores. Ties go to the lower index.
std::vector<std::size_t> top_b_descending(std::span<const double> scores, std::size_t b);
std::vector<std::size_t> top_b_ascending(std::span<const double> scores, std::size_t b);

/// Greedy farthest-first traversal. Each pick maximises the distance to the nearest point of
/// `labeled` plus the points picked so far. With nothing labeled the first pick is index 0.
std::vector<std::size_t> kcenter_select(const Matrix& unlabeled, const Matrix& labeled,
                                        std::size_t b);

struct KMeansOptions {
    std::size_t max_iterations = 100;
    double relative_tolerance = 1e-6;
};

/// Lloyd's algorithm with k-means++ seeding and b clusters; returns, per cluster, the
/// member nearest its centroid. Always returns b distinct indices.
std::vector<std::size_t> kmeans_select(const Matrix& unlabeled, std::size_t b, std::uint64_t seed,
                                       const KMeansOptions& options = {});

/// Ranks U_t by mean Euclidean distance to all of L_t, descending.
std::vector<std::size_t> avg_distance_select(const Matrix& unlabeled,
                                             const Matrix& labeled_target, std::size_t b);

std::vector<std::size_t> random_select(std::size_t n, std::size_t b, std::uint64_t seed);

/// Model-derived inputs every strategy draws from.
struct SelectionInputs {
    Matrix unlabeled_features;      ///< G_f(U_t)
    Matrix labeled_target_features; ///< G_f(L_t)
    std::vector<double> domain_probs;
    Matrix class_probs;
};

SelectionInputs make_selection_inputs(const DannModel& model, const Matrix& unlabeled_x,
                                      const Matrix& labeled_target_x);

struct Selection {
    std::vector<std::size_t> indices; ///< positions in U_t, in selection order
    Strategy applied = Strategy::Random;
    /// Importance-weight breakdown for every candidate (for score export).
    std::vector<ScoredCandidate> candidates;
};

/// Picks `b` distinct positions of U_t. Deterministic in (inputs, seed).
/// AvgDistanceDiversity falls back to Random while L_t is empty.
Selection select(Strategy strategy, const SelectionInputs& inputs, std::size_t b,
                 std::uint64_t seed);

/// Per-candidate ranking score of a score-based strategy, oriented so larger is picked first
/// except for BvSB (smaller first). Throws for clustering/random strategies.
std::vector<double> strategy_scores(Strategy strategy, const SelectionInputs& inputs);

// ---- score files ----------------------------------------------------------------

struct ScoreRow {
    std::size_t index = 0;
    double score = 0.0;
    double diversity_cue = 0.0;
    double uncertainty_cue = 0.0;
    bool selected = false;
};

/// CSV with header `index,score,diversity_cue,uncertainty_cue,selected`.
void write_scores(std::ostream& out, const std::vector<ScoredCandidate>& candidates,
                  std::span<const std::size_t> selected);
void write_scores_file(const std::string& path, const std::vector<ScoredCandidate>& candidates,
                       std::span<const std::size_t> selected);
std::vector<ScoreRow> read_scores(std::istream& in);
std::vector<ScoreRow> read_scores_file(const std::string& path);

} // namespace aada
