#pragma once

#include "aada/matrix.hpp"
#include "aada/nn.hpp"
#include "aada/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aada {

/// How the model is trained each round.
enum class TrainScheme {
    Adversarial, ///< min-max over (L_s u L_t, U_t) with gradient reversal
    Joint,       ///< supervised on L_s u L_t; discriminator trained alongside, no reversal
    FineTune,    ///< supervised on L_s, then tuned on L_t; discriminator as in Joint
    TargetOnly,  ///< supervised on L_t only; discriminator as in Joint
};

std::string_view to_string(TrainScheme s) noexcept;
TrainScheme scheme_from_string(std::string_view name);

/// Which discriminator class labeled-target rows are assigned to.
enum class LabeledTargetSide {
    Labeled,  ///< label 1, grouped with L_s (labeled vs unlabeled split)
    Target,   ///< label 0, grouped with U_t (source vs target split)
};

std::string_view to_string(LabeledTargetSide s) noexcept;
LabeledTargetSide labeled_target_side_from_string(std::string_view name);

/// Layer sizes of the three heads. The feature extractor maps input_dim -> feature_dim.
struct ModelDims {
    std::size_t input_dim = 2;
    std::vector<std::size_t> feature_hidden{32};
    std::size_t feature_dim = 32;
    std::vector<std::size_t> classifier_hidden{};
    std::vector<std::size_t> discriminator_hidden{32};
    std::size_t num_classes = 2;

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Feature extractor G_f, class predictor G_y and domain discriminator G_d with one
/// Adam state per head.
struct DannModel {
    ModelDims dims;
    DenseStack feature_extractor;
    DenseStack class_predictor;
    DenseStack discriminator;
    AdamState feature_optimizer;
    AdamState class_optimizer;
    AdamState discriminator_optimizer;
    double lambda_adv = 0.1;
    double lambda_ent = 0.1;

    static DannModel create(const ModelDims& dims, double lambda_adv, double lambda_ent,
                            Rng& rng, const AdamHyper& hyper = {});

    /// Redraw all parameters and clear optimizer state, keeping dims and lambdas.
    void reinitialize(Rng& rng);
    /// Clear optimizer state only.
    void reset_optimizers();
    void set_learning_rate(double lr);

    std::size_t num_classes() const noexcept { return dims.num_classes; }
    /// Throws DimensionError / Error if the heads do not chain or lambdas are negative.
    void validate() const;
};

struct LabeledBatch {
    Matrix features;
    std::vector<Label> class_labels;
    std::vector<int> domain_labels;
};

struct UnlabeledBatch {
    Matrix features;
    std::vector<int> domain_labels;

    /// Unlabeled target rows, domain label 0.
    static UnlabeledBatch target(Matrix features);
};

struct LossReport {
    double class_loss = 0.0;
    double domain_loss = 0.0;
    double entropy_loss = 0.0;
};

/// Everything one optimisation step would apply, before the Adam update.
struct DannGradients {
    StackGradients feature;
    StackGradients classifier;
    StackGradients discriminator;
    /// d(domain loss)/d(theta_f) as if there were no reversal.
    StackGradients feature_domain_unreversed;
    /// What the reversal actually contributes to `feature`.
    StackGradients feature_domain_reversed;
    LossReport losses;
};

enum class StepMode {
    Adversarial, ///< reversal into theta_f, entropy regulariser on unlabeled rows
    Supervised,  ///< class loss only into theta_f, theta_y; theta_d trained if an unlabeled batch is given
};

/// Gradients of one step. For Adversarial mode:
///   theta_d : d BCE
///   theta_y : d (CE + lambda_ent * H)
///   theta_f : d (CE + lambda_ent * H) - lambda_adv * d BCE
/// The reversal is applied to the theta_f gradient of the domain loss, which equals a
/// gradient-reversal layer between G_f and G_d by linearity of backprop and makes the
/// -lambda scaling exact in floating point.
DannGradients compute_gradients(const DannModel& model, const LabeledBatch& labeled,
                                const UnlabeledBatch* unlabeled, StepMode mode);

/// One simultaneous min-max update of all three heads.
LossReport adversarial_step(DannModel& model, const LabeledBatch& labeled,
                            const UnlabeledBatch& unlabeled_target);

/// Class-loss update of theta_f, theta_y. When `discriminator_batch` is given, theta_d is
/// also trained on labeled-vs-unlabeled features without any gradient reaching theta_f.
LossReport supervised_step(DannModel& model, const LabeledBatch& labeled,
                           const UnlabeledBatch* discriminator_batch = nullptr);

/// Discriminator-only update. Rows of `side_one` get domain label 1, `side_zero` label 0.
LossReport discriminator_step(DannModel& model, const Matrix& side_one, const Matrix& side_zero);

// ---- inference ---------------------------------------------------------------

Matrix extract_features(const DannModel& model, const Matrix& x);
Matrix predict_class_probs(const DannModel& model, const Matrix& x);
/// G_d(G_f(x)) clamped to [kDomainProbFloor, 1 - kDomainProbFloor].
std::vector<double> predict_domain_prob(const DannModel& model, const Matrix& x);

inline constexpr double kDomainProbFloor = 1e-6;

struct ModelOutputs {
    Matrix features;
    Matrix class_probs;
    std::vector<double> domain_probs;
};

/// Features, class probabilities and domain probabilities from one G_f pass.
ModelOutputs infer(const DannModel& model, const Matrix& x);

// ---- round training ----------------------------------------------------------------

struct TrainPhase {
    std::size_t epochs = 30;
    double learning_rate = 1e-3;

    friend bool operator==(const TrainPhase&, const TrainPhase&) = default;
};

struct TrainSchedule {
    std::vector<TrainPhase> phases{{30, 1e-3}, {30, 5e-4}, {30, 2.5e-4}};
    std::size_t batch_size = 64;
    /// Learning-rate multiplier for the L_t stage of FineTune.
    double finetune_lr_factor = 0.5;

    friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

/// Materialised pools for one round.
struct TrainingPools {
    Matrix labeled_source_x;
    std::vector<Label> labeled_source_y;
    Matrix labeled_target_x;
    std::vector<Label> labeled_target_y;
    Matrix unlabeled_target_x;
};

struct TrainOptions {
    TrainScheme scheme = TrainScheme::Adversarial;
    TrainSchedule schedule;
    LabeledTargetSide labeled_target_side = LabeledTargetSide::Labeled;
    /// Keep the previous round's parameters instead of re-initialising.
    bool warm_start = false;
    /// Observer called with the FineTune model after its source-only stage.
    std::function<void(const DannModel&)> after_pretrain;
};

struct EpochLoss {
    std::string stage;
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    LossReport mean;
};

struct TrainingReport {
    std::vector<EpochLoss> epochs;
};

/// Train `model` for one active-learning round.
/// Throws SchemeError when the scheme cannot use the given pools.
TrainingReport train_round(DannModel& model, const TrainingPools& pools,
                           const TrainOptions& options, Rng& rng);

/// Discriminator-only training over the schedule: (L_s u L_t) vs U_t with G_f fixed.
/// Used where a scheme has no classifier data yet but selection still needs G_d.
TrainingReport train_discriminator_only(DannModel& model, const TrainingPools& pools,
                                        const TrainOptions& options, Rng& rng);

// ---- checkpoints -----------------------------------------------------------------

struct Checkpoint {
    DannModel model;
    Rng rng;
};

/// Versioned JSON record of dims, parameters, optimizer state, lambdas and RNG state.
/// Doubles are written in shortest round-trip form, so reloading is bit-exact.
std::string checkpoint_to_string(const DannModel& model, const Rng& rng);
Checkpoint checkpoint_from_string(const std::string& text);
void save_checkpoint(const std::string& path, const DannModel& model, const Rng& rng);
Checkpoint load_checkpoint(const std::string& path);

} // namespace aada
