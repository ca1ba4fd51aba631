#pragma once

#include "aada/matrix.hpp"
#include "aada/rng.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace aada {

/// Class index in [0, L).
using Label = int;

enum class Activation { Identity, ReLU };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

/// One affine map `y = act(x W + b)`; `weight` is in_dim x out_dim.
struct DenseLayer {
    Matrix weight;
    std::vector<double> bias;
    Activation activation = Activation::Identity;

    std::size_t in_dim() const noexcept { return weight.rows(); }
    std::size_t out_dim() const noexcept { return weight.cols(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// A chain of dense layers. Each of the three model heads is one stack.
class DenseStack {
public:
    DenseStack() = default;
    explicit DenseStack(std::vector<DenseLayer> layers);

    /// Layers with sizes `dims[0] -> dims[1] -> ... -> dims.back()`, Glorot-uniform weights
    /// and zero biases. Hidden layers use `hidden`, the last one `output`.
    static DenseStack glorot(std::span<const std::size_t> dims, Activation hidden,
                             Activation output, Rng& rng);

    std::size_t input_dim() const noexcept;
    std::size_t output_dim() const noexcept;
    std::size_t depth() const noexcept { return layers_.size(); }
    std::size_t parameter_count() const noexcept;

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
    /// Mutable access invalidates outstanding forward caches.
    DenseLayer& mutable_layer(std::size_t i);

    /// Bumped on every parameter mutation.
    std::uint64_t revision() const noexcept { return revision_; }
    void touch() noexcept { ++revision_; }

    friend bool operator==(const DenseStack& a, const DenseStack& b) {
        return a.layers_ == b.layers_;
    }

private:
    std::vector<DenseLayer> layers_;
    std::uint64_t revision_ = 0;
};

/// Per-layer inputs and pre-activations recorded by `forward`.
struct ForwardCache {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre_activations;
    const DenseStack* owner = nullptr;
    std::uint64_t revision = 0;
};

struct ForwardResult {
    Matrix output;
    ForwardCache cache;
};

ForwardResult forward(const DenseStack& stack, const Matrix& input);
/// Forward pass without keeping a cache.
Matrix predict(const DenseStack& stack, const Matrix& input);

struct LayerGradient {
    Matrix weight;
    std::vector<double> bias;
};

/// Gradients (or Adam moments) shaped like a stack's parameters.
struct StackGradients {
    std::vector<LayerGradient> layers;

    static StackGradients zeros_like(const DenseStack& stack);
    StackGradients& operator+=(const StackGradients& other);
    StackGradients scaled(double factor) const;
    bool all_zero() const noexcept;
};

struct BackwardResult {
    StackGradients parameters;
    Matrix input_gradient;
};

/// Exact gradients of a scalar loss given dLoss/dOutput.
/// Throws StaleCacheError if `cache` does not come from `forward(stack, ...)` at the current revision.
BackwardResult backward(const DenseStack& stack, const ForwardCache& cache,
                        const Matrix& output_gradient);

// ---- losses -------------------------------------------------------------

struct LossResult {
    double loss = 0.0;
    Matrix gradient;
};

struct VectorLossResult {
    double loss = 0.0;
    std::vector<double> gradient;
};

double sigmoid(double z) noexcept;
/// log(1 + e^z) without overflow.
double softplus(double z) noexcept;

Matrix softmax(const Matrix& logits);
Matrix log_softmax(const Matrix& logits);

/// Mean cross entropy of softmax(logits) against integer labels; gradient is w.r.t. logits.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const Label> labels);

/// Mean binary log-loss in the logit domain; label 1 means "source side".
VectorLossResult binary_logistic_loss(std::span<const double> logits,
                                      std::span<const int> domain_labels);

/// Per-row Shannon entropy (natural log) of probability rows; 0 ln 0 := 0.
std::vector<double> entropy(const Matrix& probabilities);

/// Mean prediction entropy H(softmax(logits)) and its gradient w.r.t. logits.
LossResult mean_entropy_loss(const Matrix& logits);

// ---- optimizer ----------------------------------------------------------

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    StackGradients first_moment;
    StackGradients second_moment;
    std::uint64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 1e-3;

    static AdamState for_stack(const DenseStack& stack, const AdamHyper& hyper = {});
};

/// One bias-corrected Adam update over flat buffers. `step` is the 1-based step number.
void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::uint64_t step, const AdamHyper& hyper);

/// Adam update of every parameter in `stack`; increments `state.step_count`.
void adam_step(DenseStack& stack, const StackGradients& gradients, AdamState& state);

} // namespace aada
