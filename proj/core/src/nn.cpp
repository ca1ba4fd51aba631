#include "aada/nn.hpp"

#include "aada/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aada {

namespace {

std::string layer_name(std::size_t i) { return "layer " + std::to_string(i); }

void check_same_shape(const StackGradients& g, const DenseStack& stack, const char* what) {
    if (g.layers.size() != stack.depth()) {
        throw DimensionError(what, "gradient depth " + std::to_string(g.layers.size()) +
                                       " != stack depth " + std::to_string(stack.depth()));
    }
    for (std::size_t i = 0; i < stack.depth(); ++i) {
        const auto& l = stack.layer(i);
        if (g.layers[i].weight.rows() != l.in_dim() || g.layers[i].weight.cols() != l.out_dim() ||
            g.layers[i].bias.size() != l.out_dim()) {
            throw DimensionError(std::string(what) + " " + layer_name(i), "shape mismatch");
        }
    }
}

} // namespace

std::string_view to_string(Activation a) noexcept {
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    }
    return "identity";
}

Activation activation_from_string(std::string_view name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::ReLU;
    throw FormatError("unknown activation '" + std::string(name) + "'");
}

// ---- DenseStack -----------------------------------------------------------

DenseStack::DenseStack(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.bias.size() != l.out_dim()) {
            throw DimensionError(layer_name(i), "bias length " + std::to_string(l.bias.size()) +
                                                    " != output dim " +
                                                    std::to_string(l.out_dim()));
        }
        if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
            throw DimensionError(layer_name(i), "input dim " + std::to_string(l.in_dim()) +
                                                    " does not chain with previous output dim " +
                                                    std::to_string(layers_[i - 1].out_dim()));
        }
    }
}

DenseStack DenseStack::glorot(std::span<const std::size_t> dims, Activation hidden,
                              Activation output, Rng& rng) {
    if (dims.size() < 2) throw DimensionError("DenseStack::glorot", "need at least two sizes");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const std::size_t fan_in = dims[i];
        const std::size_t fan_out = dims[i + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer;
        layer.weight = Matrix(fan_in, fan_out);
        for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
        layer.bias.assign(fan_out, 0.0);
        layer.activation = (i + 2 == dims.size()) ? output : hidden;
        layers.push_back(std::move(layer));
    }
    return DenseStack(std::move(layers));
}

std::size_t DenseStack::input_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t DenseStack::output_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::size_t DenseStack::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

DenseLayer& DenseStack::mutable_layer(std::size_t i) {
    ++revision_;
    return layers_.at(i);
}

// ---- forward / backward ----------------------------------------------------

namespace {

Matrix affine(const DenseLayer& layer, const Matrix& x) {
    Matrix z = matmul(x, layer.weight);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
    }
    return z;
}

void activate_in_place(Activation a, Matrix& z) {
    if (a == Activation::ReLU) {
        for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
    }
}

void check_input(const DenseStack& stack, const Matrix& input) {
    if (stack.depth() == 0) throw DimensionError("forward", "empty stack");
    if (input.cols() != stack.input_dim()) {
        throw DimensionError(layer_name(0), "input has " + std::to_string(input.cols()) +
                                                " columns, layer expects " +
                                                std::to_string(stack.input_dim()));
    }
}

} // namespace

ForwardResult forward(const DenseStack& stack, const Matrix& input) {
    check_input(stack, input);
    ForwardResult result;
    result.cache.owner = &stack;
    result.cache.revision = stack.revision();
    Matrix x = input;
    for (const auto& layer : stack.layers()) {
        Matrix z = affine(layer, x);
        result.cache.inputs.push_back(std::move(x));
        x = z;
        activate_in_place(layer.activation, x);
        result.cache.pre_activations.push_back(std::move(z));
    }
    result.output = std::move(x);
    return result;
}

Matrix predict(const DenseStack& stack, const Matrix& input) {
    check_input(stack, input);
    Matrix x = input;
    for (const auto& layer : stack.layers()) {
        x = affine(layer, x);
        activate_in_place(layer.activation, x);
    }
    return x;
}

BackwardResult backward(const DenseStack& stack, const ForwardCache& cache,
                        const Matrix& output_gradient) {
    if (cache.owner != &stack) {
        throw StaleCacheError("backward: cache was produced by a different stack");
    }
    if (cache.revision != stack.revision()) {
        throw StaleCacheError("backward: stack parameters changed since the forward pass");
    }
    if (cache.inputs.size() != stack.depth() || cache.pre_activations.size() != stack.depth()) {
        throw StaleCacheError("backward: cache depth does not match stack depth");
    }
    const Matrix& last_pre = cache.pre_activations.back();
    if (output_gradient.rows() != last_pre.rows() || output_gradient.cols() != last_pre.cols()) {
        throw DimensionError(layer_name(stack.depth() - 1),
                             "output gradient is " + std::to_string(output_gradient.rows()) + "x" +
                                 std::to_string(output_gradient.cols()) + ", expected " +
                                 std::to_string(last_pre.rows()) + "x" +
                                 std::to_string(last_pre.cols()));
    }

    BackwardResult result;
    result.parameters.layers.resize(stack.depth());
    Matrix grad = output_gradient;
    for (std::size_t li = stack.depth(); li-- > 0;) {
        const auto& layer = stack.layer(li);
        if (layer.activation == Activation::ReLU) {
            const auto pre = cache.pre_activations[li].values();
            auto g = grad.values();
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (!(pre[k] > 0.0)) g[k] = 0.0;
            }
        }
        auto& lg = result.parameters.layers[li];
        lg.weight = matmul_tn(cache.inputs[li], grad);
        lg.bias.assign(layer.out_dim(), 0.0);
        for (std::size_t r = 0; r < grad.rows(); ++r) {
            auto row = grad.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) lg.bias[c] += row[c];
        }
        grad = matmul_nt(grad, layer.weight);
    }
    result.input_gradient = std::move(grad);
    return result;
}

// ---- StackGradients --------------------------------------------------------

StackGradients StackGradients::zeros_like(const DenseStack& stack) {
    StackGradients g;
    for (const auto& l : stack.layers()) {
        g.layers.push_back({Matrix(l.in_dim(), l.out_dim()), std::vector<double>(l.out_dim(), 0.0)});
    }
    return g;
}

StackGradients& StackGradients::operator+=(const StackGradients& other) {
    if (other.layers.size() != layers.size()) {
        throw DimensionError("StackGradients::operator+=", "depth mismatch");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto dst = layers[i].weight.values();
        auto src = other.layers[i].weight.values();
        if (dst.size() != src.size() || layers[i].bias.size() != other.layers[i].bias.size()) {
            throw DimensionError("StackGradients::operator+= " + layer_name(i), "shape mismatch");
        }
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        for (std::size_t k = 0; k < layers[i].bias.size(); ++k) {
            layers[i].bias[k] += other.layers[i].bias[k];
        }
    }
    return *this;
}

StackGradients StackGradients::scaled(double factor) const {
    StackGradients out = *this;
    for (auto& l : out.layers) {
        for (double& v : l.weight.values()) v *= factor;
        for (double& v : l.bias) v *= factor;
    }
    return out;
}

bool StackGradients::all_zero() const noexcept {
    for (const auto& l : layers) {
        for (double v : l.weight.values()) {
            if (v != 0.0) return false;
        }
        for (double v : l.bias) {
            if (v != 0.0) return false;
        }
    }
    return true;
}

// ---- losses ------------------------------------------------------------------

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) noexcept {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto in = logits.row(r);
        const double m = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (double v : in) sum += std::exp(v - m);
        const double lse = m + std::log(sum);
        auto o = out.row(r);
        for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] - lse;
    }
    return out;
}

Matrix softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto in = logits.row(r);
        const double m = *std::max_element(in.begin(), in.end());
        auto o = out.row(r);
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - m);
            sum += o[c];
        }
        for (double& v : o) v /= sum;
    }
    return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const Label> labels) {
    if (labels.size() != logits.rows()) {
        throw DimensionError("softmax_cross_entropy", std::to_string(labels.size()) +
                                                          " labels for " +
                                                          std::to_string(logits.rows()) + " rows");
    }
    if (logits.rows() == 0) throw DimensionError("softmax_cross_entropy", "empty batch");
    const auto num_classes = static_cast<Label>(logits.cols());
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || labels[r] >= num_classes) {
            throw LabelError("softmax_cross_entropy: label " + std::to_string(labels[r]) +
                             " at row " + std::to_string(r) + " outside [0, " +
                             std::to_string(num_classes) + ")");
        }
    }
    const Matrix logp = log_softmax(logits);
    const double n = static_cast<double>(logits.rows());
    LossResult result;
    result.gradient = Matrix(logits.rows(), logits.cols());
    double total = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto y = static_cast<std::size_t>(labels[r]);
        total -= logp(r, y);
        auto g = result.gradient.row(r);
        for (std::size_t c = 0; c < g.size(); ++c) {
            g[c] = (std::exp(logp(r, c)) - (c == y ? 1.0 : 0.0)) / n;
        }
    }
    result.loss = total / n;
    return result;
}

VectorLossResult binary_logistic_loss(std::span<const double> logits,
                                      std::span<const int> domain_labels) {
    if (logits.size() != domain_labels.size()) {
        throw DimensionError("binary_logistic_loss", std::to_string(domain_labels.size()) +
                                                         " labels for " +
                                                         std::to_string(logits.size()) + " logits");
    }
    if (logits.empty()) throw DimensionError("binary_logistic_loss", "empty batch");
    const double n = static_cast<double>(logits.size());
    VectorLossResult result;
    result.gradient.resize(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const int y = domain_labels[i];
        if (y != 0 && y != 1) {
            throw LabelError("binary_logistic_loss: domain label " + std::to_string(y) +
                             " at row " + std::to_string(i) + " is not 0 or 1");
        }
        const double z = logits[i];
        // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
        total += softplus(z) - static_cast<double>(y) * z;
        result.gradient[i] = (sigmoid(z) - static_cast<double>(y)) / n;
    }
    result.loss = total / n;
    return result;
}

std::vector<double> entropy(const Matrix& probabilities) {
    std::vector<double> h(probabilities.rows(), 0.0);
    for (std::size_t r = 0; r < probabilities.rows(); ++r) {
        double sum = 0.0;
        double acc = 0.0;
        for (double p : probabilities.row(r)) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw DistributionError("entropy: row " + std::to_string(r) +
                                        " has a negative or non-finite entry");
            }
            sum += p;
            if (p > 0.0) acc -= p * std::log(p);
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw DistributionError("entropy: row " + std::to_string(r) + " sums to " +
                                    std::to_string(sum));
        }
        h[r] = std::max(acc, 0.0);
    }
    return h;
}

LossResult mean_entropy_loss(const Matrix& logits) {
    if (logits.rows() == 0) throw DimensionError("mean_entropy_loss", "empty batch");
    const Matrix logp = log_softmax(logits);
    const double n = static_cast<double>(logits.rows());
    LossResult result;
    result.gradient = Matrix(logits.rows(), logits.cols());
    double total = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto lp = logp.row(r);
        double h = 0.0;
        for (double v : lp) h -= std::exp(v) * v;
        total += h;
        // dH/dz_j = -p_j (log p_j + H)
        auto g = result.gradient.row(r);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = -std::exp(lp[c]) * (lp[c] + h) / n;
    }
    result.loss = total / n;
    return result;
}

// ---- Adam --------------------------------------------------------------------

AdamState AdamState::for_stack(const DenseStack& stack, const AdamHyper& hyper) {
    AdamState s;
    s.first_moment = StackGradients::zeros_like(stack);
    s.second_moment = StackGradients::zeros_like(stack);
    s.beta1 = hyper.beta1;
    s.beta2 = hyper.beta2;
    s.epsilon = hyper.epsilon;
    s.learning_rate = hyper.learning_rate;
    return s;
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::uint64_t step, const AdamHyper& hyper) {
    if (grads.size() != params.size() || first_moment.size() != params.size() ||
        second_moment.size() != params.size()) {
        throw DimensionError("adam_update", "buffer sizes disagree");
    }
    const double t = static_cast<double>(step);
    const double correction1 = 1.0 - std::pow(hyper.beta1, t);
    const double correction2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        first_moment[i] = hyper.beta1 * first_moment[i] + (1.0 - hyper.beta1) * g;
        second_moment[i] = hyper.beta2 * second_moment[i] + (1.0 - hyper.beta2) * g * g;
        const double m_hat = first_moment[i] / correction1;
        const double v_hat = second_moment[i] / correction2;
        params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

void adam_step(DenseStack& stack, const StackGradients& gradients, AdamState& state) {
    check_same_shape(gradients, stack, "adam_step gradients");
    check_same_shape(state.first_moment, stack, "adam_step first moment");
    check_same_shape(state.second_moment, stack, "adam_step second moment");
    ++state.step_count;
    const AdamHyper hyper{state.learning_rate, state.beta1, state.beta2, state.epsilon};
    for (std::size_t i = 0; i < stack.depth(); ++i) {
        auto& layer = stack.mutable_layer(i);
        const auto& g = gradients.layers[i];
        adam_update(layer.weight.values(), g.weight.values(),
                    state.first_moment.layers[i].weight.values(),
                    state.second_moment.layers[i].weight.values(), state.step_count, hyper);
        adam_update(layer.bias, g.bias, state.first_moment.layers[i].bias,
                    state.second_moment.layers[i].bias, state.step_count, hyper);
    }
}

} // namespace aada
