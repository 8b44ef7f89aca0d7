#include "palcare/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "palcare/error.hpp"

namespace palcare {

namespace {

constexpr double kProbabilityFloor = 1e-15;

double sigmoid(double z) {
    double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

// Unclamped sigmoid for the loss gradient, so a saturated output yields an
// exactly zero gradient.
double sigmoid_raw(double z) {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_finite(std::span<const double> values, size_t layer) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Numeric, fmt::format("non-finite value at layer {}", layer));
        }
    }
}

// z[b, :] += a[b, i] * W(:, i) over a dense batch (row-major batch x in).
void dense_affine(const DenseLayer& layer, std::span<const double> input, size_t batch,
                  std::span<double> output) {
    for (size_t b = 0; b < batch; ++b) {
        double* z = output.data() + b * layer.out;
        std::copy(layer.bias.begin(), layer.bias.end(), z);
        const double* a = input.data() + b * layer.in;
        for (size_t i = 0; i < layer.in; ++i) {
            const double ai = a[i];
            if (ai == 0.0) continue;
            const double* w = layer.weights.data() + i * layer.out;
            for (size_t j = 0; j < layer.out; ++j) z[j] += ai * w[j];
        }
    }
}

void sparse_affine(const DenseLayer& layer, SparseRow row, double* z) {
    std::copy(layer.bias.begin(), layer.bias.end(), z);
    for (size_t k = 0; k < row.nnz(); ++k) {
        const double v = row.values[k];
        const double* w = layer.weights.data() + size_t(row.indices[k]) * layer.out;
        for (size_t j = 0; j < layer.out; ++j) z[j] += v * w[j];
    }
}

void check_input(const MLPParams& params, SparseRow row) {
    if (params.layers.empty()) {
        throw Error(ErrorKind::Validation, "model has no layers");
    }
    for (int32_t index : row.indices) {
        if (index < 0 || size_t(index) >= params.input_dim()) {
            throw Error(ErrorKind::Validation,
                        fmt::format("input index {} outside model input dimension {}", index,
                                    params.input_dim()));
        }
    }
}

// Pre-activations for every layer of a batch; the last entry holds the logits.
struct BatchForward {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

BatchForward run_forward(const MLPParams& params, std::span<const SparseRow> inputs) {
    const size_t batch = inputs.size();
    const size_t n_layers = params.layers.size();
    BatchForward f;
    f.pre.resize(n_layers);
    f.post.resize(n_layers - 1);
    for (size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = params.layers[l];
        f.pre[l].assign(batch * layer.out, 0.0);
        if (l == 0) {
            for (size_t b = 0; b < batch; ++b) {
                check_input(params, inputs[b]);
                sparse_affine(layer, inputs[b], f.pre[0].data() + b * layer.out);
            }
        } else {
            dense_affine(layer, f.post[l - 1], batch, f.pre[l]);
        }
        check_finite(f.pre[l], l);
        if (l + 1 < n_layers) {
            f.post[l] = f.pre[l];
            activate_inplace(f.post[l], params.activation);
        }
    }
    return f;
}

}  // namespace

std::string_view activation_token(Activation kind) {
    switch (kind) {
    case Activation::Selu: return "selu";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    }
    return "?";
}

std::optional<Activation> parse_activation(std::string_view token) {
    if (token == "selu") return Activation::Selu;
    if (token == "relu") return Activation::Relu;
    if (token == "tanh") return Activation::Tanh;
    return std::nullopt;
}

double activate(double x, Activation kind) {
    switch (kind) {
    case Activation::Selu: return x > 0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
    case Activation::Relu: return x > 0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    }
    return x;
}

double activate_derivative(double x, Activation kind) {
    switch (kind) {
    case Activation::Selu: return x > 0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    case Activation::Relu: return x > 0 ? 1.0 : 0.0;
    case Activation::Tanh: {
        double t = std::tanh(x);
        return 1.0 - t * t;
    }
    }
    return 1.0;
}

void activate_inplace(std::span<double> values, Activation kind) {
    for (double& v : values) v = activate(v, kind);
}

void ModelConfig::validate() const {
    if (input_dim == 0) throw Error(ErrorKind::Config, "model: input_dim must be positive");
    if (hidden_dims.empty()) throw Error(ErrorKind::Config, "model: need at least one hidden layer");
    for (size_t w : hidden_dims) {
        if (w == 0) throw Error(ErrorKind::Config, "model: hidden widths must be positive");
    }
}

std::vector<size_t> MLPParams::hidden_dims() const {
    std::vector<size_t> dims;
    for (size_t l = 0; l + 1 < layers.size(); ++l) dims.push_back(layers[l].out);
    return dims;
}

size_t MLPParams::parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

MLPParams MLPParams::zeros_like() const {
    MLPParams z;
    z.activation = activation;
    for (const auto& l : layers) z.layers.emplace_back(l.in, l.out);
    return z;
}

bool MLPParams::all_finite() const {
    for (const auto& l : layers) {
        for (double w : l.weights) if (!std::isfinite(w)) return false;
        for (double b : l.bias) if (!std::isfinite(b)) return false;
    }
    return true;
}

MLPParams init_params(const ModelConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    MLPParams params;
    params.activation = config.activation;
    size_t in = config.input_dim;
    auto add_layer = [&](size_t out) {
        DenseLayer layer(in, out);
        std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(double(in)));
        for (double& w : layer.weights) w = normal(rng);
        params.layers.push_back(std::move(layer));
        in = out;
    };
    for (size_t width : config.hidden_dims) add_layer(width);
    add_layer(1);
    return params;
}

double forward_logit(const MLPParams& params, SparseRow input) {
    std::array<SparseRow, 1> batch = {input};
    return run_forward(params, batch).pre.back()[0];
}

double forward(const MLPParams& params, SparseRow input) {
    return sigmoid(forward_logit(params, input));
}

double forward_dense(const MLPParams& params, std::span<const double> input) {
    if (params.layers.empty() || input.size() != params.input_dim()) {
        throw Error(ErrorKind::Validation, "forward_dense: input dimension mismatch");
    }
    std::vector<double> a(input.begin(), input.end());
    for (size_t l = 0; l < params.layers.size(); ++l) {
        const DenseLayer& layer = params.layers[l];
        std::vector<double> z(layer.out);
        for (size_t j = 0; j < layer.out; ++j) {
            double sum = layer.bias[j];
            for (size_t i = 0; i < layer.in; ++i) sum += layer.weight(j, i) * a[i];
            z[j] = sum;
        }
        if (l + 1 < params.layers.size()) activate_inplace(z, params.activation);
        a = std::move(z);
    }
    return sigmoid(a[0]);
}

std::vector<double> predict(const MLPParams& params, const SparseMatrix& inputs) {
    std::vector<double> out;
    out.reserve(inputs.rows());
    constexpr size_t kChunk = 256;
    std::vector<SparseRow> rows;
    for (size_t start = 0; start < inputs.rows(); start += kChunk) {
        rows.clear();
        for (size_t r = start; r < std::min(inputs.rows(), start + kChunk); ++r) {
            rows.push_back(inputs.row(r));
        }
        auto f = run_forward(params, rows);
        for (double z : f.pre.back()) out.push_back(sigmoid(z));
    }
    return out;
}

double logistic_loss(double logit, double label) {
    // softplus(z) - y z, with softplus(z) = max(z, 0) + log1p(exp(-|z|))
    return std::max(logit, 0.0) - label * logit + std::log1p(std::exp(-std::abs(logit)));
}

LossAndGradients loss_and_gradients(const MLPParams& params, std::span<const SparseRow> inputs,
                                    std::span<const double> labels) {
    if (inputs.empty() || inputs.size() != labels.size()) {
        throw Error(ErrorKind::Validation, "loss_and_gradients: need a non-empty labelled batch");
    }
    const size_t batch = inputs.size();
    const size_t n_layers = params.layers.size();
    BatchForward f = run_forward(params, inputs);

    LossAndGradients result;
    result.gradients = params.zeros_like();
    auto& grads = result.gradients.layers;

    // dL/dz at the output, already divided by the batch size.
    std::vector<double> delta(batch);
    const auto& logits = f.pre.back();
    for (size_t b = 0; b < batch; ++b) {
        result.loss += logistic_loss(logits[b], labels[b]);
        delta[b] = (sigmoid_raw(logits[b]) - labels[b]) / double(batch);
    }
    result.loss /= double(batch);

    for (size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = params.layers[l];
        DenseLayer& g = grads[l];
        if (l + 1 < n_layers) {
            // delta currently holds dL/da for this layer's outputs
            const auto& z = f.pre[l];
            for (size_t k = 0; k < delta.size(); ++k) {
                delta[k] *= activate_derivative(z[k], params.activation);
            }
        }
        check_finite(delta, l);
        for (size_t b = 0; b < batch; ++b) {
            const double* d = delta.data() + b * layer.out;
            for (size_t j = 0; j < layer.out; ++j) g.bias[j] += d[j];
        }
        if (l == 0) {
            for (size_t b = 0; b < batch; ++b) {
                const double* d = delta.data() + b * layer.out;
                const SparseRow row = inputs[b];
                for (size_t k = 0; k < row.nnz(); ++k) {
                    const double v = row.values[k];
                    double* gw = g.weights.data() + size_t(row.indices[k]) * layer.out;
                    for (size_t j = 0; j < layer.out; ++j) gw[j] += v * d[j];
                }
            }
            break;
        }
        const auto& a = f.post[l - 1];
        std::vector<double> upstream(batch * layer.in, 0.0);
        for (size_t b = 0; b < batch; ++b) {
            const double* d = delta.data() + b * layer.out;
            const double* ab = a.data() + b * layer.in;
            double* up = upstream.data() + b * layer.in;
            for (size_t i = 0; i < layer.in; ++i) {
                const double* w = layer.weights.data() + i * layer.out;
                double* gw = g.weights.data() + i * layer.out;
                const double ai = ab[i];
                double sum = 0.0;
                for (size_t j = 0; j < layer.out; ++j) {
                    gw[j] += ai * d[j];
                    sum += w[j] * d[j];
                }
                up[i] = sum;
            }
        }
        delta = std::move(upstream);
    }
    return result;
}

AdamState AdamState::fresh(const MLPParams& params, AdamHyper hyper) {
    AdamState s;
    s.hyper = hyper;
    s.first_moment = params.zeros_like();
    s.second_moment = params.zeros_like();
    return s;
}

void adam_step(MLPParams& params, const MLPParams& gradients, AdamState& state) {
    if (gradients.layers.size() != params.layers.size() ||
        state.first_moment.layers.size() != params.layers.size()) {
        throw Error(ErrorKind::Validation, "adam_step: shape mismatch");
    }
    const AdamHyper& h = state.hyper;
    state.step += 1;
    const double t = double(state.step);
    const double correction1 = 1.0 - std::pow(h.beta1, t);
    const double correction2 = 1.0 - std::pow(h.beta2, t);
    auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v) {
        if (theta.size() != g.size()) throw Error(ErrorKind::Validation, "adam_step: shape mismatch");
        for (size_t i = 0; i < theta.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
        }
    };
    for (size_t l = 0; l < params.layers.size(); ++l) {
        auto& p = params.layers[l];
        const auto& g = gradients.layers[l];
        auto& m = state.first_moment.layers[l];
        auto& v = state.second_moment.layers[l];
        update(p.weights, g.weights, m.weights, v.weights);
        update(p.bias, g.bias, m.bias, v.bias);
    }
}

}  // namespace palcare
