#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "palcare/sparse.hpp"

namespace palcare {

enum class Activation : uint8_t { Selu, Relu, Tanh };

std::string_view activation_token(Activation kind);
std::optional<Activation> parse_activation(std::string_view token);

// Self-normalizing constants for SeLU.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

double activate(double x, Activation kind);
double activate_derivative(double x, Activation kind);
void activate_inplace(std::span<double> values, Activation kind);

struct ModelConfig {
    size_t input_dim = 0;
    std::vector<size_t> hidden_dims = {64, 64, 64, 64};
    Activation activation = Activation::Selu;
    uint64_t seed = 42;

    void validate() const;
};

/// Fully connected layer. Weights are stored column-major for an (out x in)
/// matrix, so each input unit owns a contiguous run of `out` weights; a sparse
/// input touches only the columns of its non-zeros.
struct DenseLayer {
    size_t in = 0;
    size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(size_t in_dim, size_t out_dim)
        : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

    double& weight(size_t row, size_t col) { return weights[col * out + row]; }
    double weight(size_t row, size_t col) const { return weights[col * out + row]; }
    std::span<const double> column(size_t col) const {
        return std::span<const double>(weights).subspan(col * out, out);
    }

    bool operator==(const DenseLayer&) const = default;
};

/// Hidden layers followed by a scalar output layer. Also used as the
/// container for gradients and Adam moments.
struct MLPParams {
    Activation activation = Activation::Selu;
    std::vector<DenseLayer> layers;

    size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::vector<size_t> hidden_dims() const;
    size_t parameter_count() const;
    MLPParams zeros_like() const;
    bool all_finite() const;

    /// Visits every parameter with its counterpart in `other` (same shape).
    template <typename Fn>
    void zip(MLPParams& other, Fn&& fn);

    bool operator==(const MLPParams&) const = default;
};

/// Normal(0, 1/fan_in) weights, zero biases.
MLPParams init_params(const ModelConfig& config);

double forward_logit(const MLPParams& params, SparseRow input);
/// Sigmoid of the logit, kept strictly inside (0, 1).
double forward(const MLPParams& params, SparseRow input);
/// Reference path over a dense input vector.
double forward_dense(const MLPParams& params, std::span<const double> input);

std::vector<double> predict(const MLPParams& params, const SparseMatrix& inputs);

struct LossAndGradients {
    double loss = 0.0;
    MLPParams gradients;
};

/// Mean logistic loss over the batch and its gradient with respect to every
/// parameter, by reverse-mode differentiation.
LossAndGradients loss_and_gradients(const MLPParams& params, std::span<const SparseRow> inputs,
                                    std::span<const double> labels);

/// Logistic loss of one example from its logit, log1p-stabilised.
double logistic_loss(double logit, double label);

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    MLPParams first_moment;
    MLPParams second_moment;
    uint64_t step = 0;

    static AdamState fresh(const MLPParams& params, AdamHyper hyper = {});
};

void adam_step(MLPParams& params, const MLPParams& gradients, AdamState& state);

struct Checkpoint {
    MLPParams params;
    std::string vocabulary_checksum;
};

/// Binary checkpoint: "PALCAREM" magic, u32 format version, u64 input_dim,
/// u32 hidden count + u64 widths, length-prefixed activation token and
/// vocabulary checksum, then per layer the column-major weights and the
/// bias as little-endian float64.
void save_checkpoint(const std::filesystem::path& path, const MLPParams& params,
                     std::string_view vocabulary_checksum);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <typename Fn>
void MLPParams::zip(MLPParams& other, Fn&& fn) {
    for (size_t l = 0; l < layers.size(); ++l) {
        auto& a = layers[l];
        auto& b = other.layers[l];
        for (size_t i = 0; i < a.weights.size(); ++i) fn(a.weights[i], b.weights[i]);
        for (size_t i = 0; i < a.bias.size(); ++i) fn(a.bias[i], b.bias[i]);
    }
}

}  // namespace palcare
