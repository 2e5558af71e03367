#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fcg/pipeline.hpp"

namespace fcg {

enum class Activation { Tanh, Linear };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Network architecture. The default 3-75-1 takes the features
/// (N, R, R_ol) through one 75-neuron tanh hidden layer to a single
/// linear output predicting the crack length.
struct MlpConfig {
    std::vector<int> layer_sizes = {3, 75, 1};
    Activation hidden_activation = Activation::Tanh;
    Activation output_activation = Activation::Linear;
    std::uint64_t init_seed = 0;
};

/// One fully connected layer; weights are row-major (out x in).
struct LayerParams {
    int in_size = 0;
    int out_size = 0;
    std::vector<double> weights;
    std::vector<double> biases;
    Activation activation = Activation::Tanh;
};

/// A multilayer perceptron plus the normalizer it was fitted with.
/// Immutable once trained; safe to share across threads for prediction.
struct Mlp {
    std::vector<LayerParams> layers;
    std::optional<Normalizer> normalizer;

    std::vector<int> layer_sizes() const;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
/// deterministic per init_seed. Requires at least one hidden layer.
Mlp init_mlp(const MlpConfig& config);

/// Input plus the post-activation output of every layer, as produced by
/// forward_activations. activations[0] is the input itself.
using LayerActivations = std::vector<std::vector<double>>;

LayerActivations forward_activations(const Mlp& m, const std::vector<double>& input);

/// Scalar forward pass on an already-normalized feature vector.
double forward(const Mlp& m, const std::array<double, 3>& input);

double loss_mse(const std::vector<double>& predictions, const std::vector<double>& targets);

/// Parameter gradients, same shapes as the corresponding Mlp layers.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

/// A normalized training point for backward(): arbitrary input width,
/// scalar target.
struct NormalizedSample {
    std::vector<double> input;
    double target = 0.0;
};

/// Exact analytic gradient of the batch-mean MSE with respect to every
/// weight and bias.
Gradients backward(const Mlp& m, const std::vector<NormalizedSample>& batch);

struct TrainConfig {
    int max_epochs = 5000;
    double learning_rate = 1e-3;
    enum class Optimizer { Adam, Sgd } optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int batch_size = 32;
    // Validation MSE on this task plateaus for long stretches before the
    // final descent; a short patience stops training well before the fit
    // has converged.
    int early_stop_patience = 150;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainReport {
    int epochs_run = 0;
    int best_epoch = 0; // 1-based
    std::vector<double> train_loss_history;
    std::vector<double> validation_loss_history;
    double wall_time_seconds = 0.0;
};

/// Mini-batch training on normalized samples with early stopping on
/// validation MSE. The model keeps the parameters of the best validation
/// epoch. Deterministic given seeds and input order; single-threaded.
TrainReport train(Mlp& m, const DataSplits& splits, const TrainConfig& cfg);

/// Raw features in, crack length in millimetres out: normalize, forward,
/// denormalize. Requires a fitted normalizer.
double predict(const Mlp& m, const std::array<double, 3>& raw_features);
double predict(const Mlp& m, double cycles, const LoadCondition& condition);

/// Structured-text model persistence with round-trip-exact numbers:
/// load(save(m)) reproduces forward outputs bit-identically.
void save_model(const Mlp& m, std::ostream& sink);
Mlp load_model(std::istream& source);

} // namespace fcg
