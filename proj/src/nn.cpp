#include "fcg/nn.hpp"

#include <chrono>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "fcg/errors.hpp"
#include "fcg/number_io.hpp"

namespace fcg {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

    std::uint64_t next() {
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        return state_ * 0x2545f4914f6cdd1dULL;
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t n = bound + 1;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t draw = next();
        while (draw > limit) draw = next();
        return draw % n;
    }

private:
    std::uint64_t state_;
};

double apply_activation(Activation a, double x) {
    return a == Activation::Tanh ? std::tanh(x) : x;
}

void check_finite_params(const Mlp& m) {
    for (const auto& layer : m.layers) {
        for (double w : layer.weights)
            if (!std::isfinite(w)) throw InvalidArchitecture("non-finite weight");
        for (double b : layer.biases)
            if (!std::isfinite(b)) throw InvalidArchitecture("non-finite bias");
    }
}

struct NormalizedSet {
    std::vector<NormalizedSample> samples;
};

NormalizedSet normalize_set(const std::vector<Sample>& raw, const Normalizer& nz) {
    NormalizedSet out;
    out.samples.reserve(raw.size());
    for (const auto& s : raw) {
        const auto f = normalize_features(s.features, nz);
        out.samples.push_back({{f.begin(), f.end()}, normalize_target(s.target, nz)});
    }
    return out;
}

double validation_mse(const Mlp& m, const NormalizedSet& set) {
    double sum = 0.0;
    for (const auto& s : set.samples) {
        const double y = forward_activations(m, s.input).back()[0];
        const double d = y - s.target;
        sum += d * d;
    }
    return sum / static_cast<double>(set.samples.size());
}

struct AdamState {
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    long long step = 0;

    explicit AdamState(const Mlp& model) {
        for (const auto& layer : model.layers) {
            m_w.emplace_back(layer.weights.size(), 0.0);
            v_w.emplace_back(layer.weights.size(), 0.0);
            m_b.emplace_back(layer.biases.size(), 0.0);
            v_b.emplace_back(layer.biases.size(), 0.0);
        }
    }
};

void apply_update(Mlp& model, const Gradients& grads, const TrainConfig& cfg, AdamState& adam) {
    if (cfg.optimizer == TrainConfig::Optimizer::Sgd) {
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto& layer = model.layers[l];
            for (std::size_t i = 0; i < layer.weights.size(); ++i)
                layer.weights[i] -= cfg.learning_rate * grads.weights[l][i];
            for (std::size_t i = 0; i < layer.biases.size(); ++i)
                layer.biases[i] -= cfg.learning_rate * grads.biases[l][i];
        }
        return;
    }

    ++adam.step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));
    auto step_param = [&](double& p, double g, double& mo, double& vo) {
        mo = cfg.adam_beta1 * mo + (1.0 - cfg.adam_beta1) * g;
        vo = cfg.adam_beta2 * vo + (1.0 - cfg.adam_beta2) * g * g;
        p -= cfg.learning_rate * (mo / bc1) / (std::sqrt(vo / bc2) + cfg.adam_epsilon);
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            step_param(layer.weights[i], grads.weights[l][i], adam.m_w[l][i], adam.v_w[l][i]);
        for (std::size_t i = 0; i < layer.biases.size(); ++i)
            step_param(layer.biases[i], grads.biases[l][i], adam.m_b[l][i], adam.v_b[l][i]);
    }
}

} // namespace

std::string activation_name(Activation a) {
    return a == Activation::Tanh ? "tanh" : "linear";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "linear") return Activation::Linear;
    throw CorruptModelFile("unknown activation '" + name + "'");
}

std::vector<int> Mlp::layer_sizes() const {
    std::vector<int> sizes;
    if (layers.empty()) return sizes;
    sizes.push_back(layers.front().in_size);
    for (const auto& layer : layers) sizes.push_back(layer.out_size);
    return sizes;
}

Mlp init_mlp(const MlpConfig& config) {
    if (config.layer_sizes.size() < 3)
        throw InvalidArchitecture("need input, at least one hidden, and output layer; got " +
                                  std::to_string(config.layer_sizes.size()) + " sizes");
    for (int s : config.layer_sizes)
        if (s < 1) throw InvalidArchitecture("layer sizes must be positive");

    Rng rng(config.init_seed);
    Mlp m;
    for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
        LayerParams layer;
        layer.in_size = config.layer_sizes[l];
        layer.out_size = config.layer_sizes[l + 1];
        layer.activation = (l + 2 == config.layer_sizes.size()) ? config.output_activation
                                                                : config.hidden_activation;
        const double limit = std::sqrt(6.0 / (layer.in_size + layer.out_size));
        layer.weights.resize(static_cast<std::size_t>(layer.in_size) * layer.out_size);
        for (double& w : layer.weights) w = limit * (2.0 * rng.uniform() - 1.0);
        layer.biases.assign(layer.out_size, 0.0);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

LayerActivations forward_activations(const Mlp& m, const std::vector<double>& input) {
    if (m.layers.empty()) throw InvalidArchitecture("model has no layers");
    if (static_cast<int>(input.size()) != m.layers.front().in_size)
        throw LengthMismatch("input width " + std::to_string(input.size()) +
                             " does not match first layer width " +
                             std::to_string(m.layers.front().in_size));

    LayerActivations acts;
    acts.reserve(m.layers.size() + 1);
    acts.push_back(input);
    for (const auto& layer : m.layers) {
        std::vector<double> out(layer.out_size);
        const auto& in = acts.back();
        for (int o = 0; o < layer.out_size; ++o) {
            double z = layer.biases[o];
            const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_size;
            for (int i = 0; i < layer.in_size; ++i) z += row[i] * in[i];
            out[o] = apply_activation(layer.activation, z);
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

double forward(const Mlp& m, const std::array<double, 3>& input) {
    if (m.layers.empty() || m.layers.back().out_size != 1)
        throw InvalidArchitecture("scalar forward requires a single-output network");
    return forward_activations(m, {input.begin(), input.end()}).back()[0];
}

double loss_mse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.size() != targets.size())
        throw LengthMismatch("predictions (" + std::to_string(predictions.size()) +
                             ") and targets (" + std::to_string(targets.size()) +
                             ") differ in length");
    if (predictions.empty()) throw EmptyBatch("cannot compute MSE of an empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

Gradients backward(const Mlp& m, const std::vector<NormalizedSample>& batch) {
    if (batch.empty()) throw EmptyBatch("cannot take gradients of an empty batch");
    if (m.layers.empty() || m.layers.back().out_size != 1)
        throw InvalidArchitecture("backward requires a single-output network");

    Gradients grads;
    for (const auto& layer : m.layers) {
        grads.weights.emplace_back(layer.weights.size(), 0.0);
        grads.biases.emplace_back(layer.biases.size(), 0.0);
    }

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& sample : batch) {
        const LayerActivations acts = forward_activations(m, sample.input);

        // d(batch MSE)/d(output); the linear output layer passes it straight
        // through, tanh layers scale by 1 - tanh^2.
        std::vector<double> delta = {2.0 * (acts.back()[0] - sample.target) * inv_batch};
        for (std::size_t l = m.layers.size(); l-- > 0;) {
            const auto& layer = m.layers[l];
            if (layer.activation == Activation::Tanh)
                for (int o = 0; o < layer.out_size; ++o) {
                    const double h = acts[l + 1][o];
                    delta[o] *= 1.0 - h * h;
                }

            const auto& in = acts[l];
            for (int o = 0; o < layer.out_size; ++o) {
                double* grow =
                    grads.weights[l].data() + static_cast<std::size_t>(o) * layer.in_size;
                for (int i = 0; i < layer.in_size; ++i) grow[i] += delta[o] * in[i];
                grads.biases[l][o] += delta[o];
            }

            if (l == 0) break;
            std::vector<double> prev(layer.in_size, 0.0);
            for (int o = 0; o < layer.out_size; ++o) {
                const double* row =
                    layer.weights.data() + static_cast<std::size_t>(o) * layer.in_size;
                for (int i = 0; i < layer.in_size; ++i) prev[i] += row[i] * delta[o];
            }
            delta = std::move(prev);
        }
    }
    return grads;
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw InvalidTrainConfig("max_epochs must be positive");
    if (!(learning_rate > 0.0)) throw InvalidTrainConfig("learning_rate must be positive");
    if (batch_size < 1) throw InvalidTrainConfig("batch_size must be positive");
    if (early_stop_patience < 0) throw InvalidTrainConfig("early_stop_patience must be >= 0");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0) ||
        !(adam_epsilon > 0.0))
        throw InvalidTrainConfig("Adam parameters out of range");
}

TrainReport train(Mlp& m, const DataSplits& splits, const TrainConfig& cfg) {
    cfg.validate();
    if (splits.train.empty()) throw EmptySplit("training subset is empty");
    if (splits.validation.empty()) throw EmptySplit("validation subset is empty");
    if (!m.normalizer) throw MissingNormalizer("model has no fitted normalizer");
    check_finite_params(m);

    const auto started = std::chrono::steady_clock::now();
    const NormalizedSet train_set = normalize_set(splits.train, *m.normalizer);
    const NormalizedSet val_set = normalize_set(splits.validation, *m.normalizer);
    const std::size_t n = train_set.samples.size();

    Rng shuffle_rng(cfg.seed);
    AdamState adam(m);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainReport report;
    Mlp best = m;
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_without_improvement = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.below(i)]);

        double epoch_loss = 0.0;
        std::vector<NormalizedSample> batch;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i)
                batch.push_back(train_set.samples[order[i]]);

            double batch_loss = 0.0;
            for (const auto& s : batch) {
                const double d = forward_activations(m, s.input).back()[0] - s.target;
                batch_loss += d * d;
            }
            batch_loss /= static_cast<double>(batch.size());
            epoch_loss += batch_loss * static_cast<double>(batch.size());

            apply_update(m, backward(m, batch), cfg, adam);
        }
        epoch_loss /= static_cast<double>(n);

        const double val_loss = validation_mse(m, val_set);
        if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss))
            throw NonFiniteLoss("training diverged at epoch " + std::to_string(epoch));

        report.train_loss_history.push_back(epoch_loss);
        report.validation_loss_history.push_back(val_loss);
        report.epochs_run = epoch;

        if (val_loss < best_val) {
            best_val = val_loss;
            best = m;
            report.best_epoch = epoch;
            epochs_without_improvement = 0;
        } else if (++epochs_without_improvement > cfg.early_stop_patience) {
            break;
        }
    }

    m = best;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

double predict(const Mlp& m, const std::array<double, 3>& raw_features) {
    if (!m.normalizer) throw MissingNormalizer("model has no fitted normalizer");
    const auto normalized = normalize_features(raw_features, *m.normalizer);
    return denormalize_target(forward(m, normalized), *m.normalizer);
}

double predict(const Mlp& m, double cycles, const LoadCondition& condition) {
    const auto [r, rol] = condition_features(condition);
    return predict(m, {cycles, r, rol});
}

void save_model(const Mlp& m, std::ostream& sink) {
    sink << "format_version 1\n";
    sink << "layers " << m.layers.size() << '\n';
    sink << "layer_sizes";
    for (int s : m.layer_sizes()) sink << ' ' << s;
    sink << '\n';
    sink << "activations";
    for (const auto& layer : m.layers) sink << ' ' << activation_name(layer.activation);
    sink << '\n';
    if (m.normalizer) {
        sink << "normalizer present\n";
        sink << "normalizer_min";
        for (double v : m.normalizer->minimum) sink << ' ' << format_double(v);
        sink << '\n';
        sink << "normalizer_max";
        for (double v : m.normalizer->maximum) sink << ' ' << format_double(v);
        sink << '\n';
    } else {
        sink << "normalizer absent\n";
    }
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const auto& layer = m.layers[l];
        sink << "weights " << l << '\n';
        for (int o = 0; o < layer.out_size; ++o) {
            for (int i = 0; i < layer.in_size; ++i) {
                if (i) sink << ' ';
                sink << format_double(layer.weights[static_cast<std::size_t>(o) * layer.in_size + i]);
            }
            sink << '\n';
        }
        sink << "biases " << l << '\n';
        for (int o = 0; o < layer.out_size; ++o) {
            if (o) sink << ' ';
            sink << format_double(layer.biases[o]);
        }
        sink << '\n';
    }
    sink << "end\n";
    if (!sink) throw SinkFailure("failed writing model file");
}

namespace {

std::string next_token(std::istream& in, const char* expected_what) {
    std::string token;
    if (!(in >> token))
        throw CorruptModelFile(std::string("unexpected end of model file, expected ") +
                               expected_what);
    return token;
}

void expect_token(std::istream& in, const std::string& literal) {
    const std::string token = next_token(in, ("'" + literal + "'").c_str());
    if (token != literal)
        throw CorruptModelFile("expected '" + literal + "', got '" + token + "'");
}

double read_double(std::istream& in, const char* what) {
    double value = 0.0;
    if (!parse_double(next_token(in, what), value))
        throw CorruptModelFile(std::string("expected a number for ") + what);
    return value;
}

long long read_integer(std::istream& in, const char* what) {
    long long value = 0;
    if (!parse_long(next_token(in, what), value))
        throw CorruptModelFile(std::string("expected an integer for ") + what);
    return value;
}

} // namespace

Mlp load_model(std::istream& source) {
    expect_token(source, "format_version");
    const long long version = read_integer(source, "format_version");
    if (version != 1)
        throw VersionMismatch("unsupported model format_version " + std::to_string(version));

    expect_token(source, "layers");
    const long long layer_count = read_integer(source, "layer count");
    if (layer_count < 1 || layer_count > 1000) throw CorruptModelFile("implausible layer count");

    expect_token(source, "layer_sizes");
    std::vector<int> sizes;
    for (long long i = 0; i <= layer_count; ++i) {
        const long long s = read_integer(source, "layer size");
        if (s < 1) throw CorruptModelFile("layer sizes must be positive");
        sizes.push_back(static_cast<int>(s));
    }

    expect_token(source, "activations");
    std::vector<Activation> activations;
    for (long long i = 0; i < layer_count; ++i)
        activations.push_back(activation_from_name(next_token(source, "activation name")));

    Mlp m;
    expect_token(source, "normalizer");
    const std::string presence = next_token(source, "'present' or 'absent'");
    if (presence == "present") {
        Normalizer nz;
        expect_token(source, "normalizer_min");
        for (double& v : nz.minimum) v = read_double(source, "normalizer minimum");
        expect_token(source, "normalizer_max");
        for (double& v : nz.maximum) v = read_double(source, "normalizer maximum");
        m.normalizer = nz;
    } else if (presence != "absent") {
        throw CorruptModelFile("normalizer must be 'present' or 'absent', got '" + presence + "'");
    }

    for (long long l = 0; l < layer_count; ++l) {
        LayerParams layer;
        layer.in_size = sizes[l];
        layer.out_size = sizes[l + 1];
        layer.activation = activations[l];

        expect_token(source, "weights");
        if (read_integer(source, "layer index") != l)
            throw CorruptModelFile("layer index out of order");
        layer.weights.resize(static_cast<std::size_t>(layer.in_size) * layer.out_size);
        for (double& w : layer.weights) w = read_double(source, "weight");

        expect_token(source, "biases");
        if (read_integer(source, "layer index") != l)
            throw CorruptModelFile("layer index out of order");
        layer.biases.resize(layer.out_size);
        for (double& b : layer.biases) b = read_double(source, "bias");

        m.layers.push_back(std::move(layer));
    }
    expect_token(source, "end");
    check_finite_params(m);
    return m;
}

} // namespace fcg
