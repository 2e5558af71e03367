#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <sstream>

#include "fcg/dataset.hpp"
#include "fcg/errors.hpp"
#include "fcg/nn.hpp"
#include "fcg/pipeline.hpp"

using namespace fcg;

namespace {

std::uint64_t tiny_rng(std::uint64_t& state) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 33;
}

double uniform_pm1(std::uint64_t& state) {
    return 2.0 * (double(tiny_rng(state)) / double(1u << 31)) - 1.0;
}

/// Test-side forward pass, written independently of the library loop:
/// per-layer dot products on copies of the parameters.
double oracle_forward(const Mlp& m, const std::vector<double>& x) {
    std::vector<double> v = x;
    for (const auto& layer : m.layers) {
        std::vector<double> next;
        for (int o = 0; o < layer.out_size; ++o) {
            double acc = 0.0;
            for (int i = 0; i < layer.in_size; ++i)
                acc += layer.weights[std::size_t(o) * layer.in_size + i] * v[i];
            acc += layer.biases[o];
            next.push_back(layer.activation == Activation::Tanh ? std::tanh(acc) : acc);
        }
        v = next;
    }
    return v[0];
}

double batch_mse(const Mlp& m, const std::vector<NormalizedSample>& batch) {
    double sum = 0.0;
    for (const auto& s : batch) {
        const double d = oracle_forward(m, s.input) - s.target;
        sum += d * d;
    }
    return sum / double(batch.size());
}

std::vector<NormalizedSample> random_batch(std::uint64_t& state, int width, int count) {
    std::vector<NormalizedSample> batch;
    for (int b = 0; b < count; ++b) {
        NormalizedSample s;
        for (int i = 0; i < width; ++i) s.input.push_back(uniform_pm1(state));
        s.target = uniform_pm1(state);
        batch.push_back(std::move(s));
    }
    return batch;
}

/// Central finite differences against the analytic gradient; every entry
/// must satisfy |a - n| <= max(1e-9, 1e-6 * max(|a|, |n|)).
void check_gradients(Mlp m, const std::vector<NormalizedSample>& batch) {
    const Gradients grads = backward(m, batch);
    const double h = 1e-6;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto check_param = [&](double& p, double analytic) {
            const double saved = p;
            p = saved + h;
            const double up = batch_mse(m, batch);
            p = saved - h;
            const double down = batch_mse(m, batch);
            p = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double tol = std::max(1e-9, 1e-6 * std::max(std::abs(analytic),
                                                              std::abs(numeric)));
            CHECK(std::abs(analytic - numeric) <= tol);
        };
        for (std::size_t i = 0; i < m.layers[l].weights.size(); ++i)
            check_param(m.layers[l].weights[i], grads.weights[l][i]);
        for (std::size_t i = 0; i < m.layers[l].biases.size(); ++i)
            check_param(m.layers[l].biases[i], grads.biases[l][i]);
    }
}

/// Splits plus fitted normalizer for a small synthetic training problem.
DataSplits synthetic_splits(std::uint64_t seed, int points = 40) {
    const Dataset d = generate_synthetic(default_conditions(), points, seed);
    SplitSpec spec;
    spec.seed = seed;
    return build_splits(d, spec);
}

} // namespace

TEST_CASE("init_mlp produces the 3-75-1 shapes") {
    MlpConfig cfg;
    cfg.init_seed = 7;
    const Mlp m = init_mlp(cfg);
    REQUIRE(m.layers.size() == 2);
    CHECK(m.layers[0].in_size == 3);
    CHECK(m.layers[0].out_size == 75);
    CHECK(m.layers[0].weights.size() == 75 * 3);
    CHECK(m.layers[0].biases.size() == 75);
    CHECK(m.layers[0].activation == Activation::Tanh);
    CHECK(m.layers[1].weights.size() == 75);
    CHECK(m.layers[1].biases.size() == 1);
    CHECK(m.layers[1].activation == Activation::Linear);
    CHECK(m.layer_sizes() == std::vector<int>{3, 75, 1});

    for (double b : m.layers[0].biases) CHECK(b == 0.0);
    const double limit = std::sqrt(6.0 / (3 + 75));
    for (double w : m.layers[0].weights) CHECK(std::abs(w) <= limit);
}

TEST_CASE("init_mlp is deterministic per seed") {
    MlpConfig cfg;
    cfg.init_seed = 7;
    const Mlp a = init_mlp(cfg);
    const Mlp b = init_mlp(cfg);
    CHECK(a.layers[0].weights == b.layers[0].weights);
    CHECK(a.layers[1].weights == b.layers[1].weights);

    cfg.init_seed = 8;
    const Mlp c = init_mlp(cfg);
    CHECK(a.layers[0].weights != c.layers[0].weights);
}

TEST_CASE("init_mlp rejects architectures without a hidden layer") {
    MlpConfig cfg;
    cfg.layer_sizes = {3};
    CHECK_THROWS_AS(init_mlp(cfg), InvalidArchitecture);
    cfg.layer_sizes = {3, 1};
    CHECK_THROWS_AS(init_mlp(cfg), InvalidArchitecture);
    cfg.layer_sizes = {3, 0, 1};
    CHECK_THROWS_AS(init_mlp(cfg), InvalidArchitecture);
}

TEST_CASE("forward of an all-zero net returns the output bias") {
    MlpConfig cfg;
    cfg.layer_sizes = {3, 4, 1};
    Mlp m = init_mlp(cfg);
    for (auto& layer : m.layers) std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    m.layers[1].biases[0] = 0.3;
    CHECK(forward(m, {0.5, -2.0, 7.0}) == 0.3);
    CHECK(forward(m, {0.0, 0.0, 0.0}) == 0.3);
}

TEST_CASE("1-1-1 identity-weight net is odd around zero") {
    Mlp m;
    m.layers.push_back({1, 1, {1.0}, {0.0}, Activation::Tanh});
    m.layers.push_back({1, 1, {1.0}, {0.0}, Activation::Linear});
    CHECK(forward_activations(m, {0.0}).back()[0] == 0.0);
    const double plus = forward_activations(m, {0.7}).back()[0];
    const double minus = forward_activations(m, {-0.7}).back()[0];
    CHECK(plus == doctest::Approx(std::tanh(0.7)));
    CHECK(plus == -minus);
}

TEST_CASE("forward matches an independently coded evaluator") {
    std::uint64_t state = 2024;
    for (auto sizes : {std::vector<int>{3, 5, 1}, {3, 7, 3, 1}, {3, 75, 1}}) {
        MlpConfig cfg;
        cfg.layer_sizes = sizes;
        cfg.init_seed = tiny_rng(state);
        const Mlp m = init_mlp(cfg);
        for (int trial = 0; trial < 100; ++trial) {
            const std::vector<double> x = {uniform_pm1(state), uniform_pm1(state),
                                           uniform_pm1(state)};
            const double lib = forward_activations(m, x).back()[0];
            const double oracle = oracle_forward(m, x);
            CHECK(std::abs(lib - oracle) <= 1e-12);
        }
    }
}

TEST_CASE("loss_mse") {
    CHECK(loss_mse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(loss_mse({1.0, 3.0}, {0.0, 0.0}) == 5.0);
    CHECK_THROWS_AS(loss_mse({1.0}, {1.0, 2.0}), LengthMismatch);
    CHECK_THROWS_AS(loss_mse({}, {}), EmptyBatch);

    // naive re-summation oracle
    std::uint64_t state = 5;
    std::vector<double> a, b;
    for (int i = 0; i < 500; ++i) {
        a.push_back(uniform_pm1(state) * 10.0);
        b.push_back(uniform_pm1(state) * 10.0);
    }
    double naive = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) naive += (a[i] - b[i]) * (a[i] - b[i]);
    naive /= double(a.size());
    CHECK(loss_mse(a, b) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("backward of an all-zero net only moves the output bias") {
    MlpConfig cfg;
    cfg.layer_sizes = {3, 5, 1};
    Mlp m = init_mlp(cfg);
    for (auto& layer : m.layers) std::fill(layer.weights.begin(), layer.weights.end(), 0.0);

    std::uint64_t state = 3;
    const auto batch = random_batch(state, 3, 4);
    const Gradients grads = backward(m, batch);
    for (double g : grads.weights[0]) CHECK(g == 0.0);
    for (double g : grads.biases[0]) CHECK(g == 0.0);
    for (double g : grads.weights[1]) CHECK(g == 0.0);
    CHECK(grads.biases[1][0] != 0.0);

    check_gradients(m, batch);
}

TEST_CASE("analytic gradients match central finite differences") {
    std::uint64_t state = 77;
    for (auto sizes : {std::vector<int>{3, 5, 1}, {3, 7, 3, 1}}) {
        for (int net = 0; net < 3; ++net) {
            MlpConfig cfg;
            cfg.layer_sizes = sizes;
            cfg.init_seed = tiny_rng(state);
            const Mlp m = init_mlp(cfg);
            const auto batch = random_batch(state, 3, 1 + int(tiny_rng(state) % 8));
            check_gradients(m, batch);
        }
    }
}

TEST_CASE("gradient of identical samples equals the single-sample gradient") {
    std::uint64_t state = 13;
    MlpConfig cfg;
    cfg.layer_sizes = {3, 5, 1};
    cfg.init_seed = 99;
    const Mlp m = init_mlp(cfg);

    auto batch = random_batch(state, 3, 1);
    const Gradients single = backward(m, batch);
    batch.resize(6, batch[0]);
    const Gradients repeated = backward(m, batch);
    for (std::size_t l = 0; l < single.weights.size(); ++l)
        for (std::size_t i = 0; i < single.weights[l].size(); ++i)
            CHECK(repeated.weights[l][i] == doctest::Approx(single.weights[l][i]).epsilon(1e-12));
}

TEST_CASE("backward validates its batch") {
    MlpConfig cfg;
    const Mlp m = init_mlp(cfg);
    CHECK_THROWS_AS(backward(m, {}), EmptyBatch);
}

TEST_CASE("train improves validation loss on learnable data") {
    DataSplits splits = synthetic_splits(42);
    MlpConfig mc;
    mc.init_seed = 42;
    Mlp m = init_mlp(mc);
    m.normalizer = fit_normalizer(splits.train);

    TrainConfig tc;
    tc.max_epochs = 150;
    tc.early_stop_patience = 150;
    tc.seed = 42;
    const TrainReport report = train(m, splits, tc);

    REQUIRE(report.epochs_run >= 1);
    CHECK(report.validation_loss_history.size() == std::size_t(report.epochs_run));
    CHECK(report.train_loss_history.size() == std::size_t(report.epochs_run));
    const double best = report.validation_loss_history[report.best_epoch - 1];
    CHECK(best < report.validation_loss_history.front());
    CHECK(best == *std::min_element(report.validation_loss_history.begin(),
                                    report.validation_loss_history.end()));
}

TEST_CASE("patience zero stops after the first epoch without improvement") {
    // a net that is already exact: zero weights, output bias at the target
    Mlp m;
    m.layers.push_back({3, 2, {0, 0, 0, 0, 0, 0}, {0.0, 0.0}, Activation::Tanh});
    m.layers.push_back({2, 1, {0.0, 0.0}, {0.0}, Activation::Linear});
    Normalizer nz;
    nz.minimum = {0.0, 0.0, 0.0, -1.0};
    nz.maximum = {1.0, 1.0, 1.0, 1.0};
    m.normalizer = nz;

    const Sample s{{0.5, 0.5, 0.5}, 0.0, "s", {0.1, {}}}; // normalized target 0
    DataSplits splits;
    splits.train = {s};
    splits.validation = {s};

    TrainConfig tc;
    tc.early_stop_patience = 0;
    tc.max_epochs = 100;
    const TrainReport report = train(m, splits, tc);
    CHECK(report.epochs_run == 2);
    CHECK(report.best_epoch == 1);
}

TEST_CASE("train is bit-deterministic given seeds") {
    DataSplits splits = synthetic_splits(8);
    TrainConfig tc;
    tc.max_epochs = 40;
    tc.seed = 5;

    auto run = [&]() {
        MlpConfig mc;
        mc.init_seed = 6;
        Mlp m = init_mlp(mc);
        m.normalizer = fit_normalizer(splits.train);
        train(m, splits, tc);
        return m;
    };
    const Mlp a = run();
    const Mlp b = run();
    REQUIRE(a.layers.size() == b.layers.size());
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].weights == b.layers[l].weights);
        CHECK(a.layers[l].biases == b.layers[l].biases);
    }
}

TEST_CASE("train reports divergence as NonFiniteLoss") {
    DataSplits splits = synthetic_splits(3, 20);
    MlpConfig mc;
    Mlp m = init_mlp(mc);
    m.normalizer = fit_normalizer(splits.train);

    TrainConfig tc;
    tc.optimizer = TrainConfig::Optimizer::Sgd;
    tc.learning_rate = 1e18;
    tc.max_epochs = 50;
    CHECK_THROWS_AS(train(m, splits, tc), NonFiniteLoss);
}

TEST_CASE("train validates splits and config") {
    DataSplits splits = synthetic_splits(3, 20);
    MlpConfig mc;
    Mlp m = init_mlp(mc);
    m.normalizer = fit_normalizer(splits.train);

    DataSplits no_val = splits;
    no_val.validation.clear();
    CHECK_THROWS_AS(train(m, no_val, TrainConfig{}), EmptySplit);

    DataSplits no_train = splits;
    no_train.train.clear();
    CHECK_THROWS_AS(train(m, no_train, TrainConfig{}), EmptySplit);

    TrainConfig bad;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train(m, splits, bad), InvalidTrainConfig);

    Mlp bare = init_mlp(mc);
    CHECK_THROWS_AS(train(bare, splits, TrainConfig{}), MissingNormalizer);
}

TEST_CASE("predict requires a normalizer and is pure") {
    MlpConfig mc;
    mc.init_seed = 21;
    Mlp m = init_mlp(mc);
    CHECK_THROWS_AS(predict(m, {1000.0, 0.1, 1.0}), MissingNormalizer);

    Normalizer nz;
    nz.minimum = {0.0, 0.1, 1.0, 5.0};
    nz.maximum = {100000.0, 0.7, 2.0, 13.0};
    m.normalizer = nz;

    const double a = predict(m, {50000.0, 0.1, 1.0});
    const double b = predict(m, {50000.0, 0.1, 1.0});
    CHECK(a == b);
    CHECK(predict(m, 50000.0, LoadCondition{0.1, std::nullopt}) == a);

    // far beyond the fitted range stays finite (the output layer is linear)
    CHECK(std::isfinite(predict(m, {1e9, 0.9, 5.0})));
}

TEST_CASE("a trained model predicts training points within 5 percent") {
    DataSplits splits = synthetic_splits(42);
    MlpConfig mc;
    mc.init_seed = 42;
    Mlp m = init_mlp(mc);
    m.normalizer = fit_normalizer(splits.train);

    TrainConfig tc;
    tc.max_epochs = 400;
    tc.early_stop_patience = 400;
    tc.seed = 42;
    train(m, splits, tc);

    for (std::size_t i = 0; i < splits.train.size(); i += 37) {
        const Sample& s = splits.train[i];
        const double pred = predict(m, s.features);
        CHECK(std::abs(pred - s.target) / s.target < 0.05);
    }
}

TEST_CASE("scaling the output layer scales predictions linearly") {
    MlpConfig mc;
    mc.init_seed = 31;
    Mlp m = init_mlp(mc);
    Mlp scaled = m;
    const double c = 3.7;
    for (double& w : scaled.layers.back().weights) w *= c;
    for (double& b : scaled.layers.back().biases) b *= c;

    std::uint64_t state = 17;
    for (int i = 0; i < 50; ++i) {
        const std::array<double, 3> x = {uniform_pm1(state), uniform_pm1(state),
                                         uniform_pm1(state)};
        const double base = forward(m, x);
        const double lifted = forward(scaled, x);
        CHECK(lifted == doctest::Approx(c * base).epsilon(1e-12));
    }
}

TEST_CASE("save and load round-trip forward outputs bit-exactly") {
    DataSplits splits = synthetic_splits(19, 20);
    MlpConfig mc;
    mc.init_seed = 19;
    Mlp m = init_mlp(mc);
    m.normalizer = fit_normalizer(splits.train);
    TrainConfig tc;
    tc.max_epochs = 5;
    train(m, splits, tc);

    std::ostringstream out;
    save_model(m, out);
    std::istringstream in(out.str());
    const Mlp back = load_model(in);

    std::uint64_t state = 23;
    for (int i = 0; i < 100; ++i) {
        const std::array<double, 3> x = {1e5 * uniform_pm1(state), uniform_pm1(state),
                                         2.0 * uniform_pm1(state)};
        CHECK(predict(m, x) == predict(back, x));
    }

    // a fresh save of the loaded model is byte-identical
    std::ostringstream again;
    save_model(back, again);
    CHECK(again.str() == out.str());
}

TEST_CASE("load_model rejects damaged files") {
    MlpConfig mc;
    Mlp m = init_mlp(mc);
    std::ostringstream out;
    save_model(m, out);
    const std::string text = out.str();

    SUBCASE("truncation") {
        std::istringstream in(text.substr(0, text.size() / 2));
        CHECK_THROWS_AS(load_model(in), CorruptModelFile);
    }
    SUBCASE("bad token") {
        std::string mangled = text;
        mangled.replace(mangled.find("weights"), 7, "wroofle");
        std::istringstream in(mangled);
        CHECK_THROWS_AS(load_model(in), CorruptModelFile);
    }
    SUBCASE("future version") {
        std::istringstream in("format_version 999\nlayers 1\n");
        CHECK_THROWS_AS(load_model(in), VersionMismatch);
    }
    SUBCASE("empty stream") {
        std::istringstream in("");
        CHECK_THROWS_AS(load_model(in), CorruptModelFile);
    }
}
