// Command-line front end: generate synthetic data, train, evaluate, predict.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation
// error. Every command is deterministic given flags, config, input bytes,
// and seeds.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fcg/dataset.hpp"
#include "fcg/errors.hpp"
#include "fcg/eval.hpp"
#include "fcg/nn.hpp"
#include "fcg/number_io.hpp"
#include "fcg/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

class UsageError : public fcg::Error {
public:
    using Error::Error;
};

// FNV-1a over the raw file bytes; records what the model was trained on so
// evaluation can detect a drifted dataset.
std::string hash_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fcg::Error("cannot open '" + path.string() + "' for hashing");
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buffer[8192];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

fcg::Dataset load_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw fcg::Error("cannot open data file '" + path.string() + "'");
    return fcg::parse_csv(in);
}

std::vector<int> parse_arch(const std::string& text) {
    std::vector<int> sizes;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, '-')) {
        long long v = 0;
        if (!fcg::parse_long(part, v) || v < 1)
            throw UsageError("bad --arch '" + text + "': expected sizes like 3-75-1");
        sizes.push_back(static_cast<int>(v));
    }
    if (sizes.size() < 3)
        throw UsageError("bad --arch '" + text + "': need at least one hidden layer");
    return sizes;
}

fcg::LoadCondition parse_condition(double stress_ratio, const std::string& overload_text) {
    fcg::LoadCondition condition{stress_ratio, std::nullopt};
    if (overload_text != "CA") {
        double ratio = 0.0;
        if (!fcg::parse_double(overload_text, ratio))
            throw UsageError("--Rol must be a number or 'CA', got '" + overload_text + "'");
        if (ratio != 1.0) condition.overload = ratio; // ratio 1 is no overload
    }
    condition.validate();
    return condition;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fcg::Error("cannot open '" + path.string() + "' for writing");
    out << contents;
    if (!out) throw fcg::Error("failed writing '" + path.string() + "'");
}

void write_splits_csv(const fcg::DataSplits& splits, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fcg::Error("cannot open '" + path.string() + "' for writing");
    out << "subset,series_id,R,R_ol,N,a_mm\n";
    auto dump = [&out](const char* subset, const std::vector<fcg::Sample>& samples) {
        for (const auto& s : samples) {
            out << subset << ',' << s.series_id << ','
                << fcg::format_double(s.condition.stress_ratio) << ',';
            if (s.condition.constant_amplitude())
                out << "CA";
            else
                out << fcg::format_double(*s.condition.overload);
            out << ',' << fcg::format_double(s.cycles()) << ',' << fcg::format_double(s.target)
                << '\n';
        }
    };
    dump("train", splits.train);
    dump("validation", splits.validation);
    dump("dev_test", splits.dev_test);
    dump("extrapolation", splits.extrapolation);
    if (!out) throw fcg::Error("failed writing '" + path.string() + "'");
}

// --- train manifest ---------------------------------------------------------

struct TrainOptions {
    std::string data_path;
    std::string out_dir;
    fcg::SplitSpec split;
    std::vector<int> arch = {3, 75, 1};
    fcg::TrainConfig training;
    std::uint64_t init_seed = 42;
};

std::string manifest_text(const TrainOptions& opt, const std::string& data_hash,
                          const fcg::DataSplits& splits, const fcg::TrainReport& report) {
    std::ostringstream out;
    out << "data_path " << opt.data_path << '\n';
    out << "data_hash_fnv1a64 " << data_hash << '\n';
    out << "dev_fraction " << fcg::format_double(opt.split.dev_fraction) << '\n';
    out << "train_fraction " << fcg::format_double(opt.split.train_fraction) << '\n';
    out << "val_fraction " << fcg::format_double(opt.split.val_fraction) << '\n';
    out << "test_fraction " << fcg::format_double(opt.split.test_fraction) << '\n';
    out << "split_seed " << opt.split.seed << '\n';
    out << "arch";
    for (int s : opt.arch) out << ' ' << s;
    out << '\n';
    out << "init_seed " << opt.init_seed << '\n';
    out << "train_seed " << opt.training.seed << '\n';
    out << "optimizer "
        << (opt.training.optimizer == fcg::TrainConfig::Optimizer::Adam ? "adam" : "sgd") << '\n';
    out << "learning_rate " << fcg::format_double(opt.training.learning_rate) << '\n';
    out << "batch_size " << opt.training.batch_size << '\n';
    out << "max_epochs " << opt.training.max_epochs << '\n';
    out << "early_stop_patience " << opt.training.early_stop_patience << '\n';
    out << "train_samples " << splits.train.size() << '\n';
    out << "validation_samples " << splits.validation.size() << '\n';
    out << "dev_test_samples " << splits.dev_test.size() << '\n';
    out << "extrapolation_samples " << splits.extrapolation.size() << '\n';
    out << "epochs_run " << report.epochs_run << '\n';
    out << "best_epoch " << report.best_epoch << '\n';
    out << "best_validation_mse "
        << fcg::format_double(report.validation_loss_history[report.best_epoch - 1]) << '\n';
    out << "wall_time_seconds " << fcg::format_double(report.wall_time_seconds) << '\n';
    out << "train_loss_history";
    for (double v : report.train_loss_history) out << ' ' << fcg::format_double(v);
    out << '\n';
    out << "validation_loss_history";
    for (double v : report.validation_loss_history) out << ' ' << fcg::format_double(v);
    out << '\n';
    return out.str();
}

std::map<std::string, std::string> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw fcg::Error("cannot open train report '" + path.string() + "'");
    std::map<std::string, std::string> fields;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto space = line.find(' ');
        if (space == std::string::npos)
            fields[line] = "";
        else
            fields[line.substr(0, space)] = line.substr(space + 1);
    }
    return fields;
}

double manifest_double(const std::map<std::string, std::string>& fields, const std::string& key) {
    const auto it = fields.find(key);
    double value = 0.0;
    if (it == fields.end() || !fcg::parse_double(it->second, value))
        throw fcg::Error("train report is missing field '" + key + "'");
    return value;
}

// --- commands ----------------------------------------------------------------

int cmd_gen_synthetic(const std::string& out_path, std::uint64_t seed, int points) {
    const fcg::Dataset dataset = fcg::generate_synthetic(fcg::default_conditions(), points, seed);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw fcg::Error("cannot open '" + out_path + "' for writing");
    fcg::serialize_csv(dataset, out);
    out.close();
    if (!out) throw fcg::Error("failed writing '" + out_path + "'");

    std::size_t records = 0;
    for (const auto& s : dataset.series) records += s.records.size();
    std::cout << "wrote " << dataset.series.size() << " series, " << records << " records to "
              << out_path << '\n';
    std::cout << "growth law da/dN = C*(dsigma*(1-R)*sqrt(pi*a))^m with C = "
              << fcg::format_double(fcg::synthetic::PARIS_C)
              << ", m = " << fcg::format_double(fcg::synthetic::PARIS_M)
              << ", dsigma = " << fcg::format_double(fcg::synthetic::DSIGMA_REF) << "/(1-R)^"
              << fcg::format_double(fcg::synthetic::DSIGMA_EXPONENT)
              << ", a0 = " << fcg::format_double(fcg::synthetic::INITIAL_CRACK_MM) << " mm\n";
    return 0;
}

int cmd_train(const TrainOptions& opt) {
    opt.split.validate();
    opt.training.validate();
    fcg::MlpConfig mlp_config;
    mlp_config.layer_sizes = opt.arch;
    mlp_config.init_seed = opt.init_seed;
    if (opt.arch.front() != 3 || opt.arch.back() != 1)
        throw UsageError("--arch must map 3 features to 1 output, got first " +
                         std::to_string(opt.arch.front()) + " and last " +
                         std::to_string(opt.arch.back()));

    const std::string data_hash = hash_file(opt.data_path);
    const fcg::Dataset dataset = load_dataset(opt.data_path);
    const fcg::DataSplits splits = fcg::build_splits(dataset, opt.split);

    fcg::Mlp model = fcg::init_mlp(mlp_config);
    model.normalizer = fcg::fit_normalizer(splits.train);
    const fcg::TrainReport report = fcg::train(model, splits, opt.training);

    fs::create_directories(opt.out_dir);
    {
        std::ofstream out(fs::path(opt.out_dir) / "model.txt", std::ios::binary);
        if (!out) throw fcg::Error("cannot open model file for writing");
        fcg::save_model(model, out);
    }
    write_file(fs::path(opt.out_dir) / "train_report.txt",
               manifest_text(opt, data_hash, splits, report));
    write_splits_csv(splits, fs::path(opt.out_dir) / "splits.csv");

    std::cout << "trained " << report.epochs_run << " epochs (best epoch " << report.best_epoch
              << ")\n";
    std::cout << "best validation MSE = "
              << fcg::format_double(report.validation_loss_history[report.best_epoch - 1])
              << '\n';
    return 0;
}

int cmd_eval(const std::string& dir, const std::string& data_path) {
    const fs::path out_dir(dir);
    const auto manifest = read_manifest(out_dir / "train_report.txt");

    const auto hash_it = manifest.find("data_hash_fnv1a64");
    if (hash_it == manifest.end())
        throw fcg::Error("train report is missing field 'data_hash_fnv1a64'");
    const std::string current_hash = hash_file(data_path);
    if (current_hash != hash_it->second)
        throw fcg::ManifestMismatch("data file hash " + current_hash +
                                    " differs from the one recorded at training time (" +
                                    hash_it->second + ")");

    fcg::SplitSpec spec;
    spec.dev_fraction = manifest_double(manifest, "dev_fraction");
    spec.train_fraction = manifest_double(manifest, "train_fraction");
    spec.val_fraction = manifest_double(manifest, "val_fraction");
    spec.test_fraction = manifest_double(manifest, "test_fraction");
    spec.seed = static_cast<std::uint64_t>(manifest_double(manifest, "split_seed"));

    fcg::Mlp model;
    {
        std::ifstream in(out_dir / "model.txt");
        if (!in) throw fcg::Error("cannot open model file in '" + dir + "'");
        model = fcg::load_model(in);
    }

    const fcg::Dataset dataset = load_dataset(data_path);
    const fcg::DataSplits splits = fcg::build_splits(dataset, spec);
    const fcg::EvalReport report = fcg::evaluate(model, splits);

    write_file(out_dir / "tables.txt", fcg::render_tables(report));
    {
        std::ofstream out(out_dir / "scatter.csv", std::ios::binary);
        if (!out) throw fcg::Error("cannot open scatter CSV for writing");
        fcg::export_scatter(report, out);
    }

    char line[64];
    std::snprintf(line, sizeof(line), "MAPE(dev-test) = %.2f%%", report.overall_dev_test_mape);
    std::cout << line << '\n';
    return 0;
}

int cmd_predict(const std::string& model_path, double cycles, double stress_ratio,
                const std::string& overload_text) {
    if (cycles < 0.0) throw UsageError("--N must be >= 0");
    const fcg::LoadCondition condition = parse_condition(stress_ratio, overload_text);

    std::ifstream in(model_path);
    if (!in) throw fcg::Error("cannot open model file '" + model_path + "'");
    const fcg::Mlp model = fcg::load_model(in);

    std::cout << fcg::format_double(fcg::predict(model, cycles, condition)) << '\n';
    return 0;
}

bool is_usage_error(const fcg::Error& e) {
    return dynamic_cast<const UsageError*>(&e) || dynamic_cast<const fcg::InvalidSplitSpec*>(&e) ||
           dynamic_cast<const fcg::InvalidCondition*>(&e) ||
           dynamic_cast<const fcg::InvalidArchitecture*>(&e) ||
           dynamic_cast<const fcg::InvalidTrainConfig*>(&e) ||
           dynamic_cast<const fcg::InvalidPointCount*>(&e);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fatigue crack growth modelling: MLP regression of crack length "
                 "from load cycles, stress ratio, and overload ratio"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI-style config file");

    // gen-synthetic
    std::string gen_out;
    std::uint64_t gen_seed = 42;
    int gen_points = 150;
    auto* gen = app.add_subcommand("gen-synthetic",
                                   "Write a synthetic twelve-condition dataset CSV");
    gen->add_option("--out", gen_out, "Output CSV path")->required();
    gen->add_option("--seed", gen_seed, "Noise seed");
    gen->add_option("--points", gen_points, "Points per series");

    // train
    TrainOptions train_opt;
    std::string arch_text = "3-75-1";
    std::string optimizer_name = "adam";
    std::uint64_t master_seed = 42;
    bool split_seed_set = false, init_seed_set = false, train_seed_set = false;
    auto* tr = app.add_subcommand("train", "Train a model and write it with its manifest");
    tr->add_option("--data", train_opt.data_path, "Input dataset CSV")->required();
    tr->add_option("--out-dir", train_opt.out_dir, "Directory for model and reports")->required();
    tr->add_option("--seed", master_seed, "Master seed for split, init, and training");
    tr->add_option("--dev-fraction", train_opt.split.dev_fraction,
                   "Development cut as a fraction of each series' final cycle value");
    tr->add_option("--train-fraction", train_opt.split.train_fraction, "Training share");
    tr->add_option("--val-fraction", train_opt.split.val_fraction, "Validation share");
    tr->add_option("--test-fraction", train_opt.split.test_fraction, "Dev-test share");
    tr->add_option("--split-seed", train_opt.split.seed, "Partition shuffle seed")
        ->each([&](const std::string&) { split_seed_set = true; });
    tr->add_option("--arch", arch_text, "Layer sizes, e.g. 3-75-1");
    tr->add_option("--init-seed", train_opt.init_seed, "Weight initialization seed")
        ->each([&](const std::string&) { init_seed_set = true; });
    tr->add_option("--train-seed", train_opt.training.seed, "Batch shuffle seed")
        ->each([&](const std::string&) { train_seed_set = true; });
    tr->add_option("--epochs", train_opt.training.max_epochs, "Maximum epochs");
    tr->add_option("--lr", train_opt.training.learning_rate, "Learning rate");
    tr->add_option("--optimizer", optimizer_name, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    tr->add_option("--batch-size", train_opt.training.batch_size, "Mini-batch size");
    tr->add_option("--patience", train_opt.training.early_stop_patience,
                   "Early-stopping patience in epochs");

    // eval
    std::string eval_dir, eval_data;
    auto* ev = app.add_subcommand("eval", "Evaluate a trained model against its dataset");
    ev->add_option("--dir", eval_dir, "Training output directory")->required();
    ev->add_option("--data", eval_data, "Dataset CSV used for training")->required();

    // predict
    std::string predict_model, predict_rol;
    double predict_cycles = 0.0, predict_r = 0.0;
    auto* pr = app.add_subcommand("predict", "Predict crack length for one input");
    pr->add_option("--model", predict_model, "Path to model.txt")->required();
    pr->add_option("--N", predict_cycles, "Load cycles")->required();
    pr->add_option("--R", predict_r, "Stress ratio")->required();
    pr->add_option("--Rol", predict_rol, "Overload ratio or CA")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_synthetic(gen_out, gen_seed, gen_points);
        if (tr->parsed()) {
            if (!split_seed_set) train_opt.split.seed = master_seed;
            if (!init_seed_set) train_opt.init_seed = master_seed;
            if (!train_seed_set) train_opt.training.seed = master_seed;
            train_opt.arch = parse_arch(arch_text);
            train_opt.training.optimizer = optimizer_name == "sgd"
                                               ? fcg::TrainConfig::Optimizer::Sgd
                                               : fcg::TrainConfig::Optimizer::Adam;
            return cmd_train(train_opt);
        }
        if (ev->parsed()) return cmd_eval(eval_dir, eval_data);
        if (pr->parsed()) return cmd_predict(predict_model, predict_cycles, predict_r, predict_rol);
    } catch (const fcg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_usage_error(e) ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
