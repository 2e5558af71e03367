#include "fcg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <tuple>

#include "fcg/errors.hpp"
#include "fcg/number_io.hpp"

namespace fcg {

namespace {

constexpr double NEAR_ZERO_TRUTH_MM = 1e-9;

std::string overload_label(const LoadCondition& c) {
    return c.constant_amplitude() ? "CA" : format_double(*c.overload);
}

/// Table row label: integral ratios keep one decimal (2 prints as 2.0).
std::string overload_table_label(const LoadCondition& c) {
    if (c.constant_amplitude()) return "CA";
    const std::string text = format_double(*c.overload);
    return text.find('.') == std::string::npos ? text + ".0" : text;
}

std::string two_decimals(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

auto scatter_key(const ScatterPoint& p) {
    return std::make_tuple(p.subset, p.condition, p.cycles, p.series_id);
}

} // namespace

double mape(const std::vector<double>& truth, const std::vector<double>& predicted) {
    if (truth.size() != predicted.size())
        throw LengthMismatch("truth (" + std::to_string(truth.size()) + ") and predictions (" +
                             std::to_string(predicted.size()) + ") differ in length");
    if (truth.empty()) throw EmptyInput("cannot compute MAPE of an empty set");

    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (std::abs(truth[i]) <= NEAR_ZERO_TRUTH_MM)
            throw NearZeroTruth("truth value at index " + std::to_string(i) +
                                " is too close to zero for a relative error");
        sum += std::abs(truth[i] - predicted[i]) / std::abs(truth[i]);
    }
    return 100.0 * sum / static_cast<double>(truth.size());
}

EvalReport evaluate_predictions(const DataSplits& splits,
                                const std::function<double(const Sample&)>& predictor) {
    EvalReport report;

    std::vector<double> truth, pred;
    truth.reserve(splits.dev_test.size());
    pred.reserve(splits.dev_test.size());
    for (const auto& s : splits.dev_test) {
        const double p = predictor(s);
        truth.push_back(s.target);
        pred.push_back(p);
        report.scatter.push_back(
            {ScatterPoint::Subset::DevTest, s.series_id, s.condition, s.cycles(), s.target, p});
    }
    report.dev_test_count = splits.dev_test.size();
    if (!truth.empty()) report.overall_dev_test_mape = mape(truth, pred);

    std::map<LoadCondition, std::pair<std::vector<double>, std::vector<double>>> cells;
    for (const auto& s : splits.extrapolation) {
        const double p = predictor(s);
        auto& [cell_truth, cell_pred] = cells[s.condition];
        cell_truth.push_back(s.target);
        cell_pred.push_back(p);
        report.scatter.push_back({ScatterPoint::Subset::Extrapolation, s.series_id, s.condition,
                                  s.cycles(), s.target, p});
    }
    for (const auto& [condition, values] : cells)
        report.per_condition[condition] = {mape(values.first, values.second),
                                           values.first.size()};

    std::sort(report.scatter.begin(), report.scatter.end(),
              [](const ScatterPoint& a, const ScatterPoint& b) {
                  return scatter_key(a) < scatter_key(b);
              });
    return report;
}

EvalReport evaluate(const Mlp& m, const DataSplits& splits) {
    if (!m.normalizer) throw MissingNormalizer("model has no fitted normalizer");
    return evaluate_predictions(splits,
                                [&m](const Sample& s) { return predict(m, s.features); });
}

void export_scatter(const EvalReport& report, std::ostream& sink) {
    sink << "subset,series_id,R,R_ol,N,a_true,a_pred\n";
    for (const auto& p : report.scatter) {
        sink << (p.subset == ScatterPoint::Subset::DevTest ? "dev_test" : "extrapolation") << ','
             << p.series_id << ',' << format_double(p.condition.stress_ratio) << ','
             << overload_label(p.condition) << ',' << format_double(p.cycles) << ','
             << format_double(p.a_true) << ',' << format_double(p.a_pred) << '\n';
    }
    if (!sink) throw SinkFailure("failed writing scatter CSV");
}

std::string render_tables(const EvalReport& report) {
    // Stress ratios present anywhere in the report, each rendered with the
    // fixed CA / 1.5 / 2.0 rows plus any further overload ratios seen.
    std::set<double> stress_ratios;
    for (const auto& [condition, cell] : report.per_condition)
        stress_ratios.insert(condition.stress_ratio);
    for (const auto& p : report.scatter) stress_ratios.insert(p.condition.stress_ratio);

    std::string out;
    bool any_missing = false;
    for (double r : stress_ratios) {
        std::set<LoadCondition> rows = {{r, std::nullopt}, {r, 1.5}, {r, 2.0}};
        for (const auto& [condition, cell] : report.per_condition)
            if (condition.stress_ratio == r) rows.insert(condition);

        out += "MAPE prediction error for R = " + format_double(r) + "\n";
        out += "Overload ratio R_ol    MAPE (%)\n";
        for (const auto& condition : rows) {
            std::string label = overload_table_label(condition);
            label.resize(23, ' ');
            const auto it = report.per_condition.find(condition);
            if (it == report.per_condition.end()) {
                out += label + "\xE2\x80\x94\n"; // em dash
                any_missing = true;
            } else {
                out += label + two_decimals(it->second.mape_percent) + "\n";
            }
        }
        out += "\n";
    }
    if (any_missing)
        out += "\xE2\x80\x94 no extrapolation samples for this condition\n";
    return out;
}

} // namespace fcg
