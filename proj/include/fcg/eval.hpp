#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fcg/nn.hpp"
#include "fcg/pipeline.hpp"

namespace fcg {

/// Mean absolute percentage error, in percent:
/// 100 * (1/n) * sum |true_i - pred_i| / |true_i|.
/// Truth values below 1e-9 mm raise NearZeroTruth naming the index.
double mape(const std::vector<double>& truth, const std::vector<double>& predicted);

/// One predicted-vs-true point, tagged with the subset it came from.
struct ScatterPoint {
    enum class Subset { DevTest, Extrapolation } subset = Subset::DevTest;
    std::string series_id;
    LoadCondition condition;
    double cycles = 0.0;
    double a_true = 0.0;
    double a_pred = 0.0;
};

struct ConditionCell {
    double mape_percent = 0.0;
    std::size_t sample_count = 0;
};

struct EvalReport {
    double overall_dev_test_mape = 0.0; // percent, over the dev-test subset
    std::size_t dev_test_count = 0;
    /// Extrapolation MAPE per loading condition; keys cover exactly the
    /// conditions present in the extrapolation subset.
    std::map<LoadCondition, ConditionCell> per_condition;
    /// Deterministically ordered: subset, condition, cycles, series id.
    std::vector<ScatterPoint> scatter;
};

/// Scores the dev-test subset overall and the extrapolation subset per
/// condition, collecting scatter points for both.
EvalReport evaluate(const Mlp& m, const DataSplits& splits);

/// Same scoring driven by an arbitrary predictor, for baselines and tests.
EvalReport evaluate_predictions(const DataSplits& splits,
                                const std::function<double(const Sample&)>& predictor);

/// Plot-ready CSV: `subset,series_id,R,R_ol,N,a_true,a_pred`, byte-identical
/// across re-exports of the same report.
void export_scatter(const EvalReport& report, std::ostream& sink);

/// One plain-text table per stress ratio, rows CA/1.5/2.0, MAPE to two
/// decimals; conditions without extrapolation samples render as an em dash
/// with a footnote.
std::string render_tables(const EvalReport& report);

} // namespace fcg
