#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fcg {

/// Loading condition of one crack-growth test: stress ratio R plus either
/// constant-amplitude loading or a single tensile overload of the given ratio.
struct LoadCondition {
    double stress_ratio = 0.0;
    /// Empty for constant amplitude; otherwise the overload ratio (> 1).
    std::optional<double> overload;

    bool constant_amplitude() const { return !overload.has_value(); }

    /// Throws InvalidCondition unless 0 <= R < 1 and any overload ratio > 1.
    void validate() const;

    auto operator<=>(const LoadCondition&) const = default;
};

/// Feature encoding of a condition: (R, R_ol). Constant amplitude maps to
/// R_ol = 1, an overload equal to the nominal peak being no overload at all.
std::pair<double, double> condition_features(const LoadCondition& c);

/// One observation: crack length after a given number of load cycles.
struct CrackGrowthRecord {
    double cycles = 0.0;
    LoadCondition condition;
    double crack_length = 0.0; // millimetres

    auto operator<=>(const CrackGrowthRecord&) const = default;
};

/// An ordered crack-growth curve measured under a single loading condition.
/// Cycles are strictly increasing and crack length never shrinks.
struct CrackGrowthSeries {
    std::string id;
    LoadCondition condition;
    std::vector<CrackGrowthRecord> records;

    bool operator==(const CrackGrowthSeries&) const = default;
};

struct Dataset {
    std::vector<CrackGrowthSeries> series;

    bool operator==(const Dataset&) const = default;
};

/// Reads the CSV schema `series_id,R,R_ol,N,a_mm`. Rows of a series must be
/// contiguous and ordered by cycles; R_ol holds a ratio > 1 or the literal
/// `CA`. Every series is validated; errors carry the offending line number.
Dataset parse_csv(std::istream& source);

/// Inverse of parse_csv: emits the same schema with round-trip-exact numbers,
/// so parse_csv(serialize_csv(d)) == d for any valid dataset.
void serialize_csv(const Dataset& dataset, std::ostream& sink);

// Synthetic-curve constants, frozen so generated fixtures stay reproducible.
// Growth follows da/dN = C * (dsigma * (1 - R) * sqrt(pi * a))^m from
// a0 = 5 mm up to FINAL_CRACK_MM. The stress range is raised for high R
// (dsigma = DSIGMA_REF / (1-R)^DSIGMA_EXPONENT) the way test labs shorten
// otherwise impractically long high-R experiments; cycle spans then differ
// by under 20% across conditions. A single overload fires at the midpoint
// cycle and multiplies the growth rate by 1/ratio^2 for the following
// RETARDATION_WINDOW fraction of the series span.
namespace synthetic {
inline constexpr double INITIAL_CRACK_MM = 5.0;
inline constexpr double FINAL_CRACK_MM = 13.0;
inline constexpr double PARIS_C = 1e-8;
inline constexpr double PARIS_M = 3.0;
inline constexpr double DSIGMA_REF = 4.5;
inline constexpr double DSIGMA_EXPONENT = 0.95;
inline constexpr double RETARDATION_WINDOW = 0.15;
inline constexpr double NOISE_SCALE = 0.05;
} // namespace synthetic

/// Integrates one noisy Paris-law curve per condition on a uniform cycle
/// grid. Pure function of (conditions, points_per_series, seed); every
/// generated series satisfies the CrackGrowthSeries invariants.
Dataset generate_synthetic(const std::vector<LoadCondition>& conditions,
                           int points_per_series, std::uint64_t seed);

/// The twelve conditions of the reference experiment:
/// R in {0.1, 0.3, 0.5, 0.7} x {CA, overload 1.5, overload 2.0}.
std::vector<LoadCondition> default_conditions();

} // namespace fcg
