#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fcg/dataset.hpp"

namespace fcg {

/// One regression sample: features (N, R, R_ol), target crack length in mm,
/// plus back-references to the source series and condition.
struct Sample {
    std::array<double, 3> features{}; // {cycles, stress ratio, overload ratio}
    double target = 0.0;
    std::string series_id;
    LoadCondition condition;

    double cycles() const { return features[0]; }

    bool operator==(const Sample&) const = default;
};

Sample make_sample(const CrackGrowthSeries& series, const CrackGrowthRecord& record);

/// Two-stage split protocol: a per-series chronological cut at dev_fraction
/// of the final cycle value, then a seeded random partition of the
/// development pool into train/validation/dev-test.
struct SplitSpec {
    double dev_fraction = 0.8;
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;

    /// Throws InvalidSplitSpec unless fractions sum to 1 (within 1e-12)
    /// and 0 < dev_fraction < 1.
    void validate() const;
};

struct DataSplits {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> dev_test;
    std::vector<Sample> extrapolation;
};

/// Cuts every series at dev_fraction * (its final cycle value). Records at or
/// below the cutoff form the development pool, the rest the extrapolation
/// hold-out. A series whose development side would be empty is an error; an
/// empty extrapolation side is fine.
std::pair<std::vector<Sample>, std::vector<Sample>>
chronological_split(const Dataset& dataset, double dev_fraction);

/// Seeded Fisher-Yates partition of the development pool. Validation and
/// dev-test take floor(fraction * n) samples each; train absorbs the rest.
DataSplits random_partition(const std::vector<Sample>& development, const SplitSpec& spec);

/// chronological_split + random_partition in one call, extrapolation included.
DataSplits build_splits(const Dataset& dataset, const SplitSpec& spec);

/// Per-dimension min/max of the three features and the target, fitted on the
/// training subset only.
struct Normalizer {
    std::array<double, 4> minimum{};
    std::array<double, 4> maximum{};

    bool operator==(const Normalizer&) const = default;
};

/// Throws DegenerateDimension (naming the dimension) if any min equals max.
Normalizer fit_normalizer(const std::vector<Sample>& train);

/// Affine map of each feature to [-1, 1] over the fitted range. Values beyond
/// the range map beyond [-1, 1]; extrapolation inputs will.
std::array<double, 3> normalize_features(const std::array<double, 3>& raw, const Normalizer& nz);
double normalize_target(double raw, const Normalizer& nz);
double denormalize_target(double normalized, const Normalizer& nz);

} // namespace fcg
