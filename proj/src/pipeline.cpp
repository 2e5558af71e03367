#include "fcg/pipeline.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>

#include "fcg/errors.hpp"
#include "fcg/number_io.hpp"

namespace fcg {

namespace {

const char* const DIMENSION_NAMES[4] = {"cycles", "stress_ratio", "overload_ratio",
                                        "crack_length"};

// xorshift-multiply generator; kept local so partitions do not depend on
// standard-library distribution internals.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : state_(seed ? seed : 0x2545f4914f6cdd1dULL) {}

    std::uint64_t next() {
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        return state_ * 0x2545f4914f6cdd1dULL;
    }

    /// Unbiased draw in [0, bound].
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

} // namespace

Sample make_sample(const CrackGrowthSeries& series, const CrackGrowthRecord& record) {
    const auto [r, rol] = condition_features(record.condition);
    return Sample{{record.cycles, r, rol}, record.crack_length, series.id, record.condition};
}

void SplitSpec::validate() const {
    if (!(dev_fraction > 0.0) || !(dev_fraction < 1.0))
        throw InvalidSplitSpec("dev_fraction must lie in (0, 1), got " +
                               format_double(dev_fraction));
    for (double f : {train_fraction, val_fraction, test_fraction})
        if (!(f >= 0.0) || !(f <= 1.0))
            throw InvalidSplitSpec("partition fractions must lie in [0, 1]");
    const double sum = train_fraction + val_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-12)
        throw InvalidSplitSpec(
            "train_fraction + val_fraction + test_fraction must equal 1, got " +
            format_double(sum));
}

std::pair<std::vector<Sample>, std::vector<Sample>> chronological_split(const Dataset& dataset,
                                                                        double dev_fraction) {
    // SplitSpec narrows this to (0, 1); the bare operation also accepts a
    // cutoff at or past the final cycle, which leaves extrapolation empty.
    if (!std::isfinite(dev_fraction) || !(dev_fraction > 0.0))
        throw InvalidSplitSpec("dev_fraction must be positive, got " +
                               format_double(dev_fraction));
    std::vector<Sample> development;
    std::vector<Sample> extrapolation;
    for (const auto& series : dataset.series) {
        const double cutoff = dev_fraction * series.records.back().cycles;
        std::size_t dev_count = 0;
        for (const auto& record : series.records) {
            if (record.cycles <= cutoff) {
                development.push_back(make_sample(series, record));
                ++dev_count;
            } else {
                extrapolation.push_back(make_sample(series, record));
            }
        }
        if (dev_count == 0)
            throw DegenerateSeries("series '" + series.id +
                                   "' has no records at or below the development cutoff");
    }
    return {std::move(development), std::move(extrapolation)};
}

DataSplits random_partition(const std::vector<Sample>& development, const SplitSpec& spec) {
    spec.validate();
    if (development.empty()) throw EmptyDevelopmentSet("development pool is empty");

    const std::size_t n = development.size();
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * double(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test_fraction * double(n)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitRng rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::uint64_t j = rng.below(i);
        std::swap(order[i], order[j]);
    }

    DataSplits splits;
    splits.validation.reserve(n_val);
    splits.dev_test.reserve(n_test);
    splits.train.reserve(n - n_val - n_test);
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = development[order[i]];
        if (i < n_val)
            splits.validation.push_back(s);
        else if (i < n_val + n_test)
            splits.dev_test.push_back(s);
        else
            splits.train.push_back(s);
    }
    return splits;
}

DataSplits build_splits(const Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    auto [development, extrapolation] = chronological_split(dataset, spec.dev_fraction);
    DataSplits splits = random_partition(development, spec);
    splits.extrapolation = std::move(extrapolation);
    return splits;
}

Normalizer fit_normalizer(const std::vector<Sample>& train) {
    if (train.empty()) throw EmptySplit("cannot fit a normalizer on an empty training subset");

    Normalizer nz;
    for (int d = 0; d < 4; ++d) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& s : train) {
            const double v = d < 3 ? s.features[d] : s.target;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo))
            throw DegenerateDimension(std::string("dimension '") + DIMENSION_NAMES[d] +
                                      "' has no spread (min = max = " + format_double(lo) + ")");
        nz.minimum[d] = lo;
        nz.maximum[d] = hi;
    }
    return nz;
}

std::array<double, 3> normalize_features(const std::array<double, 3>& raw, const Normalizer& nz) {
    std::array<double, 3> out{};
    for (int d = 0; d < 3; ++d)
        out[d] = 2.0 * (raw[d] - nz.minimum[d]) / (nz.maximum[d] - nz.minimum[d]) - 1.0;
    return out;
}

double normalize_target(double raw, const Normalizer& nz) {
    return 2.0 * (raw - nz.minimum[3]) / (nz.maximum[3] - nz.minimum[3]) - 1.0;
}

double denormalize_target(double normalized, const Normalizer& nz) {
    return nz.minimum[3] + (normalized + 1.0) * 0.5 * (nz.maximum[3] - nz.minimum[3]);
}

} // namespace fcg
