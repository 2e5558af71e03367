#include "fcg/dataset.hpp"

#include <cmath>
#include <cstddef>
#include <istream>
#include <numbers>
#include <ostream>

#include "fcg/errors.hpp"
#include "fcg/number_io.hpp"

namespace fcg {

namespace {

const char* const CSV_HEADER = "series_id,R,R_ol,N,a_mm";

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

void validate_series(const CrackGrowthSeries& s, const std::vector<std::size_t>& row_lines) {
    if (s.records.size() < 2)
        throw SeriesTooShort("series '" + s.id + "' has fewer than 2 records" +
                             at_line(row_lines.back()));
    for (std::size_t i = 1; i < s.records.size(); ++i) {
        const auto& prev = s.records[i - 1];
        const auto& cur = s.records[i];
        if (!(cur.cycles > prev.cycles))
            throw NonMonotonicCycles("series '" + s.id + "': cycles not strictly increasing" +
                                     at_line(row_lines[i]));
        if (cur.crack_length < prev.crack_length)
            throw DecreasingCrackLength("series '" + s.id + "': crack length decreases" +
                                        at_line(row_lines[i]));
        if (cur.condition != s.condition)
            throw MixedConditionInSeries("series '" + s.id + "': condition differs from first row" +
                                         at_line(row_lines[i]));
    }
}

// splitmix64, used to derive independent per-series noise streams.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed) : state_(seed) {}

    /// Uniform draw in [-1, 1].
    double next_symmetric() {
        state_ = mix64(state_ + counter_++);
        return 2.0 * (static_cast<double>(state_ >> 11) * 0x1.0p-53) - 1.0;
    }

private:
    std::uint64_t state_;
    std::uint64_t counter_ = 1;
};

double stress_range(double stress_ratio) {
    return synthetic::DSIGMA_REF / std::pow(1.0 - stress_ratio, synthetic::DSIGMA_EXPONENT);
}

double growth_rate(double crack_length, const LoadCondition& c) {
    const double dk = stress_range(c.stress_ratio) * (1.0 - c.stress_ratio) *
                      std::sqrt(std::numbers::pi * crack_length);
    return synthetic::PARIS_C * std::pow(dk, synthetic::PARIS_M);
}

/// Cycles needed to grow the ideal (noise-free, no-overload) curve from
/// INITIAL_CRACK_MM to FINAL_CRACK_MM, by trapezoid quadrature of dN = da/rate.
double cycles_to_final(const LoadCondition& c) {
    constexpr int STEPS = 4096;
    const double da =
        (synthetic::FINAL_CRACK_MM - synthetic::INITIAL_CRACK_MM) / STEPS;
    double total = 0.0;
    double a = synthetic::INITIAL_CRACK_MM;
    double inv_prev = 1.0 / growth_rate(a, c);
    for (int i = 0; i < STEPS; ++i) {
        a += da;
        const double inv_cur = 1.0 / growth_rate(a, c);
        total += 0.5 * (inv_prev + inv_cur) * da;
        inv_prev = inv_cur;
    }
    return total;
}

std::string condition_id(const LoadCondition& c) {
    std::string id = "R" + format_double(c.stress_ratio);
    if (c.constant_amplitude()) return id + "_CA";
    return id + "_OL" + format_double(*c.overload);
}

} // namespace

void LoadCondition::validate() const {
    if (!std::isfinite(stress_ratio) || stress_ratio < 0.0 || stress_ratio >= 1.0)
        throw InvalidCondition("stress ratio R must satisfy 0 <= R < 1, got " +
                               format_double(stress_ratio));
    if (overload && (!std::isfinite(*overload) || *overload <= 1.0))
        throw InvalidCondition("overload ratio must be > 1, got " + format_double(*overload));
}

std::pair<double, double> condition_features(const LoadCondition& c) {
    return {c.stress_ratio, c.overload.value_or(1.0)};
}

Dataset parse_csv(std::istream& source) {
    std::string line;
    if (!std::getline(source, line)) throw EmptyInput("no input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != CSV_HEADER)
        throw MalformedRow("expected header '" + std::string(CSV_HEADER) + "'" + at_line(1));

    Dataset dataset;
    std::vector<std::size_t> row_lines; // source line of each record in the open series
    std::size_t line_no = 1;

    auto close_series = [&]() {
        if (dataset.series.empty()) return;
        validate_series(dataset.series.back(), row_lines);
        row_lines.clear();
    };

    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        const auto fields = split_fields(line);
        if (fields.size() != 5)
            throw MalformedRow("expected 5 fields, got " + std::to_string(fields.size()) +
                               at_line(line_no));
        const std::string& id = fields[0];
        if (id.empty()) throw MalformedRow("empty series_id" + at_line(line_no));

        CrackGrowthRecord rec;
        if (!parse_double(fields[1], rec.condition.stress_ratio))
            throw MalformedRow("non-numeric R '" + fields[1] + "'" + at_line(line_no));
        if (fields[2] != "CA") {
            double ratio = 0.0;
            if (!parse_double(fields[2], ratio))
                throw MalformedRow("R_ol must be a number or 'CA', got '" + fields[2] + "'" +
                                   at_line(line_no));
            rec.condition.overload = ratio;
        }
        if (!parse_double(fields[3], rec.cycles))
            throw MalformedRow("non-numeric N '" + fields[3] + "'" + at_line(line_no));
        if (!parse_double(fields[4], rec.crack_length))
            throw MalformedRow("non-numeric a_mm '" + fields[4] + "'" + at_line(line_no));

        try {
            rec.condition.validate();
        } catch (const InvalidCondition& e) {
            throw MalformedRow(std::string(e.what()) + at_line(line_no));
        }
        if (!std::isfinite(rec.cycles) || rec.cycles < 0.0)
            throw MalformedRow("N must be finite and >= 0" + at_line(line_no));
        if (!std::isfinite(rec.crack_length) || rec.crack_length <= 0.0)
            throw MalformedRow("a_mm must be finite and > 0" + at_line(line_no));

        if (dataset.series.empty() || dataset.series.back().id != id) {
            for (const auto& done : dataset.series)
                if (done.id == id)
                    throw NonContiguousSeries("series '" + id + "' reappears after other rows" +
                                              at_line(line_no));
            close_series();
            dataset.series.push_back({id, rec.condition, {}});
        }
        dataset.series.back().records.push_back(std::move(rec));
        row_lines.push_back(line_no);
    }
    if (dataset.series.empty()) throw EmptyInput("no data rows");
    close_series();
    return dataset;
}

void serialize_csv(const Dataset& dataset, std::ostream& sink) {
    sink << CSV_HEADER << '\n';
    for (const auto& s : dataset.series) {
        for (const auto& r : s.records) {
            sink << s.id << ',' << format_double(r.condition.stress_ratio) << ',';
            if (r.condition.constant_amplitude())
                sink << "CA";
            else
                sink << format_double(*r.condition.overload);
            sink << ',' << format_double(r.cycles) << ',' << format_double(r.crack_length)
                 << '\n';
        }
    }
    if (!sink) throw SinkFailure("failed writing CSV");
}

Dataset generate_synthetic(const std::vector<LoadCondition>& conditions, int points_per_series,
                           std::uint64_t seed) {
    if (points_per_series < 10)
        throw InvalidPointCount("points_per_series must be >= 10, got " +
                                std::to_string(points_per_series));

    Dataset dataset;
    dataset.series.reserve(conditions.size());
    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
        const LoadCondition& cond = conditions[ci];
        cond.validate();

        const double span = cycles_to_final(cond);
        const double step = span / (points_per_series - 1);
        const double overload_at = 0.5 * span;
        const double overload_until = overload_at + synthetic::RETARDATION_WINDOW * span;
        const double retardation =
            cond.constant_amplitude() ? 1.0 : 1.0 / (*cond.overload * *cond.overload);

        NoiseStream noise(mix64(seed) ^ mix64(ci + 1));
        CrackGrowthSeries series{condition_id(cond), cond, {}};
        series.records.reserve(points_per_series);

        double a = synthetic::INITIAL_CRACK_MM;
        for (int i = 0; i < points_per_series; ++i) {
            const double n = i * step;
            series.records.push_back({n, cond, a});
            // Advance to the next grid point with Euler sub-steps; noise
            // scales the whole positive increment so growth stays monotone.
            constexpr int SUBSTEPS = 8;
            double a_next = a;
            for (int s = 0; s < SUBSTEPS; ++s) {
                const double n_sub = n + step * (s + 0.5) / SUBSTEPS;
                double rate = growth_rate(a_next, cond);
                if (n_sub > overload_at && n_sub <= overload_until) rate *= retardation;
                a_next += rate * (step / SUBSTEPS);
            }
            const double jitter = std::exp(synthetic::NOISE_SCALE * noise.next_symmetric());
            a += (a_next - a) * jitter;
        }
        dataset.series.push_back(std::move(series));
    }
    return dataset;
}

std::vector<LoadCondition> default_conditions() {
    std::vector<LoadCondition> conditions;
    for (double r : {0.1, 0.3, 0.5, 0.7}) {
        conditions.push_back({r, std::nullopt});
        conditions.push_back({r, 1.5});
        conditions.push_back({r, 2.0});
    }
    return conditions;
}

} // namespace fcg
