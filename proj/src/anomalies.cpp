#include "tsad/anomalies.hpp"

#include "tsad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tsad::anomaly {

std::string_view to_string(Category c) {
    switch (c) {
    case Category::GlobalPoint: return "global_point";
    case Category::LocalPoint: return "local_point";
    case Category::Seasonality: return "seasonality";
    case Category::Trend: return "trend";
    case Category::Shape: return "shape";
    }
    return "global_point";
}

std::string_view to_string(Kind k) {
    switch (k) {
    case Kind::GlobalPoint: return "global_point";
    case Kind::LocalPoint: return "local_point";
    case Kind::SeasonalityAmplitude: return "seasonality_amplitude";
    case Kind::SeasonalityPeriod: return "seasonality_period";
    case Kind::TrendChange: return "trend_change";
    case Kind::TrendBreak: return "trend_break";
    case Kind::ShapeChange: return "shape_change";
    case Kind::ShapeBreak: return "shape_break";
    }
    return "global_point";
}

Category parse_category(std::string_view name) {
    for (auto c : kAllCategories) {
        if (to_string(c) == name) {
            return c;
        }
    }
    throw std::invalid_argument("unknown anomaly category: " + std::string(name));
}

Kind parse_kind(std::string_view name) {
    for (auto k : {Kind::GlobalPoint, Kind::LocalPoint, Kind::SeasonalityAmplitude,
                   Kind::SeasonalityPeriod, Kind::TrendChange, Kind::TrendBreak,
                   Kind::ShapeChange, Kind::ShapeBreak}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown anomaly kind: " + std::string(name));
}

Category category_of(Kind k) {
    switch (k) {
    case Kind::GlobalPoint: return Category::GlobalPoint;
    case Kind::LocalPoint: return Category::LocalPoint;
    case Kind::SeasonalityAmplitude:
    case Kind::SeasonalityPeriod: return Category::Seasonality;
    case Kind::TrendChange:
    case Kind::TrendBreak: return Category::Trend;
    case Kind::ShapeChange:
    case Kind::ShapeBreak: return Category::Shape;
    }
    return Category::GlobalPoint;
}

bool is_point(Kind k) {
    return k == Kind::GlobalPoint || k == Kind::LocalPoint;
}

std::vector<Category> AnomalyPlan::categories() const {
    std::vector<Category> out;
    for (const auto& ins : insertions) {
        const Category c = category_of(ins.kind);
        if (std::find(out.begin(), out.end(), c) == out.end()) {
            out.push_back(c);
        }
    }
    return out;
}

LabeledSeries start_labeled(const gen::BaseSeries& base) {
    LabeledSeries series;
    series.values = base.values;
    series.labels.assign(base.values.size(), 0);
    series.type_labels.assign(base.values.size(), std::string(kNormalType));
    series.base_spec = base.spec;
    return series;
}

namespace {

double window_sigma_floor(const gen::BaseSeries& base) {
    const double sigma = stats::stddev(base.values);
    return sigma > 0.0 ? kFlatWindowSigmaFraction * sigma : kFlatWindowSigmaFraction;
}

struct WindowStats {
    double mean = 0.0;
    double sigma = 0.0;
};

WindowStats local_window(std::span<const double> xs, std::size_t t, std::size_t context) {
    const std::size_t lo = t >= context ? t - context : 0;
    const std::size_t hi = std::min(xs.size() - 1, t + context);
    const auto window = xs.subspan(lo, hi - lo + 1);
    return {stats::mean(window), stats::stddev(window)};
}

} // namespace

void apply_insertion(const gen::BaseSeries& base, const Insertion& ins, LabeledSeries& series) {
    const std::size_t n = base.values.size();
    if (series.values.size() != n) {
        throw std::invalid_argument("labeled series does not match its base");
    }
    if (ins.start > ins.end || ins.end >= n) {
        throw std::invalid_argument("insertion range outside the series");
    }
    auto& values = series.values;
    const auto& spec = base.spec;

    switch (ins.kind) {
    case Kind::GlobalPoint: {
        const double center = stats::median(base.values);
        values[ins.start] = center + ins.direction * ins.magnitude * stats::stddev(base.values);
        break;
    }
    case Kind::LocalPoint: {
        auto w = local_window(base.values, ins.start, ins.context);
        if (w.sigma < 1e-9) {
            w.sigma = window_sigma_floor(base);
        }
        values[ins.start] = w.mean + ins.direction * ins.magnitude * w.sigma;
        break;
    }
    case Kind::SeasonalityAmplitude:
        for (std::size_t t = ins.start; t <= ins.end; ++t) {
            values[t] = base.values[t] + (ins.ratio - 1.0) * base.seasonal[t];
        }
        break;
    case Kind::SeasonalityPeriod:
        // Time-warp the seasonal clock from `start` on: the segment continues
        // s(start) and runs with period scaled by `ratio`.
        for (std::size_t t = ins.start; t <= ins.end; ++t) {
            const double warped = static_cast<double>(ins.start) +
                                  static_cast<double>(t - ins.start) / ins.ratio;
            values[t] = base.values[t] - base.seasonal[t] +
                        gen::evaluate_seasonality(spec.seasonality, n, warped);
        }
        break;
    case Kind::TrendChange:
    case Kind::TrendBreak: {
        const double offset = ins.direction * ins.magnitude * stats::stddev(base.values);
        for (std::size_t t = ins.start; t <= ins.end; ++t) {
            values[t] = base.values[t] + offset;
        }
        break;
    }
    case Kind::ShapeChange:
    case Kind::ShapeBreak: {
        if (!ins.replacement) {
            throw std::invalid_argument("shape anomaly without a replacement seasonality");
        }
        for (std::size_t t = ins.start; t <= ins.end; ++t) {
            values[t] = base.values[t] - base.seasonal[t] +
                        gen::evaluate_seasonality(*ins.replacement, n, static_cast<double>(t));
        }
        break;
    }
    }

    const std::string type(to_string(category_of(ins.kind)));
    for (std::size_t t = ins.start; t <= ins.end; ++t) {
        series.labels[t] = 1;
        series.type_labels[t] = type;
    }
    series.plan.insertions.push_back(ins);
}

LabeledSeries apply_plan(const gen::BaseSeries& base, const AnomalyPlan& plan) {
    LabeledSeries series = start_labeled(base);
    for (const auto& ins : plan.insertions) {
        apply_insertion(base, ins, series);
    }
    return series;
}

std::vector<std::size_t> free_indices(const LabeledSeries& series) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < series.labels.size(); ++t) {
        if (series.labels[t] == 0) {
            out.push_back(t);
        }
    }
    return out;
}

namespace {

struct Window {
    std::size_t start;
    std::size_t end;
};

/// Start in [start_lo, start_hi) * T, length in [len_lo, len_hi) * T, end kept
/// inside the series by tightening the start bound.
Window sample_window(Rng& rng, std::size_t length, double start_lo, double start_hi,
                     double len_lo, double len_hi) {
    const double T = static_cast<double>(length);
    const auto span = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(uniform(rng, len_lo, len_hi) * T)));
    const double lo = start_lo * T;
    const double hi = std::max(lo, std::min(start_hi * T, T - 1.0 - static_cast<double>(span)));
    const auto start = static_cast<std::size_t>(std::floor(uniform(rng, lo, hi)));
    return {start, std::min(length - 1, start + span)};
}

std::size_t sample_change_start(Rng& rng, std::size_t length, double lo, double hi) {
    const double T = static_cast<double>(length);
    return static_cast<std::size_t>(std::floor(uniform(rng, lo * T, hi * T)));
}

std::vector<std::size_t> pick_points(Rng& rng, const LabeledSeries& series, std::size_t count) {
    auto pool = free_indices(series);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(count, pool.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
}

int sample_direction(Rng& rng) {
    return coin(rng) ? 1 : -1;
}

/// Larger ratio in (1.5, 3), smaller ratio in (0.25, 0.75).
double sample_ratio(Rng& rng, int direction) {
    return direction > 0 ? uniform(rng, 1.5, 3.0) : uniform(rng, 0.25, 0.75);
}

bool overlaps(const Insertion& a, const Insertion& b) {
    return a.start <= b.end && b.start <= a.end;
}

} // namespace

std::vector<Insertion> inject_global_points(const gen::BaseSeries& base, LabeledSeries& series,
                                            std::size_t count, double lambda, Rng& rng) {
    if (count == 0 || count > base.values.size() / 4) {
        throw std::invalid_argument("global point count must lie in [1, length/4]");
    }
    std::vector<Insertion> out;
    for (std::size_t t : pick_points(rng, series, count)) {
        Insertion ins;
        ins.kind = Kind::GlobalPoint;
        ins.start = ins.end = t;
        ins.direction = sample_direction(rng);
        ins.magnitude = lambda;
        apply_insertion(base, ins, series);
        out.push_back(ins);
    }
    return out;
}

std::vector<Insertion> inject_local_points(const gen::BaseSeries& base, LabeledSeries& series,
                                           std::size_t count, std::size_t context, double lambda,
                                           Rng& rng) {
    if (count == 0 || count > base.values.size() / 4) {
        throw std::invalid_argument("local point count must lie in [1, length/4]");
    }
    if (context == 0 || 2 * context >= base.values.size()) {
        throw std::invalid_argument("local context C must satisfy 0 < C < length/2");
    }
    std::vector<Insertion> out;
    for (std::size_t t : pick_points(rng, series, count)) {
        Insertion ins;
        ins.kind = Kind::LocalPoint;
        ins.start = ins.end = t;
        ins.direction = sample_direction(rng);
        ins.magnitude = lambda;
        ins.context = context;
        apply_insertion(base, ins, series);
        out.push_back(ins);
    }
    return out;
}

Insertion sample_seasonality_insertion(Rng& rng, const gen::BaseSeries& base,
                                       SeasonalityVariant variant) {
    if (base.spec.seasonality.kind == gen::SeasonalityKind::None) {
        throw UnsupportedBase("seasonality anomaly needs a base with seasonality");
    }
    Insertion ins;
    ins.kind = variant == SeasonalityVariant::Amplitude ? Kind::SeasonalityAmplitude
                                                        : Kind::SeasonalityPeriod;
    const auto w = sample_window(rng, base.values.size(), 0.2, 0.6, 0.2, 0.4);
    ins.start = w.start;
    ins.end = w.end;
    ins.direction = sample_direction(rng);
    ins.ratio = sample_ratio(rng, ins.direction);
    return ins;
}

Insertion sample_trend_insertion(Rng& rng, std::size_t length, PatternVariant variant) {
    if (length < gen::kMinLength) {
        throw std::invalid_argument("trend anomaly needs a series of length >= 20");
    }
    Insertion ins;
    if (variant == PatternVariant::Change) {
        ins.kind = Kind::TrendChange;
        ins.start = sample_change_start(rng, length, 0.2, 0.8);
        ins.end = length - 1;
    } else {
        ins.kind = Kind::TrendBreak;
        const auto w = sample_window(rng, length, 0.2, 0.8, 0.05, 0.2);
        ins.start = w.start;
        ins.end = w.end;
    }
    ins.direction = sample_direction(rng);
    ins.magnitude = uniform(rng, 1.5, 5.0);
    return ins;
}

Insertion sample_shape_insertion(Rng& rng, const gen::BaseSeries& base, PatternVariant variant) {
    const std::size_t length = base.values.size();
    Insertion ins;
    if (variant == PatternVariant::Change) {
        ins.kind = Kind::ShapeChange;
        ins.start = sample_change_start(rng, length, 0.2, 0.6);
        ins.end = length - 1;
    } else {
        ins.kind = Kind::ShapeBreak;
        const auto w = sample_window(rng, length, 0.2, 0.6, 0.2, 0.4);
        ins.start = w.start;
        ins.end = w.end;
    }
    const auto& original = base.spec.seasonality;
    std::vector<gen::SeasonalityKind> choices;
    for (auto k : {gen::SeasonalityKind::SingleSine, gen::SeasonalityKind::SquareSine,
                   gen::SeasonalityKind::Ifft}) {
        if (k != original.kind) {
            choices.push_back(k);
        }
    }
    const auto kind = choices[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(choices.size()) - 1))];
    auto replacement = gen::sample_seasonality(rng, length, kind);
    if (original.kind != gen::SeasonalityKind::None) {
        // Same scale as the original so the anomaly is a change of shape only.
        replacement.amplitude = original.amplitude;
    }
    ins.replacement = std::move(replacement);
    return ins;
}

Insertion inject_seasonality_anomaly(const gen::BaseSeries& base, LabeledSeries& series,
                                     SeasonalityVariant variant, Rng& rng) {
    auto ins = sample_seasonality_insertion(rng, base, variant);
    apply_insertion(base, ins, series);
    return ins;
}

Insertion inject_trend_anomaly(const gen::BaseSeries& base, LabeledSeries& series,
                               PatternVariant variant, Rng& rng) {
    auto ins = sample_trend_insertion(rng, base.values.size(), variant);
    apply_insertion(base, ins, series);
    return ins;
}

Insertion inject_shape_anomaly(const gen::BaseSeries& base, LabeledSeries& series,
                               PatternVariant variant, Rng& rng) {
    auto ins = sample_shape_insertion(rng, base, variant);
    apply_insertion(base, ins, series);
    return ins;
}

AnomalyPlan sample_anomaly_plan(Rng& rng, const gen::BaseSeries& base,
                                const PlanOptions& options) {
    const std::size_t length = base.values.size();
    if (length < gen::kMinLength) {
        throw std::invalid_argument("anomaly plans need a series of length >= 20");
    }

    std::vector<Category> categories = options.categories;
    const bool forced = !categories.empty();
    if (!forced) {
        std::vector<Category> pool(kAllCategories.begin(), kAllCategories.end());
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(static_cast<std::size_t>(uniform_int(rng, 1, 3)));
        categories = std::move(pool);
    }

    // Pattern anomalies first so point anomalies can avoid their ranges.
    LabeledSeries scratch = start_labeled(base);
    std::vector<Insertion> patterns;
    for (Category c : categories) {
        if (c == Category::GlobalPoint || c == Category::LocalPoint) {
            continue;
        }
        if (c == Category::Seasonality &&
            base.spec.seasonality.kind == gen::SeasonalityKind::None) {
            if (forced) {
                throw UnsupportedBase("seasonality anomaly needs a base with seasonality");
            }
            continue;
        }
        for (int attempt = 0; attempt <= options.max_redraws; ++attempt) {
            Insertion ins;
            switch (c) {
            case Category::Seasonality:
                ins = sample_seasonality_insertion(
                    rng, base, coin(rng) ? SeasonalityVariant::Amplitude : SeasonalityVariant::Period);
                break;
            case Category::Trend:
                ins = sample_trend_insertion(
                    rng, length, coin(rng) ? PatternVariant::Change : PatternVariant::Break);
                break;
            default:
                ins = sample_shape_insertion(
                    rng, base, coin(rng) ? PatternVariant::Change : PatternVariant::Break);
                break;
            }
            const bool clash = std::any_of(patterns.begin(), patterns.end(),
                                           [&](const Insertion& p) { return overlaps(p, ins); });
            if (!clash) {
                patterns.push_back(ins);
                apply_insertion(base, ins, scratch);
                break;
            }
        }
    }

    AnomalyPlan plan;
    plan.insertions = patterns;
    for (Category c : categories) {
        if (c != Category::GlobalPoint && c != Category::LocalPoint) {
            continue;
        }
        const auto cap = std::max<std::size_t>(1, length / 4);
        const auto count = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<long>(std::min<std::size_t>(6, cap))));
        for (std::size_t t : pick_points(rng, scratch, count)) {
            Insertion ins;
            ins.start = ins.end = t;
            ins.direction = sample_direction(rng);
            if (c == Category::GlobalPoint) {
                ins.kind = Kind::GlobalPoint;
                ins.magnitude = uniform(rng, 3.0, 20.0);
            } else {
                ins.kind = Kind::LocalPoint;
                ins.magnitude = uniform(rng, 2.0, 5.0);
                const auto max_context = static_cast<long>((length - 1) / 2);
                ins.context = static_cast<std::size_t>(std::min(uniform_int(rng, 11, 49), max_context));
            }
            apply_insertion(base, ins, scratch);
            plan.insertions.push_back(ins);
        }
    }
    return plan;
}

} // namespace tsad::anomaly
