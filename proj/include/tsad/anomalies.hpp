#pragma once

#include "tsad/generator.hpp"
#include "tsad/rng.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsad::anomaly {

/// Top-level taxonomy. Plans draw 1-3 distinct categories.
enum class Category { GlobalPoint, LocalPoint, Seasonality, Trend, Shape };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::GlobalPoint, Category::LocalPoint, Category::Seasonality, Category::Trend,
    Category::Shape};

/// Concrete insertion variants.
enum class Kind {
    GlobalPoint,
    LocalPoint,
    SeasonalityAmplitude,
    SeasonalityPeriod,
    TrendChange,
    TrendBreak,
    ShapeChange,
    ShapeBreak,
};

enum class SeasonalityVariant { Amplitude, Period };
enum class PatternVariant { Change, Break };

std::string_view to_string(Category c);
std::string_view to_string(Kind k);
Category parse_category(std::string_view name);
Kind parse_kind(std::string_view name);
Category category_of(Kind k);
bool is_point(Kind k);

/// One insertion. Ranges are inclusive: [start, end]. Point insertions have
/// start == end.
///
/// `direction` is +1 (spike / increase / larger / longer) or -1 (dip / decrease /
/// smaller / shorter). For seasonality anomalies the direction is implied by
/// `ratio` (> 1 or < 1) and kept for the explanation templates.
struct Insertion {
    Kind kind = Kind::GlobalPoint;
    std::size_t start = 0;
    std::size_t end = 0;
    int direction = 1;
    double magnitude = 0.0;  ///< lambda (point / trend anomalies)
    double ratio = 1.0;      ///< seasonality amplitude or period multiplier
    std::size_t context = 0; ///< C for local points
    std::optional<gen::SeasonalitySpec> replacement; ///< shape anomalies

    bool operator==(const Insertion&) const = default;
};

struct AnomalyPlan {
    std::vector<Insertion> insertions;

    std::vector<Category> categories() const;
    bool operator==(const AnomalyPlan&) const = default;
};

struct LabeledSeries {
    std::vector<double> values;
    std::vector<int> labels;
    /// Category name per point, kNormalType where the point is normal.
    std::vector<std::string> type_labels;
    AnomalyPlan plan;
    gen::BaseSeriesSpec base_spec;
};

inline constexpr std::string_view kNormalType = "none";

/// Floor applied to a window standard deviation below 1e-9, as a fraction of
/// the whole-series standard deviation.
inline constexpr double kFlatWindowSigmaFraction = 1e-3;

struct PlanOptions {
    /// Exact category set to use; empty draws 1-3 at random.
    std::vector<Category> categories;
    /// Re-draws per pattern insertion before the conflicting insertion is dropped.
    int max_redraws = 100;
};

/// Thrown when an injector cannot run on the given base (e.g. no seasonality).
class UnsupportedBase : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Starts a LabeledSeries equal to the base with all-zero labels.
LabeledSeries start_labeled(const gen::BaseSeries& base);

/// Applies one insertion against the base components. Values inside the
/// insertion range are rewritten; labels, type-labels and the plan are updated.
void apply_insertion(const gen::BaseSeries& base, const Insertion& ins, LabeledSeries& series);

LabeledSeries apply_plan(const gen::BaseSeries& base, const AnomalyPlan& plan);

/// Indices free for point anomalies: not labeled yet.
std::vector<std::size_t> free_indices(const LabeledSeries& series);

// Injectors: each samples its parameters from `rng`, applies the insertion to
// `series` (which must start from `base`), and returns what it inserted.

std::vector<Insertion> inject_global_points(const gen::BaseSeries& base, LabeledSeries& series,
                                            std::size_t count, double lambda, Rng& rng);

std::vector<Insertion> inject_local_points(const gen::BaseSeries& base, LabeledSeries& series,
                                           std::size_t count, std::size_t context, double lambda,
                                           Rng& rng);

Insertion inject_seasonality_anomaly(const gen::BaseSeries& base, LabeledSeries& series,
                                     SeasonalityVariant variant, Rng& rng);

Insertion inject_trend_anomaly(const gen::BaseSeries& base, LabeledSeries& series,
                               PatternVariant variant, Rng& rng);

Insertion inject_shape_anomaly(const gen::BaseSeries& base, LabeledSeries& series,
                               PatternVariant variant, Rng& rng);

// Parameter samplers used by the plan sampler and the injectors.

Insertion sample_seasonality_insertion(Rng& rng, const gen::BaseSeries& base,
                                       SeasonalityVariant variant);
Insertion sample_trend_insertion(Rng& rng, std::size_t length, PatternVariant variant);
Insertion sample_shape_insertion(Rng& rng, const gen::BaseSeries& base, PatternVariant variant);

AnomalyPlan sample_anomaly_plan(Rng& rng, const gen::BaseSeries& base,
                                const PlanOptions& options = {});

} // namespace tsad::anomaly
