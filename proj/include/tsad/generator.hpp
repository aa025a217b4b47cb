#pragma once

#include "tsad/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace tsad::gen {

/// Shortest series that can host every anomaly category with its fractional ranges.
inline constexpr std::size_t kMinLength = 20;

enum class SeasonalityKind { SingleSine, SquareSine, Ifft, None };
enum class TrendKind { Linear, Polynomial, None };

std::string_view to_string(SeasonalityKind kind);
std::string_view to_string(TrendKind kind);
SeasonalityKind parse_seasonality_kind(std::string_view name);
TrendKind parse_trend_kind(std::string_view name);

/// Periodic component. Frequencies count full cycles over the series, so the
/// time axis is t / length in [0, 1).
///
/// - SingleSine: one frequency, `amplitude * sin(2 pi w t / T + phase)`.
/// - SquareSine: odd harmonics (2n+1) * w_base with weights 1 / (2n+1).
/// - Ifft: real part of an unnormalized inverse DFT whose spectrum holds
///   `coefficients[k]` at integer bin `frequencies[k]`.
struct SeasonalitySpec {
    SeasonalityKind kind = SeasonalityKind::None;
    double amplitude = 0.0;
    double phase = 0.0;
    std::vector<double> frequencies;
    std::vector<double> coefficients;

    bool operator==(const SeasonalitySpec&) const = default;
};

/// Trend shape evaluated on u = t / (T - 1) in [0, 1]; `amplitude` is applied by
/// compose_series, not by render_trend.
struct TrendSpec {
    TrendKind kind = TrendKind::None;
    double slope = 0.0;
    int degree = 0;
    /// coefficients[k] multiplies u^(k+1).
    std::vector<double> coefficients;
    double shift = 0.0;
    double amplitude = 1.0;

    bool operator==(const TrendSpec&) const = default;
};

struct NoiseSpec {
    double amplitude = 1.0;

    bool operator==(const NoiseSpec&) const = default;
};

struct BaseSeriesSpec {
    std::size_t length = 0;
    SeasonalitySpec seasonality;
    TrendSpec trend;
    NoiseSpec noise;
    std::uint64_t seed = 0;

    bool operator==(const BaseSeriesSpec&) const = default;
};

/// A rendered base series with its additive components kept for the injectors.
struct BaseSeries {
    BaseSeriesSpec spec;
    std::vector<double> values;
    std::vector<double> seasonal;
    std::vector<double> trend; ///< already scaled by trend amplitude
    std::vector<double> noise; ///< already scaled by noise amplitude
};

/// Throws std::invalid_argument when the spec breaks a range or shape rule.
void validate(const SeasonalitySpec& spec);
void validate(const TrendSpec& spec);
void validate(const BaseSeriesSpec& spec);

/// Largest integer cycle count strictly below the Nyquist limit for `length`.
int max_frequency(std::size_t length);

SeasonalitySpec sample_seasonality(Rng& rng, std::size_t length, SeasonalityKind kind);
TrendSpec sample_trend(Rng& rng, TrendKind kind);

/// Draws a full recipe: seasonality kinds with probabilities (0.25, 0.25, 0.5),
/// trend kinds (0.3, 0.1, 0.6), trend amplitude in (1, 200), noise amplitude in (1, 50).
BaseSeriesSpec sample_base_spec(Rng& rng, std::size_t length);

/// Seasonal value at a (possibly fractional) time index.
double evaluate_seasonality(const SeasonalitySpec& spec, std::size_t length, double t);

std::vector<double> render_seasonality(const SeasonalitySpec& spec, std::size_t length);
std::vector<double> render_trend(const TrendSpec& spec, std::size_t length);

/// d/du of the unscaled trend at every grid point.
std::vector<double> trend_derivative(const TrendSpec& spec, std::size_t length);

BaseSeries compose_series(const BaseSeriesSpec& spec);

} // namespace tsad::gen
