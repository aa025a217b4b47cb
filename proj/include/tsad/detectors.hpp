#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace tsad::detect {

enum class DetectorKind {
    GlobalZscore,
    LocalZscore,
    MatrixProfile,
    MovingAverageResidual,
    SeasonalNaiveResidual,
};

std::string_view to_string(DetectorKind k);
/// global-zscore, local-zscore, matrix-profile, moving-average-residual,
/// seasonal-naive-residual
DetectorKind parse_detector_kind(std::string_view name);

struct DetectorConfig {
    DetectorKind kind = DetectorKind::GlobalZscore;
    /// Window m (matrix profile, moving average), context C (local z-score) or
    /// period (seasonal naive). Unset means estimate it with the FFT.
    std::optional<std::size_t> window;
    double lambda = 3.0;
    double train_fraction = 0.5;
    double discord_quantile = 0.99;
};

void validate(const DetectorConfig& config);

struct Detection {
    /// Ascending, unique.
    std::vector<std::size_t> indices;
    /// Set when the scale estimate collapsed and a floor was used instead.
    bool degenerate = false;
    std::optional<std::size_t> window_used;
};

struct PeriodEstimate {
    std::size_t period = 4;
    /// Dominant non-DC bin; 0 when the spectrum is empty.
    std::size_t bin = 0;
    /// Peak power over mean non-DC power.
    double peak_ratio = 0.0;
    bool reliable = false;
};

/// Peak power must reach this multiple of the mean non-DC power.
inline constexpr double kReliablePeakRatio = 20.0;

/// round(T / dominant bin), clamped to [4, T/2]. Requires T >= 8.
PeriodEstimate estimate_period_fft(const std::vector<double>& values);

/// Power spectrum |X_k|^2 of the mean-removed series for k = 0..T/2.
std::vector<double> power_spectrum(const std::vector<double>& values);

/// { t : |x_t - mean| > lambda * sigma }. Requires T >= 3.
Detection detect_global_zscore(const std::vector<double>& values, double lambda = 3.0);

/// Compares x_t with the mean and deviation of its clipped +-C window, x_t
/// itself excluded. Windows with zero deviation are skipped.
Detection detect_local_zscore(const std::vector<double>& values, std::size_t context,
                              double lambda = 3.0);

inline constexpr double kFlatSigma = 1e-9;

struct MatrixProfile {
    std::size_t m = 0;
    std::size_t exclusion = 0;
    std::vector<double> distances;
    std::vector<std::size_t> neighbors;
};

/// z-normalized nearest-neighbour distance of every length-m subsequence with
/// trivial matches |i - j| <= ceil(m/2) excluded. Flat subsequences normalize
/// to the zero vector. Requires m >= 4 and T >= 2m.
MatrixProfile compute_matrix_profile(const std::vector<double>& values, std::size_t m);

/// Start of the subsequence with the largest profile value.
std::size_t top_discord(const MatrixProfile& profile);

/// Flags every point of each subsequence whose profile value exceeds the
/// given quantile of the profile.
Detection detect_matrix_profile(const std::vector<double>& values, std::size_t m,
                                double discord_quantile = 0.99);

enum class Forecaster { MovingAverage, SeasonalNaive };

/// Fits on the first floor(train_fraction * T) points and flags later points
/// whose one-step residual is more than lambda train-residual deviations from
/// the train-residual mean. `window` is the averaging window or the season
/// length; unset estimates it from the train split.
Detection detect_forecast_residual(const std::vector<double>& values, Forecaster forecaster,
                                   double train_fraction = 0.5, double lambda = 3.0,
                                   std::optional<std::size_t> window = std::nullopt);

Detection run_detector(const std::vector<double>& values, const DetectorConfig& config);

} // namespace tsad::detect
