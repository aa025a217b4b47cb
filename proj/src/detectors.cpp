#include "tsad/detectors.hpp"

#include "tsad/stats.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>

namespace tsad::detect {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

bool sigma_degenerate(double sigma, double mu) {
    return !(sigma > 1e-12 * std::max(1.0, std::abs(mu)));
}

std::vector<std::size_t> expand_to_points(const std::vector<std::size_t>& starts, std::size_t m,
                                          std::size_t length) {
    std::vector<char> hit(length, 0);
    for (auto s : starts) {
        for (std::size_t k = s; k < std::min(length, s + m); ++k) {
            hit[k] = 1;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < length; ++t) {
        if (hit[t]) {
            out.push_back(t);
        }
    }
    return out;
}

} // namespace

std::string_view to_string(DetectorKind k) {
    switch (k) {
    case DetectorKind::GlobalZscore: return "global-zscore";
    case DetectorKind::LocalZscore: return "local-zscore";
    case DetectorKind::MatrixProfile: return "matrix-profile";
    case DetectorKind::MovingAverageResidual: return "moving-average-residual";
    case DetectorKind::SeasonalNaiveResidual: return "seasonal-naive-residual";
    }
    return "global-zscore";
}

DetectorKind parse_detector_kind(std::string_view name) {
    for (auto k : {DetectorKind::GlobalZscore, DetectorKind::LocalZscore,
                   DetectorKind::MatrixProfile, DetectorKind::MovingAverageResidual,
                   DetectorKind::SeasonalNaiveResidual}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown detector: " + std::string(name));
}

void validate(const DetectorConfig& c) {
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    }
    if (c.window && *c.window < 2) {
        throw std::invalid_argument("window must be at least 2");
    }
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) {
        throw std::invalid_argument("lambda must be a finite non-negative number");
    }
    if (!(c.discord_quantile >= 0.0 && c.discord_quantile <= 1.0)) {
        throw std::invalid_argument("discord quantile must lie in [0, 1]");
    }
}

std::vector<double> power_spectrum(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n == 0) {
        throw std::invalid_argument("power spectrum of an empty series");
    }
    const double mu = stats::mean(values);
    std::vector<double> in(n);
    for (std::size_t t = 0; t < n; ++t) {
        in[t] = values[t] - mu;
    }
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<double> power(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        power[k] = std::norm(out[k]);
    }
    return power;
}

PeriodEstimate estimate_period_fft(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 8) {
        throw std::invalid_argument("period estimation needs at least 8 points");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("period estimation needs finite values");
        }
    }
    const auto power = power_spectrum(values);
    const std::size_t hi = n / 2;
    const std::size_t ceiling = n / 2;

    PeriodEstimate est;
    double total = 0.0;
    double peak = 0.0;
    for (std::size_t k = 1; k <= hi; ++k) {
        total += power[k];
        if (power[k] > peak) {
            peak = power[k];
            est.bin = k;
        }
    }
    const double mean_power = total / static_cast<double>(hi);
    // Spectra at rounding level come from constant input.
    const double scale = std::max(1.0, stats::mean(values) * stats::mean(values)) *
                         static_cast<double>(n) * static_cast<double>(n);
    if (est.bin == 0 || peak <= 1e-24 * scale) {
        est.bin = 0;
        est.period = 4;
        est.reliable = false;
        return est;
    }
    est.peak_ratio = peak / mean_power;
    est.reliable = est.peak_ratio >= kReliablePeakRatio;
    const auto raw = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) / static_cast<double>(est.bin)));
    est.period = std::clamp<std::size_t>(raw, 4, ceiling);
    return est;
}

Detection detect_global_zscore(const std::vector<double>& values, double lambda) {
    if (values.size() < 3) {
        throw std::invalid_argument("global z-score needs at least 3 points");
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("lambda must be non-negative");
    }
    Detection out;
    const double mu = stats::mean(values);
    const double sigma = stats::stddev(values);
    if (sigma_degenerate(sigma, mu)) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t t = 0; t < values.size(); ++t) {
        if (std::abs(values[t] - mu) > lambda * sigma) {
            out.indices.push_back(t);
        }
    }
    return out;
}

Detection detect_local_zscore(const std::vector<double>& values, std::size_t context,
                              double lambda) {
    const std::size_t n = values.size();
    if (context < 1) {
        throw std::invalid_argument("local context must be at least 1");
    }
    if (n < 3) {
        throw std::invalid_argument("local z-score needs at least 3 points");
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("lambda must be non-negative");
    }
    Detection out;
    out.window_used = context;
    std::vector<double> window;
    window.reserve(2 * context);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= context ? t - context : 0;
        const std::size_t hi = std::min(n - 1, t + context);
        window.clear();
        for (std::size_t k = lo; k <= hi; ++k) {
            if (k != t) {
                window.push_back(values[k]);
            }
        }
        const double mu = stats::mean(window);
        const double sigma = stats::stddev(window);
        if (sigma_degenerate(sigma, mu)) {
            continue;
        }
        if (std::abs(values[t] - mu) > lambda * sigma) {
            out.indices.push_back(t);
        }
    }
    return out;
}

MatrixProfile compute_matrix_profile(const std::vector<double>& values, std::size_t m) {
    const std::size_t n = values.size();
    if (m < 4) {
        throw std::invalid_argument("matrix profile window must be at least 4");
    }
    if (n < 2 * m) {
        throw std::invalid_argument("matrix profile needs at least 2m points");
    }
    const std::size_t count = n - m + 1;
    const auto md = static_cast<double>(m);

    std::vector<double> mu(count);
    std::vector<double> sd(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::span<const double> sub(values.data() + i, m);
        mu[i] = stats::mean(sub);
        sd[i] = stats::stddev(sub);
    }

    MatrixProfile mp;
    mp.m = m;
    mp.exclusion = (m + 1) / 2;
    mp.distances.assign(count, std::numeric_limits<double>::infinity());
    mp.neighbors.assign(count, 0);

    auto distance = [&](std::size_t i, std::size_t j, long double qt) {
        const bool flat_i = sd[i] < kFlatSigma;
        const bool flat_j = sd[j] < kFlatSigma;
        if (flat_i && flat_j) {
            return 0.0;
        }
        if (flat_i || flat_j) {
            return std::sqrt(md);
        }
        const long double corr =
            (qt - static_cast<long double>(md) * mu[i] * mu[j]) /
            (static_cast<long double>(md) * sd[i] * sd[j]);
        const double d2 = static_cast<double>(2.0L * md * (1.0L - corr));
        return std::sqrt(std::max(0.0, d2));
    };

    // Walk each diagonal j = i + k with a running dot product.
    for (std::size_t k = mp.exclusion + 1; k < count; ++k) {
        long double qt = 0.0L;
        for (std::size_t r = 0; r < m; ++r) {
            qt += static_cast<long double>(values[r]) * values[k + r];
        }
        for (std::size_t i = 0; i + k < count; ++i) {
            const std::size_t j = i + k;
            if (i > 0) {
                qt += static_cast<long double>(values[i + m - 1]) * values[j + m - 1] -
                      static_cast<long double>(values[i - 1]) * values[j - 1];
            }
            const double d = distance(i, j, qt);
            if (d < mp.distances[i]) {
                mp.distances[i] = d;
                mp.neighbors[i] = j;
            }
            if (d < mp.distances[j]) {
                mp.distances[j] = d;
                mp.neighbors[j] = i;
            }
        }
    }
    return mp;
}

std::size_t top_discord(const MatrixProfile& profile) {
    if (profile.distances.empty()) {
        throw std::invalid_argument("empty matrix profile");
    }
    return static_cast<std::size_t>(
        std::max_element(profile.distances.begin(), profile.distances.end()) -
        profile.distances.begin());
}

Detection detect_matrix_profile(const std::vector<double>& values, std::size_t m,
                                double discord_quantile) {
    if (!(discord_quantile >= 0.0 && discord_quantile <= 1.0)) {
        throw std::invalid_argument("discord quantile must lie in [0, 1]");
    }
    const auto mp = compute_matrix_profile(values, m);
    // Profiles of exactly repeating series sit at rounding noise.
    const double floor = 1e-5 * std::sqrt(static_cast<double>(m));
    const double threshold = std::max(stats::quantile(mp.distances, discord_quantile), floor);
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < mp.distances.size(); ++i) {
        if (mp.distances[i] > threshold) {
            starts.push_back(i);
        }
    }
    Detection out;
    out.window_used = m;
    out.indices = expand_to_points(starts, m, values.size());
    return out;
}

Detection detect_forecast_residual(const std::vector<double>& values, Forecaster forecaster,
                                   double train_fraction, double lambda,
                                   std::optional<std::size_t> window) {
    const std::size_t n = values.size();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("lambda must be non-negative");
    }
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (n_train < 3 || n_train >= n) {
        throw std::invalid_argument("train split must hold at least 3 points and leave a test split");
    }
    const std::vector<double> train(values.begin(), values.begin() + static_cast<long>(n_train));

    std::size_t w = 0;
    if (window) {
        w = *window;
    } else {
        if (n_train < 8) {
            throw std::invalid_argument("automatic window needs a train split of at least 8 points");
        }
        w = estimate_period_fft(train).period;
    }
    if (w < 1 || w + 2 > n_train) {
        throw std::invalid_argument("window " + std::to_string(w) +
                                    " leaves fewer than 2 train residuals");
    }

    std::vector<double> residual(n, 0.0);
    if (forecaster == Forecaster::SeasonalNaive) {
        for (std::size_t t = w; t < n; ++t) {
            residual[t] = values[t] - values[t - w];
        }
    } else {
        double sum = 0.0;
        for (std::size_t k = 0; k < w; ++k) {
            sum += values[k];
        }
        for (std::size_t t = w; t < n; ++t) {
            residual[t] = values[t] - sum / static_cast<double>(w);
            sum += values[t] - values[t - w];
        }
    }

    const std::span<const double> train_res(residual.data() + w, n_train - w);
    const double mu = stats::mean(train_res);
    double sigma = stats::stddev(train_res);
    Detection out;
    out.window_used = w;
    const double floor = std::max(1e-6 * stats::stddev(train), 1e-12);
    if (sigma < floor) {
        out.degenerate = true;
        sigma = floor;
    }
    for (std::size_t t = n_train; t < n; ++t) {
        if (std::abs(residual[t] - mu) > lambda * sigma) {
            out.indices.push_back(t);
        }
    }
    return out;
}

Detection run_detector(const std::vector<double>& values, const DetectorConfig& config) {
    validate(config);
    auto resolve = [&]() -> std::size_t {
        if (config.window) {
            return *config.window;
        }
        return estimate_period_fft(values).period;
    };
    switch (config.kind) {
    case DetectorKind::GlobalZscore:
        return detect_global_zscore(values, config.lambda);
    case DetectorKind::LocalZscore: {
        std::size_t c = resolve();
        if (!config.window) {
            c = std::min(c, (values.size() - 1) / 2);
        }
        return detect_local_zscore(values, c, config.lambda);
    }
    case DetectorKind::MatrixProfile: {
        std::size_t m = std::max<std::size_t>(resolve(), 4);
        if (!config.window) {
            m = std::min(m, values.size() / 2);
        }
        return detect_matrix_profile(values, m, config.discord_quantile);
    }
    case DetectorKind::MovingAverageResidual:
        return detect_forecast_residual(values, Forecaster::MovingAverage, config.train_fraction,
                                        config.lambda, config.window);
    case DetectorKind::SeasonalNaiveResidual:
        return detect_forecast_residual(values, Forecaster::SeasonalNaive, config.train_fraction,
                                        config.lambda, config.window);
    }
    return {};
}

} // namespace tsad::detect
