#include "tsad/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tsad::gen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool cond, const char* what) {
    if (!cond) {
        throw std::invalid_argument(what);
    }
}

} // namespace

std::string_view to_string(SeasonalityKind kind) {
    switch (kind) {
    case SeasonalityKind::SingleSine: return "single_sine";
    case SeasonalityKind::SquareSine: return "square_sine";
    case SeasonalityKind::Ifft: return "ifft";
    case SeasonalityKind::None: return "none";
    }
    return "none";
}

std::string_view to_string(TrendKind kind) {
    switch (kind) {
    case TrendKind::Linear: return "linear";
    case TrendKind::Polynomial: return "polynomial";
    case TrendKind::None: return "none";
    }
    return "none";
}

SeasonalityKind parse_seasonality_kind(std::string_view name) {
    for (auto kind : {SeasonalityKind::SingleSine, SeasonalityKind::SquareSine,
                      SeasonalityKind::Ifft, SeasonalityKind::None}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown seasonality kind: " + std::string(name));
}

TrendKind parse_trend_kind(std::string_view name) {
    for (auto kind : {TrendKind::Linear, TrendKind::Polynomial, TrendKind::None}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown trend kind: " + std::string(name));
}

void validate(const SeasonalitySpec& spec) {
    require(spec.amplitude >= 0.0 && std::isfinite(spec.amplitude),
            "seasonality amplitude must be finite and >= 0");
    if (spec.kind == SeasonalityKind::None) {
        return;
    }
    require(!spec.frequencies.empty(), "seasonality needs at least one frequency");
    require(spec.frequencies.size() == spec.coefficients.size(),
            "seasonality frequencies and coefficients differ in length");
    for (double f : spec.frequencies) {
        require(std::isfinite(f) && f > 0.0, "seasonality frequencies must be positive");
    }
    if (spec.kind == SeasonalityKind::SingleSine) {
        require(spec.frequencies.size() == 1, "single sine carries exactly one frequency");
    }
    if (spec.kind == SeasonalityKind::SquareSine) {
        const double base = spec.frequencies.front();
        for (std::size_t n = 0; n < spec.frequencies.size(); ++n) {
            const double odd = static_cast<double>(2 * n + 1);
            require(spec.coefficients[n] == 1.0 / odd,
                    "square sine weights must be 1/(2n+1)");
            require(std::abs(spec.frequencies[n] - odd * base) < 1e-9 * odd * base,
                    "square sine frequencies must be odd multiples of the base");
        }
    }
}

void validate(const TrendSpec& spec) {
    switch (spec.kind) {
    case TrendKind::None:
        break;
    case TrendKind::Linear:
        require(spec.degree == 0 && spec.coefficients.empty(),
                "linear trend carries a slope, not polynomial coefficients");
        require(std::isfinite(spec.slope), "trend slope must be finite");
        break;
    case TrendKind::Polynomial:
        require(spec.degree >= 1, "polynomial trend needs degree >= 1");
        require(!spec.coefficients.empty() &&
                    spec.coefficients.size() <= static_cast<std::size_t>(spec.degree),
                "polynomial trend needs 1..degree coefficients");
        require(spec.slope == 0.0, "polynomial trend carries no slope");
        break;
    }
    require(std::isfinite(spec.amplitude), "trend amplitude must be finite");
}

void validate(const BaseSeriesSpec& spec) {
    require(spec.length >= kMinLength, "series length must be at least 20");
    validate(spec.seasonality);
    validate(spec.trend);
    require(spec.noise.amplitude >= 0.0 && std::isfinite(spec.noise.amplitude),
            "noise amplitude must be finite and >= 0");
}

int max_frequency(std::size_t length) {
    // Strictly below length / 2 cycles.
    return static_cast<int>((length - 1) / 2);
}

SeasonalitySpec sample_seasonality(Rng& rng, std::size_t length, SeasonalityKind kind) {
    SeasonalitySpec spec;
    spec.kind = kind;
    if (kind == SeasonalityKind::None) {
        return spec;
    }
    const int cap = std::min(10, max_frequency(length));
    spec.amplitude = uniform(rng, 1.0, 1000.0);
    switch (kind) {
    case SeasonalityKind::SingleSine:
        spec.frequencies = {static_cast<double>(uniform_int(rng, 1, cap))};
        spec.coefficients = {1.0};
        spec.phase = uniform(rng, 0.0, kTwoPi);
        break;
    case SeasonalityKind::SquareSine: {
        // Keep every retained harmonic below Nyquist: (2n - 1) * base <= cap_all.
        const int cap_all = max_frequency(length);
        const int max_harmonics = std::min(10, (cap_all + 1) / 2);
        const int harmonics = static_cast<int>(uniform_int(rng, std::min(3, max_harmonics), max_harmonics));
        const int base_cap = std::max(1, std::min(10, cap_all / (2 * harmonics - 1)));
        const double base = static_cast<double>(uniform_int(rng, 1, base_cap));
        for (int n = 0; n < harmonics; ++n) {
            const double odd = static_cast<double>(2 * n + 1);
            spec.frequencies.push_back(odd * base);
            spec.coefficients.push_back(1.0 / odd);
        }
        break;
    }
    case SeasonalityKind::Ifft: {
        const int terms = static_cast<int>(uniform_int(rng, 1, cap));
        std::vector<int> bins(static_cast<std::size_t>(cap));
        std::iota(bins.begin(), bins.end(), 1);
        std::shuffle(bins.begin(), bins.end(), rng);
        bins.resize(static_cast<std::size_t>(terms));
        std::sort(bins.begin(), bins.end());
        for (int b : bins) {
            spec.frequencies.push_back(static_cast<double>(b));
            spec.coefficients.push_back(uniform(rng, 0.5, 1.5));
        }
        break;
    }
    case SeasonalityKind::None:
        break;
    }
    return spec;
}

TrendSpec sample_trend(Rng& rng, TrendKind kind) {
    TrendSpec spec;
    spec.kind = kind;
    switch (kind) {
    case TrendKind::None:
        break;
    case TrendKind::Linear:
        spec.slope = uniform(rng, -1.0, 1.0);
        break;
    case TrendKind::Polynomial:
        spec.degree = static_cast<int>(uniform_int(rng, 2, 5));
        for (int d = 0; d < spec.degree; ++d) {
            spec.coefficients.push_back(uniform(rng, -1.0, 1.0));
        }
        spec.shift = uniform(rng, -5.0, 5.0);
        break;
    }
    spec.amplitude = uniform(rng, 1.0, 200.0);
    return spec;
}

BaseSeriesSpec sample_base_spec(Rng& rng, std::size_t length) {
    if (length < kMinLength) {
        throw std::invalid_argument("series length must be at least 20, got " +
                                    std::to_string(length));
    }
    static constexpr SeasonalityKind kSeasonKinds[] = {
        SeasonalityKind::SingleSine, SeasonalityKind::SquareSine, SeasonalityKind::Ifft};
    static constexpr TrendKind kTrendKinds[] = {TrendKind::Linear, TrendKind::Polynomial,
                                                TrendKind::None};
    std::discrete_distribution<int> season_pick({0.25, 0.25, 0.5});
    std::discrete_distribution<int> trend_pick({0.3, 0.1, 0.6});

    BaseSeriesSpec spec;
    spec.length = length;
    spec.seasonality = sample_seasonality(rng, length, kSeasonKinds[season_pick(rng)]);
    spec.trend = sample_trend(rng, kTrendKinds[trend_pick(rng)]);
    spec.noise.amplitude = uniform(rng, 1.0, 50.0);
    spec.seed = rng();
    return spec;
}

double evaluate_seasonality(const SeasonalitySpec& spec, std::size_t length, double t) {
    const double tau = t / static_cast<double>(length);
    double acc = 0.0;
    switch (spec.kind) {
    case SeasonalityKind::None:
        return 0.0;
    case SeasonalityKind::SingleSine:
        return spec.amplitude * std::sin(kTwoPi * spec.frequencies.front() * tau + spec.phase);
    case SeasonalityKind::SquareSine:
        for (std::size_t n = 0; n < spec.frequencies.size(); ++n) {
            acc += spec.coefficients[n] * std::sin(kTwoPi * spec.frequencies[n] * tau);
        }
        return spec.amplitude * acc;
    case SeasonalityKind::Ifft:
        // Re(sum_k X_k exp(2 pi i k t / N)) with a real spectrum X.
        for (std::size_t n = 0; n < spec.frequencies.size(); ++n) {
            acc += spec.coefficients[n] * std::cos(kTwoPi * spec.frequencies[n] * tau);
        }
        return spec.amplitude * acc;
    }
    return 0.0;
}

std::vector<double> render_seasonality(const SeasonalitySpec& spec, std::size_t length) {
    std::vector<double> out(length);
    for (std::size_t t = 0; t < length; ++t) {
        out[t] = evaluate_seasonality(spec, length, static_cast<double>(t));
    }
    return out;
}

namespace {

double unit_time(std::size_t t, std::size_t length) {
    return length > 1 ? static_cast<double>(t) / static_cast<double>(length - 1) : 0.0;
}

} // namespace

std::vector<double> render_trend(const TrendSpec& spec, std::size_t length) {
    std::vector<double> out(length, 0.0);
    for (std::size_t t = 0; t < length; ++t) {
        const double u = unit_time(t, length);
        switch (spec.kind) {
        case TrendKind::None:
            break;
        case TrendKind::Linear:
            out[t] = spec.slope * u;
            break;
        case TrendKind::Polynomial: {
            double power = u;
            double acc = spec.shift;
            for (double c : spec.coefficients) {
                acc += c * power;
                power *= u;
            }
            out[t] = acc;
            break;
        }
        }
    }
    return out;
}

std::vector<double> trend_derivative(const TrendSpec& spec, std::size_t length) {
    std::vector<double> out(length, 0.0);
    for (std::size_t t = 0; t < length; ++t) {
        const double u = unit_time(t, length);
        switch (spec.kind) {
        case TrendKind::None:
            break;
        case TrendKind::Linear:
            out[t] = spec.slope;
            break;
        case TrendKind::Polynomial: {
            double power = 1.0;
            double acc = 0.0;
            for (std::size_t k = 0; k < spec.coefficients.size(); ++k) {
                acc += static_cast<double>(k + 1) * spec.coefficients[k] * power;
                power *= u;
            }
            out[t] = acc;
            break;
        }
        }
    }
    return out;
}

BaseSeries compose_series(const BaseSeriesSpec& spec) {
    validate(spec);
    BaseSeries series;
    series.spec = spec;
    series.seasonal = render_seasonality(spec.seasonality, spec.length);
    series.trend = render_trend(spec.trend, spec.length);
    for (double& v : series.trend) {
        v *= spec.trend.amplitude;
    }
    series.noise.resize(spec.length);
    Rng rng(spec.seed);
    std::normal_distribution<double> standard(0.0, 1.0);
    for (double& v : series.noise) {
        v = spec.noise.amplitude * standard(rng);
    }
    series.values.resize(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        series.values[t] = series.seasonal[t] + series.trend[t] + series.noise[t];
    }
    return series;
}

} // namespace tsad::gen
