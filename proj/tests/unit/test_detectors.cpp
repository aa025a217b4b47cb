#include "oracles.hpp"

#include "tsad/rng.hpp"
#include "tsad/anomalies.hpp"
#include "tsad/detectors.hpp"
#include "tsad/generator.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace tsad;
using namespace tsad::detect;

namespace {

std::vector<double> sine(std::size_t n, double freq, double amp = 1.0, double phase = 0.0) {
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) {
        v[t] = amp * std::sin(2 * oracle::kPi * freq * t / n + phase);
    }
    return v;
}

std::vector<double> noisy(std::vector<double> v, double sd, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, sd);
    for (auto& x : v) x += g(rng);
    return v;
}

std::vector<std::size_t> global_oracle(const std::vector<double>& v, double lambda) {
    const double mu = oracle::mean(v), sd = oracle::pstdev(v);
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < v.size(); ++t) {
        if (std::abs(v[t] - mu) > lambda * sd) out.push_back(t);
    }
    return out;
}

std::vector<std::size_t> local_oracle(const std::vector<double>& v, std::size_t c, double lambda) {
    std::vector<std::size_t> out;
    const std::size_t n = v.size();
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<double> w;
        for (std::size_t k = (t >= c ? t - c : 0); k <= std::min(n - 1, t + c); ++k) {
            if (k != t) w.push_back(v[k]);
        }
        const double mu = oracle::mean(w), sd = oracle::pstdev(w);
        if (sd <= 1e-12 * std::max(1.0, std::abs(mu))) continue;
        if (std::abs(v[t] - mu) > lambda * sd) out.push_back(t);
    }
    return out;
}

bool subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

} // namespace

TEST_SUITE("detectors") {

TEST_CASE("power spectrum matches the direct DFT") {
    Rng rng(3);
    for (std::size_t n : {8, 9, 31, 64, 100, 257}) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(rng, -5, 5);
        const auto fast = power_spectrum(v);
        const auto ref = oracle::dft_power(v);
        REQUIRE(fast.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) {
            CHECK(fast[k] == doctest::Approx(ref[k]).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("period estimates") {
    const auto pure = estimate_period_fft(sine(500, 5.0));
    CHECK(pure.period == 100);
    CHECK(pure.bin == 5);
    CHECK(pure.reliable);

    const auto white = estimate_period_fft(noisy(std::vector<double>(512, 0.0), 1.0, 9));
    CHECK(white.period >= 4);
    CHECK(white.period <= 256);
    CHECK(!white.reliable);

    const auto three = estimate_period_fft(noisy(sine(600, 3.0, 5.0), 0.3, 4));
    CHECK(three.bin == oracle::dominant_bin(noisy(sine(600, 3.0, 5.0), 0.3, 4)));
    CHECK(std::abs(static_cast<long>(three.bin) - 3) <= 1);
    CHECK(three.period == 200);

    const auto flat = estimate_period_fft(std::vector<double>(64, 7.0));
    CHECK(flat.period == 4);
    CHECK(!flat.reliable);
    CHECK_THROWS_AS(estimate_period_fft(std::vector<double>(7, 1.0)), std::invalid_argument);

    // Clamp to T/2 when the dominant bin is 1.
    CHECK(estimate_period_fft(sine(64, 1.0)).period == 32);
}

TEST_CASE("global z-score matches its definition") {
    const std::vector<double> trial = {1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 5, 1, 2, 1, 1, 2, 1, 1, 2};
    CHECK(detect_global_zscore(trial, 2.0).indices == std::vector<std::size_t>{11});
    CHECK(oracle::mean(trial) == doctest::Approx(1.55));
    CHECK(oracle::pstdev(trial) == doctest::Approx(0.92).epsilon(0.01));

    const auto flat = detect_global_zscore(std::vector<double>(30, 4.0), 3.0);
    CHECK(flat.indices.empty());
    CHECK(flat.degenerate);

    const std::vector<double> v = {1, 2, 3, 2, 1, 2.5};
    const auto all = detect_global_zscore(v, 0.0);
    CHECK(all.indices == global_oracle(v, 0.0));

    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x(50);
        for (auto& e : x) e = uniform(rng, -10, 10);
        x[static_cast<std::size_t>(uniform_int(rng, 0, 49))] = 80;
        const double lam = uniform(rng, 0.5, 4.0);
        REQUIRE(detect_global_zscore(x, lam).indices == global_oracle(x, lam));
    }
    CHECK_THROWS_AS(detect_global_zscore({1, 2}, 3.0), std::invalid_argument);
}

TEST_CASE("global z-score flags the same values after shuffling") {
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x(80);
        for (auto& e : x) e = uniform(rng, -1, 1);
        x[3] = 9;
        x[40] = -7;
        auto values_of = [](const std::vector<double>& s, const Detection& d) {
            std::vector<double> out;
            for (auto t : d.indices) out.push_back(s[t]);
            std::sort(out.begin(), out.end());
            return out;
        };
        const auto before = values_of(x, detect_global_zscore(x, 2.5));
        std::shuffle(x.begin(), x.end(), rng);
        REQUIRE(values_of(x, detect_global_zscore(x, 2.5)) == before);
    }
}

TEST_CASE("local z-score matches the leave-one-out oracle") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        auto x = noisy(sine(120, 3.0, 4.0), 0.5, 100 + i);
        x[static_cast<std::size_t>(uniform_int(rng, 0, 119))] += 6.0;
        const std::size_t c = static_cast<std::size_t>(uniform_int(rng, 1, 40));
        const double lam = uniform(rng, 1.5, 3.5);
        REQUIRE(detect_local_zscore(x, c, lam).indices == local_oracle(x, c, lam));
    }
    CHECK(detect_local_zscore(std::vector<double>(40, 1.0), 5, 3.0).indices.empty());
    CHECK_THROWS_AS(detect_local_zscore({1, 2, 3}, 0, 3.0), std::invalid_argument);
}

TEST_CASE("local z-score over the whole series is the global rule at an adjusted threshold") {
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x(60);
        for (auto& e : x) e = uniform(rng, -1, 1);
        x[static_cast<std::size_t>(uniform_int(rng, 0, 59))] = 6;
        const double lam = uniform(rng, 1.5, 3.5);
        const double n = static_cast<double>(x.size());
        // |x - mean without x| / sd without x is increasing in the global |z|.
        const double adjusted = lam * std::sqrt((n - 1) / (n + lam * lam));
        REQUIRE(detect_local_zscore(x, x.size(), lam).indices ==
                detect_global_zscore(x, adjusted).indices);
    }
}

TEST_CASE("matrix profile equals brute-force z-normalised distances") {
    Rng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = static_cast<std::size_t>(uniform_int(rng, 16, 256));
        const std::size_t m = static_cast<std::size_t>(uniform_int(rng, 4, static_cast<long>(n / 2)));
        std::vector<double> x(n);
        const double level = uniform(rng, -100, 100);
        for (auto& e : x) e = level + uniform(rng, -3, 3);
        if (trial % 5 == 0) {
            for (std::size_t t = n / 3; t < n / 3 + m + 2 && t < n; ++t) x[t] = level;
        }
        const auto mp = compute_matrix_profile(x, m);
        REQUIRE(mp.exclusion == (m + 1) / 2);
        const auto ref = oracle::brute_profile(x, m, mp.exclusion);
        REQUIRE(mp.distances.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (std::isinf(ref[i])) {
                // No window lies outside the exclusion zone.
                REQUIRE(std::isinf(mp.distances[i]));
                continue;
            }
            REQUIRE(std::abs(mp.distances[i] - ref[i]) < 1e-6);
            REQUIRE(std::abs(oracle::znorm_distance(x, i, mp.neighbors[i], m) - ref[i]) < 1e-6);
        }
    }
}

TEST_CASE("matrix profile of a repeated pattern is flat and flags nothing") {
    auto half = noisy(std::vector<double>(64, 0.0), 1.0, 3);
    std::vector<double> x = half;
    x.insert(x.end(), half.begin(), half.end());
    const auto mp = compute_matrix_profile(x, 16);
    for (std::size_t i = 0; i <= 64 - 16; ++i) CHECK(mp.distances[i] < 1e-6);
    CHECK(detect_matrix_profile(sine(400, 8.0), 50, 0.99).indices.empty());
    CHECK_THROWS_AS(compute_matrix_profile(x, 3), std::invalid_argument);
    CHECK_THROWS_AS(compute_matrix_profile(std::vector<double>(20, 0.0), 11), std::invalid_argument);
}

TEST_CASE("matrix profile flags whole discord windows") {
    auto x = noisy(sine(600, 10.0, 10.0), 0.2, 4);
    for (std::size_t t = 300; t < 330; ++t) x[t] = 0.0;
    const auto mp = compute_matrix_profile(x, 60);
    const auto d = top_discord(mp);
    CHECK(d + 60 > 300);
    CHECK(d < 330);
    const auto det = detect_matrix_profile(x, 60, 0.99);
    REQUIRE(!det.indices.empty());
    // Output is a union of whole windows.
    CHECK(std::binary_search(det.indices.begin(), det.indices.end(), d));
    CHECK(std::binary_search(det.indices.begin(), det.indices.end(), d + 59));
}

TEST_CASE("forecast residual detectors") {
    const auto periodic = sine(400, 10.0, 3.0);
    const auto clean = detect_forecast_residual(periodic, Forecaster::SeasonalNaive, 0.5, 3.0, 40);
    CHECK(clean.indices.empty());

    auto spiky = noisy(sine(400, 10.0, 3.0), 0.05, 2);
    spiky[300] += 10.0;
    for (auto f : {Forecaster::SeasonalNaive, Forecaster::MovingAverage}) {
        const auto det = detect_forecast_residual(spiky, f, 0.5, 3.0, 40);
        CHECK(std::binary_search(det.indices.begin(), det.indices.end(), 300));
    }
    const auto autow = detect_forecast_residual(spiky, Forecaster::SeasonalNaive);
    CHECK(autow.window_used == 40u);

    const auto long_series = noisy(sine(1080, 4.0, 2.0), 0.5, 3);
    for (auto f : {Forecaster::SeasonalNaive, Forecaster::MovingAverage}) {
        const auto det = detect_forecast_residual(long_series, f, 0.5, 0.5);
        REQUIRE(!det.indices.empty());
        CHECK(det.indices.front() >= 540);
    }
    CHECK_THROWS_AS(detect_forecast_residual(periodic, Forecaster::SeasonalNaive, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(detect_forecast_residual(periodic, Forecaster::SeasonalNaive, 0.5, 3.0, 199),
                    std::invalid_argument);
}

TEST_CASE("flagged sets shrink as lambda grows") {
    Rng rng(10);
    for (int i = 0; i < 60; ++i) {
        auto x = noisy(sine(300, 5.0, 3.0), 1.0, 500 + i);
        const double l1 = uniform(rng, 0.5, 3.0);
        const double l2 = l1 + uniform(rng, 0.01, 2.0);
        REQUIRE(subset(detect_global_zscore(x, l2).indices, detect_global_zscore(x, l1).indices));
        REQUIRE(subset(detect_local_zscore(x, 20, l2).indices, detect_local_zscore(x, 20, l1).indices));
        for (auto f : {Forecaster::SeasonalNaive, Forecaster::MovingAverage}) {
            REQUIRE(subset(detect_forecast_residual(x, f, 0.5, l2, 60).indices,
                           detect_forecast_residual(x, f, 0.5, l1, 60).indices));
        }
        const double q1 = uniform(rng, 0.5, 0.95);
        const double q2 = std::min(1.0, q1 + uniform(rng, 0.0, 0.1));
        REQUIRE(subset(detect_matrix_profile(x, 30, q2).indices, detect_matrix_profile(x, 30, q1).indices));
    }
}

TEST_CASE("run_detector dispatch and automatic windows") {
    const auto x = noisy(sine(400, 8.0, 5.0), 0.3, 1);
    DetectorConfig c;
    c.kind = DetectorKind::MatrixProfile;
    const auto mp = run_detector(x, c);
    CHECK(mp.window_used == 50u);
    c.kind = DetectorKind::LocalZscore;
    CHECK(run_detector(x, c).window_used == 50u);
    c.kind = DetectorKind::GlobalZscore;
    CHECK(run_detector(x, c).indices == detect_global_zscore(x, 3.0).indices);
    c.kind = DetectorKind::SeasonalNaiveResidual;
    c.window = 50;
    CHECK(run_detector(x, c).window_used == 50u);
    c.train_fraction = 1.5;
    CHECK_THROWS_AS(run_detector(x, c), std::invalid_argument);
    for (auto k : {DetectorKind::GlobalZscore, DetectorKind::LocalZscore, DetectorKind::MatrixProfile,
                   DetectorKind::MovingAverageResidual, DetectorKind::SeasonalNaiveResidual}) {
        CHECK(parse_detector_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_detector_kind("isolation-forest"), std::invalid_argument);
}

}
