#include "tsad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsad::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) {
        throw std::invalid_argument("mean of empty sequence");
    }
    // Kahan summation; the calibration checks run on 10^4-sample series.
    double sum = 0.0;
    double carry = 0.0;
    for (double x : xs) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
    const double mu = mean(xs);
    double acc = 0.0;
    for (double x : xs) {
        acc += (x - mu) * (x - mu);
    }
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

double median(std::span<const double> xs) {
    return quantile(xs, 0.5);
}

double quantile(std::span<const double> xs, double q) {
    if (xs.empty()) {
        throw std::invalid_argument("quantile of empty sequence");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::invalid_argument("quantile must lie in [0, 1]");
    }
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Quartiles quartiles(std::span<const double> xs) {
    return {quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75)};
}

} // namespace tsad::stats
