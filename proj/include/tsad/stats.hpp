#pragma once

#include <span>
#include <vector>

namespace tsad::stats {

double mean(std::span<const double> xs);

/// Population standard deviation (divides by n).
double stddev(std::span<const double> xs);

double median(std::span<const double> xs);

/// Linearly interpolated quantile, q in [0, 1]. Matches numpy's default method.
double quantile(std::span<const double> xs, double q);

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

Quartiles quartiles(std::span<const double> xs);

} // namespace tsad::stats
