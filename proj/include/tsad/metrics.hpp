#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tsad::metrics {

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;

    bool operator==(const PRF&) const = default;
};

/// Harmonic mean, 0 when p + r = 0.
double f_score(double precision, double recall);

/// Inputs are treated as sets. Both empty scores (1, 1, 1); exactly one empty
/// scores (0, 0, 0).
PRF point_prf(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth);

/// A predicted index counts when some true index lies within W of it, and a
/// true index is recalled when some prediction lies within W of it. W = 0 is
/// point_prf.
PRF range_prf(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth,
              std::size_t window);

/// Drops negative, >= length and repeated indices, keeping first-seen order.
std::vector<std::size_t> filter_in_range(const std::vector<std::int64_t>& pred, std::size_t length);

struct SegmentPrediction {
    std::vector<std::int64_t> pred;
    std::size_t length = 0;
};

struct HallucinationStats {
    std::size_t total_segments = 0;
    /// Segments with at least one out-of-range index.
    std::size_t segment_count = 0;
    /// Positions (in the input list) of the hallucinated segments.
    std::vector<std::size_t> segments;
    /// Out-of-range indices per hallucinated segment, repeats included.
    std::vector<std::size_t> counts;
    std::optional<double> mean;
    std::optional<double> median;
};

HallucinationStats hallucination_stats(const std::vector<SegmentPrediction>& results);

struct SegmentMetrics {
    PRF point;
    PRF range;
};

struct Distribution {
    double mean = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

/// Names used in reports: point_precision, point_recall, point_f,
/// range_precision, range_recall, range_f.
inline constexpr const char* kMetricNames[6] = {"point_precision", "point_recall", "point_f",
                                                "range_precision", "range_recall", "range_f"};

struct MetricsReport {
    std::size_t window = 5;
    std::vector<SegmentMetrics> segments;
    SegmentMetrics mean;
    /// Indexed like kMetricNames.
    Distribution distributions[6];
    HallucinationStats hallucination;
    /// Means over the segments without hallucinated indices.
    std::optional<SegmentMetrics> filtered_mean;
};

/// Unweighted means and quartiles. Throws std::invalid_argument when empty.
MetricsReport aggregate(const std::vector<SegmentMetrics>& segments, std::size_t window);

struct ScoredSegment {
    std::vector<std::int64_t> pred;
    std::vector<std::size_t> truth;
    std::size_t length = 0;
};

/// Filters each prediction into range, scores it at W, aggregates, and
/// attaches hallucination statistics and the filtered re-score.
MetricsReport score(const std::vector<ScoredSegment>& segments, std::size_t window = 5);

std::string report_to_json(const MetricsReport& report, int indent = 2);
/// One row per segment, then a "mean" row.
std::string report_to_csv(const MetricsReport& report);

/// Indices with a non-zero label.
std::vector<std::size_t> positive_indices(const std::vector<int>& labels);

} // namespace tsad::metrics
