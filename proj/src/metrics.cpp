#include "tsad/metrics.hpp"

#include "tsad/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace tsad::metrics {

namespace {

std::vector<std::size_t> as_sorted_set(const std::vector<std::size_t>& xs) {
    std::vector<std::size_t> out(xs);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Number of elements of `from` within `window` of some element of `to`.
/// Both inputs sorted and unique.
std::size_t matched(const std::vector<std::size_t>& from, const std::vector<std::size_t>& to,
                    std::size_t window) {
    std::size_t hits = 0;
    for (auto x : from) {
        const std::size_t lo = x >= window ? x - window : 0;
        auto it = std::lower_bound(to.begin(), to.end(), lo);
        if (it != to.end() && *it <= x + window) {
            ++hits;
        }
    }
    return hits;
}

PRF prf_from_sets(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth,
                  std::size_t window) {
    if (pred.empty() && truth.empty()) {
        return {1.0, 1.0, 1.0};
    }
    if (pred.empty() || truth.empty()) {
        return {0.0, 0.0, 0.0};
    }
    PRF out;
    out.precision = static_cast<double>(matched(pred, truth, window)) / static_cast<double>(pred.size());
    out.recall = static_cast<double>(matched(truth, pred, window)) / static_cast<double>(truth.size());
    out.f = f_score(out.precision, out.recall);
    return out;
}

double metric_at(const SegmentMetrics& m, int k) {
    switch (k) {
    case 0: return m.point.precision;
    case 1: return m.point.recall;
    case 2: return m.point.f;
    case 3: return m.range.precision;
    case 4: return m.range.recall;
    default: return m.range.f;
    }
}

SegmentMetrics mean_of(const std::vector<SegmentMetrics>& segments) {
    std::vector<double> col(segments.size());
    double v[6];
    for (int k = 0; k < 6; ++k) {
        for (std::size_t s = 0; s < segments.size(); ++s) {
            col[s] = metric_at(segments[s], k);
        }
        v[k] = stats::mean(col);
    }
    return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

nlohmann::json prf_json(const PRF& p) {
    return {{"precision", p.precision}, {"recall", p.recall}, {"f", p.f}};
}

nlohmann::json segment_json(const SegmentMetrics& m) {
    return {{"point", prf_json(m.point)}, {"range", prf_json(m.range)}};
}

} // namespace

double f_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

PRF point_prf(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
    return prf_from_sets(as_sorted_set(pred), as_sorted_set(truth), 0);
}

PRF range_prf(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth,
              std::size_t window) {
    return prf_from_sets(as_sorted_set(pred), as_sorted_set(truth), window);
}

std::vector<std::size_t> filter_in_range(const std::vector<std::int64_t>& pred, std::size_t length) {
    std::vector<std::size_t> out;
    std::unordered_set<std::int64_t> seen;
    for (auto p : pred) {
        if (p < 0 || static_cast<std::uint64_t>(p) >= length) {
            continue;
        }
        if (seen.insert(p).second) {
            out.push_back(static_cast<std::size_t>(p));
        }
    }
    return out;
}

HallucinationStats hallucination_stats(const std::vector<SegmentPrediction>& results) {
    HallucinationStats hs;
    hs.total_segments = results.size();
    for (std::size_t s = 0; s < results.size(); ++s) {
        std::size_t count = 0;
        for (auto p : results[s].pred) {
            if (p < 0 || static_cast<std::uint64_t>(p) >= results[s].length) {
                ++count;
            }
        }
        if (count > 0) {
            hs.segments.push_back(s);
            hs.counts.push_back(count);
        }
    }
    hs.segment_count = hs.counts.size();
    if (!hs.counts.empty()) {
        std::vector<double> c(hs.counts.begin(), hs.counts.end());
        hs.mean = stats::mean(c);
        hs.median = stats::median(c);
    }
    return hs;
}

MetricsReport aggregate(const std::vector<SegmentMetrics>& segments, std::size_t window) {
    if (segments.empty()) {
        throw std::invalid_argument("cannot aggregate zero segments");
    }
    MetricsReport report;
    report.window = window;
    report.segments = segments;
    report.mean = mean_of(segments);
    std::vector<double> col(segments.size());
    for (int k = 0; k < 6; ++k) {
        for (std::size_t s = 0; s < segments.size(); ++s) {
            col[s] = metric_at(segments[s], k);
        }
        const auto q = stats::quartiles(col);
        report.distributions[k] = {metric_at(report.mean, k), q.q1, q.median, q.q3};
    }
    return report;
}

MetricsReport score(const std::vector<ScoredSegment>& segments, std::size_t window) {
    std::vector<SegmentMetrics> per;
    std::vector<SegmentPrediction> raw;
    per.reserve(segments.size());
    for (const auto& seg : segments) {
        const auto pred = filter_in_range(seg.pred, seg.length);
        per.push_back({point_prf(pred, seg.truth), range_prf(pred, seg.truth, window)});
        raw.push_back({seg.pred, seg.length});
    }
    auto report = aggregate(per, window);
    report.hallucination = hallucination_stats(raw);
    std::vector<SegmentMetrics> clean;
    std::set<std::size_t> bad(report.hallucination.segments.begin(),
                              report.hallucination.segments.end());
    for (std::size_t s = 0; s < per.size(); ++s) {
        if (!bad.count(s)) {
            clean.push_back(per[s]);
        }
    }
    if (!clean.empty()) {
        report.filtered_mean = mean_of(clean);
    }
    return report;
}

std::string report_to_json(const MetricsReport& r, int indent) {
    using nlohmann::json;
    json j;
    j["window"] = r.window;
    j["segment_count"] = r.segments.size();
    j["mean"] = segment_json(r.mean);
    json dist = json::object();
    for (int k = 0; k < 6; ++k) {
        const auto& d = r.distributions[k];
        dist[kMetricNames[k]] = {{"mean", d.mean}, {"q1", d.q1}, {"median", d.median}, {"q3", d.q3}};
    }
    j["distributions"] = dist;
    json h;
    h["total_segments"] = r.hallucination.total_segments;
    h["segment_count"] = r.hallucination.segment_count;
    h["segments"] = r.hallucination.segments;
    h["counts"] = r.hallucination.counts;
    h["mean"] = r.hallucination.mean ? json(*r.hallucination.mean) : json(nullptr);
    h["median"] = r.hallucination.median ? json(*r.hallucination.median) : json(nullptr);
    j["hallucination"] = h;
    j["filtered_mean"] = r.filtered_mean ? segment_json(*r.filtered_mean) : json(nullptr);
    json segs = json::array();
    for (const auto& s : r.segments) {
        segs.push_back(segment_json(s));
    }
    j["segments"] = segs;
    return j.dump(indent);
}

std::string report_to_csv(const MetricsReport& r) {
    std::string out = "segment";
    for (const char* name : kMetricNames) {
        out += ',';
        out += name;
    }
    out += '\n';
    char buf[64];
    auto row = [&](const std::string& label, const SegmentMetrics& m) {
        out += label;
        for (int k = 0; k < 6; ++k) {
            std::snprintf(buf, sizeof buf, ",%.6f", metric_at(m, k));
            out += buf;
        }
        out += '\n';
    };
    for (std::size_t s = 0; s < r.segments.size(); ++s) {
        row(std::to_string(s), r.segments[s]);
    }
    row("mean", r.mean);
    return out;
}

std::vector<std::size_t> positive_indices(const std::vector<int>& labels) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] != 0) {
            out.push_back(t);
        }
    }
    return out;
}

} // namespace tsad::metrics
