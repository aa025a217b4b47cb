#include "tsad/explain.hpp"

#include "tsad/llm.hpp"
#include "tsad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tsad::explain {

namespace {

using anomaly::AnomalyPlan;
using anomaly::Insertion;
using anomaly::Kind;

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Integral values print without a fraction ("3"), others with two decimals.
std::string count_text(double v) {
    if (std::abs(v - std::round(v)) < 1e-9) {
        return std::to_string(static_cast<long long>(std::llround(v)));
    }
    return fixed2(v);
}

std::string points_per_period(double frequency, std::size_t length) {
    return std::to_string(static_cast<long long>(std::floor(static_cast<double>(length) / frequency)));
}

std::string period_clause(double frequency, std::size_t length) {
    return "include " + count_text(frequency) + " periods with each last for approximately every " +
           points_per_period(frequency, length) + " points";
}

/// Drops a trailing period and lowercases the first letter for embedding.
std::string embeddable(std::string sentence) {
    if (!sentence.empty() && sentence.back() == '.') {
        sentence.pop_back();
    }
    if (!sentence.empty() && sentence.front() >= 'A' && sentence.front() <= 'Z') {
        sentence.front() = static_cast<char>(sentence.front() - 'A' + 'a');
    }
    return sentence;
}

std::string point_clause(const std::vector<const Insertion*>& points, bool global) {
    std::vector<std::size_t> all;
    std::vector<std::size_t> spikes;
    std::vector<std::size_t> dips;
    for (const auto* ins : points) {
        all.push_back(ins->start);
        (ins->direction > 0 ? spikes : dips).push_back(ins->start);
    }
    std::sort(all.begin(), all.end());
    std::sort(spikes.begin(), spikes.end());
    std::sort(dips.begin(), dips.end());

    std::string text = global
        ? "There are some point-based global anomalies in the time series, the positions are "
        : "There are some point-based local anomalies in the time series, with significant "
          "outlier values compared to their surrounding values, the positions are ";
    text += format_index_list(all);
    const char* rest = global ? " compared to the rest of the time series." : ".";
    if (dips.empty()) {
        text += ", with significant spikes";
        text += rest;
    } else if (spikes.empty()) {
        text += ", with significant dips";
        text += rest;
    } else {
        text += ", with significant spikes and dips, where there are spikes in positions " +
                format_index_list(spikes) + " and dips in positions " + format_index_list(dips) +
                ".";
    }
    return text;
}

std::string pattern_clause(const Insertion& ins, std::size_t length, double base_sigma) {
    const std::string i = std::to_string(ins.start);
    const std::string j = std::to_string(ins.end);
    switch (ins.kind) {
    case Kind::SeasonalityAmplitude:
        if (ins.ratio > 1.0) {
            return "We can observe the amplitude of the time series changes to larger values "
                   "between indexes " + i + " to " + j + ", where the values change to about " +
                   fixed2(ins.ratio) + " times about the original values.";
        }
        return "We can observe the amplitude of the time series changes to smaller values "
               "between indexes " + i + " to " + j + ", where the values change to about " +
               fixed2(ins.ratio) + " of the original values.";
    case Kind::SeasonalityPeriod:
        return "We can observe the seasonality period change between indexes " + i + " and " + j +
               ", where the period changes to a " + (ins.ratio > 1.0 ? "longer" : "shorter") +
               " period.";
    case Kind::TrendChange:
        return "We can observe a change point at index " + i + " where the value " +
               (ins.direction > 0 ? "increases" : "decreases") + " by " +
               fixed2(ins.magnitude * base_sigma) + ".";
    case Kind::TrendBreak:
        if (ins.direction > 0) {
            return "There is a significant value increase since index " + i +
                   " and the values drop back to the original trend since index " + j + ".";
        }
        return "There is a significant value decrease since index " + i +
               " and the values increase back to the original trend since index " + j + ".";
    case Kind::ShapeChange:
        return "There shows the base pattern of the time series change since the index " + i +
               ", where the time series changed to " +
               embeddable(describe_seasonality(*ins.replacement, length)) + ".";
    case Kind::ShapeBreak:
        return "There are base patterns changes between the index " + i + " and the " + j +
               ", where during that time, we can observe the time series as " +
               embeddable(describe_seasonality(*ins.replacement, length)) + ".";
    case Kind::GlobalPoint:
    case Kind::LocalPoint:
        break;
    }
    return {};
}

} // namespace

std::string format_index_list(const std::vector<std::size_t>& indices) {
    std::string out = "[";
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (k) {
            out += ", ";
        }
        out += std::to_string(indices[k]);
    }
    return out + "]";
}

std::string describe_trend(const gen::TrendSpec& trend, std::size_t length) {
    switch (trend.kind) {
    case gen::TrendKind::None:
        return {};
    case gen::TrendKind::Linear:
        // Amplitude is positive, so the slope sign decides the direction.
        return trend.slope >= 0.0 ? "The time series is going with an increasing trend."
                                  : "The time series is going with a decreasing trend.";
    case gen::TrendKind::Polynomial: {
        const auto grad = gen::trend_derivative(trend, length);
        const auto [lo, hi] = std::minmax_element(grad.begin(), grad.end());
        if (*lo > 0.0) {
            return "This time series shows increasing polynomial trend.";
        }
        if (*hi < 0.0) {
            return "This time series shows decreasing polynomial trend.";
        }
        return "This time series shows polynomial trend.";
    }
    }
    return {};
}

std::string describe_seasonality(const gen::SeasonalitySpec& s, std::size_t length) {
    switch (s.kind) {
    case gen::SeasonalityKind::None:
        return "No seasonality observed in this time series.";
    case gen::SeasonalityKind::SingleSine:
        return "This time series includes sine-wave like seasonal patterns, which " +
               period_clause(s.frequencies.front(), length) + ".";
    case gen::SeasonalityKind::SquareSine: {
        std::string text = "This time series includes sine-wave like seasonal patterns, which ";
        for (std::size_t n = 0; n < s.frequencies.size(); ++n) {
            if (n) {
                text += ", ";
            }
            text += period_clause(s.frequencies[n], length);
        }
        return text + ".";
    }
    case gen::SeasonalityKind::Ifft: {
        std::string freqs;
        for (std::size_t n = 0; n < s.frequencies.size(); ++n) {
            if (n) {
                freqs += ", ";
            }
            freqs += count_text(s.frequencies[n]);
        }
        return "The time series appears to contain signals that can be effectively analyzed "
               "using the Fourier Transform, likely featuring prominent frequencies at " +
               freqs + ".";
    }
    }
    return {};
}

std::string describe_base(const gen::BaseSeriesSpec& spec) {
    std::string text = describe_trend(spec.trend, spec.length);
    if (!text.empty()) {
        text += ' ';
    }
    text += describe_seasonality(spec.seasonality, spec.length);
    text += " The time series has normal distributed noises with mean as 0 and variance as 1.";
    return text;
}

std::string describe_anomalies(const AnomalyPlan& plan, std::size_t length, double base_sigma) {
    if (plan.insertions.empty()) {
        return kNoAnomalyText;
    }
    std::vector<const Insertion*> global;
    std::vector<const Insertion*> local;
    for (const auto& ins : plan.insertions) {
        if (ins.kind == Kind::GlobalPoint) {
            global.push_back(&ins);
        } else if (ins.kind == Kind::LocalPoint) {
            local.push_back(&ins);
        }
    }

    // Clause order follows the first appearance of each insertion in the plan;
    // point insertions of one category share a single clause.
    std::vector<std::string> clauses;
    bool global_done = false;
    bool local_done = false;
    for (const auto& ins : plan.insertions) {
        if (ins.kind == Kind::GlobalPoint) {
            if (!global_done) {
                clauses.push_back(point_clause(global, true));
                global_done = true;
            }
        } else if (ins.kind == Kind::LocalPoint) {
            if (!local_done) {
                clauses.push_back(point_clause(local, false));
                local_done = true;
            }
        } else {
            clauses.push_back(pattern_clause(ins, length, base_sigma));
        }
    }
    std::string text;
    for (const auto& c : clauses) {
        if (!text.empty()) {
            text += ' ';
        }
        text += c;
    }
    return text;
}

ExplanationBundle explain(const gen::BaseSeriesSpec& spec, const AnomalyPlan& plan) {
    ExplanationBundle bundle;
    bundle.base_text = describe_base(spec);
    const auto base = gen::compose_series(spec);
    bundle.anomaly_text = describe_anomalies(plan, spec.length, stats::stddev(base.values));
    bundle.combined_text = bundle.base_text + " " + bundle.anomaly_text;
    return bundle;
}

ExplanationBundle rewrite_via_llm(ExplanationBundle bundle, const llm::LlmConfig& config) {
    if (bundle.combined_text.empty()) {
        throw std::invalid_argument("nothing to rewrite: combined explanation is empty");
    }
    static constexpr const char* kRewriteInstruction =
        "Rewrite the following description of a time series and its anomalies in fluent, "
        "varied English. Keep every index, count and direction unchanged. Return only the "
        "rewritten description.";
    bundle.rewritten_text.reset();
    bundle.warning.reset();
    try {
        llm::LlmClient client(config);
        auto reply = client.complete({{"system", kRewriteInstruction},
                                      {"user", bundle.combined_text}});
        if (reply.content && !reply.content->empty()) {
            bundle.rewritten_text = *reply.content;
        } else {
            bundle.warning = "rewrite failed: " + reply.error;
        }
    } catch (const std::exception& e) {
        bundle.warning = std::string("rewrite failed: ") + e.what();
    }
    return bundle;
}

} // namespace tsad::explain
