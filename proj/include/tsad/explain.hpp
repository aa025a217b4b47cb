#pragma once

#include "tsad/anomalies.hpp"
#include "tsad/generator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tsad::llm {
struct LlmConfig;
}

namespace tsad::explain {

inline constexpr const char* kNoAnomalyText = "There is no obvious anomaly in this time series";

struct ExplanationBundle {
    std::string base_text;
    std::string anomaly_text;
    std::string combined_text;
    std::optional<std::string> rewritten_text;
    /// Set when a rewrite was requested but could not be obtained.
    std::optional<std::string> warning;
};

std::string describe_trend(const gen::TrendSpec& trend, std::size_t length);
std::string describe_seasonality(const gen::SeasonalitySpec& seasonality, std::size_t length);

/// Trend sentence (omitted without trend), seasonality sentence, noise sentence.
std::string describe_base(const gen::BaseSeriesSpec& spec);

/// `base_sigma` is the base series standard deviation; trend clauses report
/// their level shift in value units.
std::string describe_anomalies(const anomaly::AnomalyPlan& plan, std::size_t length,
                               double base_sigma);

ExplanationBundle explain(const gen::BaseSeriesSpec& spec, const anomaly::AnomalyPlan& plan);

/// Asks the configured chat endpoint to paraphrase the combined text. Failures
/// leave `rewritten_text` empty and set `warning`; they never throw.
/// Throws std::invalid_argument when the combined text is empty.
ExplanationBundle rewrite_via_llm(ExplanationBundle bundle, const llm::LlmConfig& config);

/// Formats indices as "[a, b, c]".
std::string format_index_list(const std::vector<std::size_t>& indices);

} // namespace tsad::explain
