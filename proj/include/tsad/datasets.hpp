#pragma once

#include "tsad/anomalies.hpp"
#include "tsad/explain.hpp"
#include "tsad/generator.hpp"
#include "tsad/llm.hpp"
#include "tsad/prompts.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsad::data {

inline constexpr int kFormatVersion = 1;

inline constexpr std::size_t kEvalLengths[3] = {100, 200, 400};
inline constexpr std::size_t kEvalPerType = 20;
inline constexpr std::size_t kInstructionLengths[3] = {180, 360, 720};
inline constexpr double kNoAnomalyProbability = 1.0 / 6.0;
inline constexpr std::size_t kBenchmarkTopK = 100;

/// Malformed input files. The message names the offending line.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One generated series with its labels and explanations.
struct Sample {
    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::string> types;
    std::string base_explanation;
    std::string anomaly_explanation;
    std::string combined_explanation;
    std::optional<std::string> rewritten_explanation;
    gen::BaseSeriesSpec base_spec;
    anomaly::AnomalyPlan plan;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const gen::SeasonalitySpec& s);
nlohmann::json to_json(const gen::BaseSeriesSpec& s);
nlohmann::json to_json(const anomaly::Insertion& ins);
nlohmann::json to_json(const anomaly::AnomalyPlan& plan);
nlohmann::json to_json(const Sample& s);

gen::SeasonalitySpec seasonality_from_json(const nlohmann::json& j);
gen::BaseSeriesSpec base_spec_from_json(const nlohmann::json& j);
anomaly::Insertion insertion_from_json(const nlohmann::json& j);
anomaly::AnomalyPlan plan_from_json(const nlohmann::json& j);
Sample sample_from_json(const nlohmann::json& j);

/// Renders `base_spec`, applies `plan` and writes the explanations.
Sample make_sample(const gen::BaseSeriesSpec& base_spec, const anomaly::AnomalyPlan& plan,
                   std::uint64_t seed);

/// Draws a base of `length` and a plan from `seed`. Empty `categories` means
/// 1-3 random categories; `no_anomaly` skips the plan.
Sample generate_sample(std::size_t length, std::uint64_t seed,
                       const std::vector<anomaly::Category>& categories = {},
                       bool no_anomaly = false);

struct Manifest {
    std::string kind;
    int format_version = kFormatVersion;
    std::uint64_t master_seed = 0;
    std::size_t sample_count = 0;
    std::vector<std::size_t> lengths;
    /// Per-file type histogram, or overall counts for instruction datasets.
    std::map<std::string, std::map<std::string, std::size_t>> quotas;
    std::vector<std::string> files;
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

/// Name of the single category of an eval sample, or kNormalType.
std::string sample_category(const Sample& s);

struct EvalDataset {
    /// Keyed by length, each holding 20 samples per category in category order.
    std::map<std::size_t, std::vector<Sample>> samples;
    Manifest manifest;
};

/// Seeds are derived from (master, length, index), so every sample is
/// independent of the others.
EvalDataset build_eval_dataset(std::uint64_t master_seed, int jobs = 1);

/// Writes eval_<length>.jsonl files plus manifest.json into `dir`.
Manifest write_eval_dataset(const EvalDataset& dataset, const std::filesystem::path& dir);

struct InstructionOptions {
    std::size_t n = 1000;
    std::uint64_t master_seed = 0;
    bool allow_no_anomaly = true;
    /// Every sample anomaly-free.
    bool force_no_anomaly = false;
    double no_anomaly_probability = kNoAnomalyProbability;
    /// Ask an endpoint to paraphrase explanations; unset keeps the templates.
    std::optional<llm::LlmConfig> rewrite;
    int jobs = 1;
};

struct InstructionRecord {
    prompt::InstructionSample sample;
    std::size_t length = 0;
    std::optional<std::string> warning;
};

std::vector<InstructionRecord> build_instruction_dataset(const InstructionOptions& options);

nlohmann::json to_json(const prompt::InstructionSample& s);
prompt::InstructionSample instruction_from_json(const nlohmann::json& j);

struct BenchmarkSeries {
    std::vector<double> values;
    std::vector<int> labels;
    std::string source;
};

/// Two-column CSV "value,label" with label in {0, 1}; a header line is
/// allowed first. Throws ParseError naming the line.
BenchmarkSeries load_benchmark_series(const std::filesystem::path& path);
BenchmarkSeries parse_benchmark_csv(std::string_view text, const std::string& source = "");

struct Segment {
    std::vector<double> values;
    std::vector<int> labels;
    std::string source;
    std::size_t offset = 0;
};

inline std::size_t segment_length_for(std::size_t median_window) { return 4 * median_window; }

/// Consecutive non-overlapping slices of 4 * median_window points; the tail
/// is dropped. A series shorter than one slice yields nothing and appends a
/// warning.
std::vector<Segment> segment_series(const std::vector<double>& values,
                                    const std::vector<int>& labels, std::size_t median_window,
                                    const std::string& source = "",
                                    std::vector<std::string>* warnings = nullptr);

/// Median of the FFT period estimates of the member series.
std::size_t dataset_median_window(const std::vector<std::vector<double>>& series);

/// The k segments with the largest standard deviation, highest first.
std::vector<Segment> select_top_variability(std::vector<Segment> segments,
                                            std::size_t k = kBenchmarkTopK);

nlohmann::json to_json(const Segment& s);

// File helpers.

/// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Parses each non-empty line. Throws ParseError naming the line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<nlohmann::json>& rows);

} // namespace tsad::data
