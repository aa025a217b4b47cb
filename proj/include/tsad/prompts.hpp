#pragma once

#include "tsad/anomalies.hpp"
#include "tsad/explain.hpp"
#include "tsad/rng.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tsad::prompt {

enum class Strategy { Direct, Multimodal, InContext, ChainOfThought };
enum class RequirementsMode { Trial, Json };

std::string_view to_string(Strategy s);
std::string_view to_string(RequirementsMode m);
/// Accepts direct, multimodal, in-context, chain-of-thought; underscores may
/// stand in for hyphens.
Strategy parse_strategy(std::string_view name);
/// Accepts trial, json.
RequirementsMode parse_requirements_mode(std::string_view name);

inline constexpr int kDefaultPrecision = 4;

/// Inclusive legal shot counts: direct/multimodal {0}, in-context 1-5,
/// chain-of-thought 0-5.
std::pair<int, int> legal_shot_range(Strategy s);

/// "1.0, 2.0, 5.0" for ({1, 2, 5}, 1). Throws on empty or non-finite input.
std::string serialize_values(const std::vector<double>& values, int precision = kDefaultPrecision);
/// Inverse of serialize_values; also accepts surrounding brackets.
std::vector<double> parse_values(std::string_view text);
/// Bracketed form embedded in prompts: "[1.0, 2.0, 5.0]".
std::string series_text(const std::vector<double>& values, int precision = kDefaultPrecision);

struct ShotExample {
    anomaly::Category type = anomaly::Category::GlobalPoint;
    std::string characteristics;
    std::vector<double> values;
    std::vector<std::size_t> anomaly_indices;
    std::string explanation;
};

/// Display name used in prompts, e.g. "global point anomalies".
std::string type_phrase(anomaly::Category c);

/// Five short hand-built series, one per anomaly category.
const std::vector<ShotExample>& shot_library();

/// `n` shots of mutually distinct types, none equal to `target`. Throws
/// std::invalid_argument when the library has too few other types.
std::vector<ShotExample> select_shot_examples(std::optional<anomaly::Category> target, int n,
                                              const std::vector<ShotExample>& library, Rng& rng);

/// `series` is the already formatted value text. `multimodal_base` picks the
/// visual instruction as the lead sentence for in-context and chain-of-thought.
std::string build_instruction(Strategy strategy, const std::string& series,
                              const std::vector<ShotExample>& shots, bool multimodal_base = false);

std::string build_requirements(RequirementsMode mode);

struct PromptBundle {
    Strategy strategy = Strategy::Direct;
    int shots = 0;
    RequirementsMode mode = RequirementsMode::Json;
    bool multimodal_base = false;
    std::string body;
};

/// Instruction, a blank line, then requirements.
PromptBundle build_prompt(Strategy strategy, RequirementsMode mode,
                          const std::vector<double>& values,
                          const std::vector<ShotExample>& shots, bool multimodal_base = false,
                          int precision = kDefaultPrecision);

inline constexpr const char* kFinetuneInstruction =
    "Given a time series with values in the Time Series Values field, consider to identify any "
    "potential anomalies.";

struct InstructionSample {
    std::string instruction;
    std::string values_text;
    std::string requirements;
    /// {"anomaly": [...], "reason": "..."}
    std::string response;

    /// The four labelled fields joined into one training text.
    std::string text() const;
};

/// Response anomaly list mirrors the 1-labels; reason is the rewritten text
/// when present, else the combined text; an anomaly-free series answers with
/// the no-anomaly sentence alone.
InstructionSample build_finetune_sample(const anomaly::LabeledSeries& labeled,
                                        const explain::ExplanationBundle& bundle,
                                        int precision = kDefaultPrecision);

} // namespace tsad::prompt
