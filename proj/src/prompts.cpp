#include "tsad/prompts.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace tsad::prompt {

namespace {

using anomaly::Category;

constexpr const char* kGeneralLead = "Given a time series with values ";
constexpr const char* kGeneralTail = ", consider to identify any potential anomalies.";
constexpr const char* kMultimodalTail =
    ", please think about the visual representation of this series and evaluate it to identify "
    "any anomalies. This assessment should consider both the numerical data and the visual "
    "information.";

constexpr const char* kInContextHeader =
    "Generally, anomalies in time series can be either point-based anomalies or context-aware "
    "anomalies. For example,";

constexpr const char* kKnowledge =
    "Here are some basic knowledge about the time series anomalies:\n"
    "Generally, anomalies in time series can be either point-based anomalies or context-aware "
    "anomalies, where point-based anomalies are points have significant larger or lower values "
    "than other points, context-aware anomalies could be shifts in trend, or changing in base "
    "patterns.";

constexpr const char* kSteps =
    "Think to solve the problem step by step.\n\n"
    "First, try identify whether there are anomalies in the input.\n\n"
    "Second, if anomalies are identified, try to get it's index according to it's position in "
    "the list.\n\n"
    "Third, explain why those points should be considered as anomalies.";

constexpr const char* kTrialRequirements =
    "If anomalies are present, please indicate: 1) The presence of anomaly points in this time "
    "series. 2) The indices of these anomaly points, and 3) The reasoning behind these points "
    "being considered anomalies.";

constexpr const char* kJsonRequirements =
    "Please consider answering the following questions according to your observation.\n"
    "First, please try to identify the potential anomalies, and provide the list of the indexes "
    "of anomalies, if no anomalies, please return [].\n"
    "Second, if there are anomalies in the time series, please provide a short explanation of "
    "the anomalies.\n\n"
    "Summarize the answers into two keys:\n\n"
    "- anomaly: a list of indexes\n\n"
    "- reason: a string of explanation\n\n"
    "And format the output as JSON with the two keys.\n\n"
    "Required: return the JSON only without other information.";

std::string without_final_period(std::string s) {
    if (!s.empty() && s.back() == '.') {
        s.pop_back();
    }
    return s;
}

std::vector<double> triangle(std::size_t length) {
    static constexpr double cycle[] = {1, 2, 3, 4, 5, 4, 3, 2};
    std::vector<double> v(length);
    for (std::size_t t = 0; t < length; ++t) {
        v[t] = cycle[t % 8];
    }
    return v;
}

std::vector<ShotExample> make_library() {
    std::vector<ShotExample> lib;

    ShotExample global;
    global.type = Category::GlobalPoint;
    global.characteristics =
        "Global point anomalies are single points whose values are far larger or smaller than "
        "the rest of the time series.";
    global.values = {1, 2, 1, 1, 2, 1, 1, 2, 1, 1, 2, 5, 1, 2, 1, 1, 2, 1, 1, 2};
    global.anomaly_indices = {11};
    global.explanation =
        "The value 5 at index 11 is much larger than every other value, which stay between 1 "
        "and 2.";
    lib.push_back(global);

    ShotExample local;
    local.type = Category::LocalPoint;
    local.characteristics =
        "Local point anomalies are single points that deviate strongly from their neighbouring "
        "values, even though the value may look normal for the whole series.";
    local.values = triangle(24);
    local.values[13] = 1;
    local.anomaly_indices = {13};
    local.explanation =
        "The series rises and falls smoothly between 1 and 5, but the value at index 13 drops to "
        "1 while its neighbours are 5 and 3.";
    lib.push_back(local);

    ShotExample seasonal;
    seasonal.type = Category::Seasonality;
    seasonal.characteristics =
        "Seasonality anomalies are segments where the periodic pattern changes its period or "
        "its amplitude.";
    seasonal.values = triangle(32);
    {
        static constexpr double fast[] = {1, 3, 5, 3, 1, 3, 5, 3};
        for (std::size_t k = 0; k < 8; ++k) {
            seasonal.values[16 + k] = fast[k];
        }
    }
    for (std::size_t t = 16; t < 24; ++t) {
        seasonal.anomaly_indices.push_back(t);
    }
    seasonal.explanation =
        "The series repeats every 8 points, but between indexes 16 and 23 the period shortens to "
        "4 points.";
    lib.push_back(seasonal);

    ShotExample trend;
    trend.type = Category::Trend;
    trend.characteristics =
        "Trend anomalies are shifts in the level of the series, either temporary or permanent.";
    {
        static constexpr double cycle[] = {1, 2, 3, 2};
        for (std::size_t t = 0; t < 20; ++t) {
            trend.values.push_back(cycle[t % 4] + (t >= 9 && t <= 11 ? 5.0 : 0.0));
        }
    }
    trend.anomaly_indices = {9, 10, 11};
    trend.explanation =
        "The values jump up by 5 between indexes 9 and 11 and return to the original level after "
        "index 11.";
    lib.push_back(trend);

    ShotExample shape;
    shape.type = Category::Shape;
    shape.characteristics =
        "Shape anomalies are segments where the base pattern of the series is replaced by a "
        "different pattern.";
    shape.values = triangle(24);
    for (std::size_t t = 16; t < 20; ++t) {
        shape.values[t] = 3;
        shape.anomaly_indices.push_back(t);
    }
    shape.explanation =
        "The series follows a triangular wave, but between indexes 16 and 19 it flattens to a "
        "constant value of 3.";
    lib.push_back(shape);

    return lib;
}

std::string lead_instruction(const std::string& series, bool multimodal) {
    return kGeneralLead + series + (multimodal ? kMultimodalTail : kGeneralTail);
}

std::string shot_series(const ShotExample& shot) { return series_text(shot.values, 0); }

} // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::Direct: return "direct";
    case Strategy::Multimodal: return "multimodal";
    case Strategy::InContext: return "in-context";
    case Strategy::ChainOfThought: return "chain-of-thought";
    }
    return "direct";
}

std::string_view to_string(RequirementsMode m) {
    return m == RequirementsMode::Trial ? "trial" : "json";
}

Strategy parse_strategy(std::string_view name) {
    std::string norm(name);
    std::replace(norm.begin(), norm.end(), '_', '-');
    for (auto s : {Strategy::Direct, Strategy::Multimodal, Strategy::InContext,
                   Strategy::ChainOfThought}) {
        if (norm == to_string(s)) {
            return s;
        }
    }
    throw std::invalid_argument("unknown prompt strategy: " + std::string(name));
}

RequirementsMode parse_requirements_mode(std::string_view name) {
    if (name == "trial") {
        return RequirementsMode::Trial;
    }
    if (name == "json") {
        return RequirementsMode::Json;
    }
    throw std::invalid_argument("unknown requirements mode: " + std::string(name));
}

std::pair<int, int> legal_shot_range(Strategy s) {
    switch (s) {
    case Strategy::InContext: return {1, 5};
    case Strategy::ChainOfThought: return {0, 5};
    case Strategy::Direct:
    case Strategy::Multimodal: break;
    }
    return {0, 0};
}

std::string serialize_values(const std::vector<double>& values, int precision) {
    if (values.empty()) {
        throw std::invalid_argument("cannot serialize an empty series");
    }
    if (precision < 0 || precision > 17) {
        throw std::invalid_argument("precision must lie in [0, 17]");
    }
    std::string out;
    out.reserve(values.size() * static_cast<std::size_t>(precision + 6));
    char buf[64];
    for (std::size_t t = 0; t < values.size(); ++t) {
        if (!std::isfinite(values[t])) {
            throw std::invalid_argument("non-finite value at index " + std::to_string(t));
        }
        if (t) {
            out += ", ";
        }
        std::snprintf(buf, sizeof buf, "%.*f", precision, values[t]);
        out += buf;
    }
    return out;
}

std::vector<double> parse_values(std::string_view text) {
    std::string s(text);
    std::vector<double> out;
    const char* p = s.c_str();
    while (*p) {
        if (*p == '[' || *p == ']' || *p == ',' || *p == ' ' || *p == '\n' || *p == '\t') {
            ++p;
            continue;
        }
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p) {
            throw std::invalid_argument("malformed value list near: " + std::string(p).substr(0, 20));
        }
        out.push_back(v);
        p = end;
    }
    return out;
}

std::string series_text(const std::vector<double>& values, int precision) {
    return "[" + serialize_values(values, precision) + "]";
}

std::string type_phrase(Category c) {
    switch (c) {
    case Category::GlobalPoint: return "global point anomalies";
    case Category::LocalPoint: return "local point anomalies";
    case Category::Seasonality: return "seasonality anomalies";
    case Category::Trend: return "trend anomalies";
    case Category::Shape: return "shape anomalies";
    }
    return {};
}

const std::vector<ShotExample>& shot_library() {
    static const std::vector<ShotExample> lib = make_library();
    return lib;
}

std::vector<ShotExample> select_shot_examples(std::optional<Category> target, int n,
                                              const std::vector<ShotExample>& library, Rng& rng) {
    if (n < 0) {
        throw std::invalid_argument("shot count must be non-negative");
    }
    std::map<Category, std::vector<const ShotExample*>> by_type;
    for (const auto& shot : library) {
        if (!target || shot.type != *target) {
            by_type[shot.type].push_back(&shot);
        }
    }
    if (static_cast<int>(by_type.size()) < n) {
        throw std::invalid_argument("shot library has " + std::to_string(by_type.size()) +
                                    " usable types, " + std::to_string(n) + " requested");
    }
    std::vector<Category> types;
    for (const auto& [type, _] : by_type) {
        types.push_back(type);
    }
    // Fisher-Yates with our own index draws keeps the order stable across
    // standard library implementations.
    for (std::size_t i = types.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
        std::swap(types[i - 1], types[j]);
    }
    std::vector<ShotExample> out;
    for (int k = 0; k < n; ++k) {
        const auto& pool = by_type[types[static_cast<std::size_t>(k)]];
        const auto pick = static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(pool.size() - 1)));
        out.push_back(*pool[pick]);
    }
    return out;
}

std::string build_instruction(Strategy strategy, const std::string& series,
                              const std::vector<ShotExample>& shots, bool multimodal_base) {
    const auto [lo, hi] = legal_shot_range(strategy);
    const int n = static_cast<int>(shots.size());
    if (n < lo || n > hi) {
        throw std::invalid_argument("strategy " + std::string(to_string(strategy)) + " takes " +
                                    std::to_string(lo) + "-" + std::to_string(hi) + " shots, got " +
                                    std::to_string(n));
    }
    switch (strategy) {
    case Strategy::Direct:
        return lead_instruction(series, false);
    case Strategy::Multimodal:
        return lead_instruction(series, true);
    case Strategy::InContext: {
        std::string text = lead_instruction(series, multimodal_base) + "\n\n" + kInContextHeader;
        for (int i = 0; i < n; ++i) {
            const auto& shot = shots[static_cast<std::size_t>(i)];
            text += "\n\nExample " + std::to_string(i + 1) + ": " + type_phrase(shot.type) +
                    "\nCharacteristics: " + shot.characteristics +
                    "\nTime Series: " + shot_series(shot) +
                    "\nExplanation: " + shot.explanation;
        }
        return text;
    }
    case Strategy::ChainOfThought: {
        std::string text = lead_instruction(series, multimodal_base) + "\n\n" + kKnowledge +
                           "\n\n" + kSteps;
        for (int i = 0; i < n; ++i) {
            const auto& shot = shots[static_cast<std::size_t>(i)];
            text += "\n\nExample " + std::to_string(i + 1) + ": For time series " +
                    shot_series(shot) + "\nFirst, there are " + type_phrase(shot.type) +
                    " in this time series.\nSecond, the values at positions " +
                    explain::format_index_list(shot.anomaly_indices) +
                    " are anomalies.\nThe reason is " + without_final_period(shot.explanation) +
                    ".";
        }
        return text;
    }
    }
    return {};
}

std::string build_requirements(RequirementsMode mode) {
    return mode == RequirementsMode::Trial ? kTrialRequirements : kJsonRequirements;
}

PromptBundle build_prompt(Strategy strategy, RequirementsMode mode,
                          const std::vector<double>& values,
                          const std::vector<ShotExample>& shots, bool multimodal_base,
                          int precision) {
    PromptBundle bundle;
    bundle.strategy = strategy;
    bundle.mode = mode;
    bundle.shots = static_cast<int>(shots.size());
    bundle.multimodal_base = multimodal_base;
    bundle.body = build_instruction(strategy, series_text(values, precision), shots,
                                    multimodal_base) +
                  "\n\n" + build_requirements(mode);
    return bundle;
}

std::string InstructionSample::text() const {
    return "Instruction: " + instruction + "\nTime Series Values: " + values_text +
           "\nRequirements: " + requirements + "\nResponse: " + response;
}

InstructionSample build_finetune_sample(const anomaly::LabeledSeries& labeled,
                                        const explain::ExplanationBundle& bundle, int precision) {
    InstructionSample sample;
    sample.instruction = kFinetuneInstruction;
    sample.values_text = series_text(labeled.values, precision);
    sample.requirements = build_requirements(RequirementsMode::Json);
    nlohmann::json anomaly = nlohmann::json::array();
    for (std::size_t t = 0; t < labeled.labels.size(); ++t) {
        if (labeled.labels[t] != 0) {
            anomaly.push_back(t);
        }
    }
    std::string reason = bundle.rewritten_text ? *bundle.rewritten_text : bundle.combined_text;
    if (anomaly.empty() && !bundle.rewritten_text) {
        reason = explain::kNoAnomalyText;
    }
    nlohmann::json response = {{"anomaly", anomaly}, {"reason", reason}};
    sample.response = response.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    return sample;
}

} // namespace tsad::prompt
