#include "tsad/datasets.hpp"

#include "tsad/detectors.hpp"
#include "tsad/parallel.hpp"
#include "tsad/stats.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

namespace tsad::data {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

gen::TrendSpec trend_from_json(const json& j) {
    gen::TrendSpec t;
    t.kind = gen::parse_trend_kind(j.at("kind").get<std::string>());
    t.slope = j.value("slope", 0.0);
    t.degree = j.value("degree", 0);
    t.coefficients = j.value("coefficients", std::vector<double>{});
    t.shift = j.value("shift", 0.0);
    t.amplitude = j.value("amplitude", 1.0);
    return t;
}

json trend_to_json(const gen::TrendSpec& t) {
    return {{"kind", gen::to_string(t.kind)}, {"slope", t.slope},
            {"degree", t.degree},             {"coefficients", t.coefficients},
            {"shift", t.shift},               {"amplitude", t.amplitude}};
}

std::uint64_t attempt_seed(std::uint64_t master, std::size_t length, std::size_t index,
                           int attempt) {
    const std::uint64_t s = derive_seed(master, length, index);
    return attempt == 0 ? s : derive_seed(s, static_cast<std::uint64_t>(attempt));
}

} // namespace

json to_json(const gen::SeasonalitySpec& s) {
    return {{"kind", gen::to_string(s.kind)},
            {"amplitude", s.amplitude},
            {"phase", s.phase},
            {"frequencies", s.frequencies},
            {"coefficients", s.coefficients}};
}

gen::SeasonalitySpec seasonality_from_json(const json& j) {
    gen::SeasonalitySpec s;
    s.kind = gen::parse_seasonality_kind(j.at("kind").get<std::string>());
    s.amplitude = j.value("amplitude", 0.0);
    s.phase = j.value("phase", 0.0);
    s.frequencies = j.value("frequencies", std::vector<double>{});
    s.coefficients = j.value("coefficients", std::vector<double>{});
    return s;
}

json to_json(const gen::BaseSeriesSpec& s) {
    return {{"length", s.length},
            {"seed", s.seed},
            {"seasonality", to_json(s.seasonality)},
            {"trend", trend_to_json(s.trend)},
            {"noise", {{"amplitude", s.noise.amplitude}}}};
}

gen::BaseSeriesSpec base_spec_from_json(const json& j) {
    gen::BaseSeriesSpec s;
    s.length = j.at("length").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.seasonality = seasonality_from_json(j.at("seasonality"));
    s.trend = trend_from_json(j.at("trend"));
    s.noise.amplitude = j.at("noise").at("amplitude").get<double>();
    gen::validate(s);
    return s;
}

json to_json(const anomaly::Insertion& ins) {
    json j = {{"kind", anomaly::to_string(ins.kind)},
              {"start", ins.start},
              {"end", ins.end},
              {"direction", ins.direction},
              {"magnitude", ins.magnitude},
              {"ratio", ins.ratio},
              {"context", ins.context}};
    if (ins.replacement) {
        j["replacement"] = to_json(*ins.replacement);
    }
    return j;
}

anomaly::Insertion insertion_from_json(const json& j) {
    anomaly::Insertion ins;
    ins.kind = anomaly::parse_kind(j.at("kind").get<std::string>());
    ins.start = j.at("start").get<std::size_t>();
    ins.end = j.at("end").get<std::size_t>();
    ins.direction = j.value("direction", 1);
    ins.magnitude = j.value("magnitude", 0.0);
    ins.ratio = j.value("ratio", 1.0);
    ins.context = j.value("context", std::size_t{0});
    if (j.contains("replacement") && !j.at("replacement").is_null()) {
        ins.replacement = seasonality_from_json(j.at("replacement"));
    }
    return ins;
}

json to_json(const anomaly::AnomalyPlan& plan) {
    json arr = json::array();
    for (const auto& ins : plan.insertions) {
        arr.push_back(to_json(ins));
    }
    return arr;
}

anomaly::AnomalyPlan plan_from_json(const json& j) {
    anomaly::AnomalyPlan plan;
    for (const auto& e : j) {
        plan.insertions.push_back(insertion_from_json(e));
    }
    return plan;
}

json to_json(const Sample& s) {
    json j;
    j["values"] = s.values;
    j["labels"] = s.labels;
    j["types"] = s.types;
    j["base_explanation"] = s.base_explanation;
    j["anomaly_explanation"] = s.anomaly_explanation;
    j["combined_explanation"] = s.combined_explanation;
    if (s.rewritten_explanation) {
        j["rewritten_explanation"] = *s.rewritten_explanation;
    }
    j["spec"] = {{"base", to_json(s.base_spec)}, {"anomalies", to_json(s.plan)}};
    j["seed"] = s.seed;
    return j;
}

Sample sample_from_json(const json& j) {
    Sample s;
    s.values = j.at("values").get<std::vector<double>>();
    s.labels = j.at("labels").get<std::vector<int>>();
    s.types = j.value("types", std::vector<std::string>{});
    s.base_explanation = j.value("base_explanation", "");
    s.anomaly_explanation = j.value("anomaly_explanation", "");
    s.combined_explanation = j.value("combined_explanation", "");
    if (j.contains("rewritten_explanation") && j.at("rewritten_explanation").is_string()) {
        s.rewritten_explanation = j.at("rewritten_explanation").get<std::string>();
    }
    if (j.contains("spec")) {
        s.base_spec = base_spec_from_json(j.at("spec").at("base"));
        s.plan = plan_from_json(j.at("spec").at("anomalies"));
    }
    s.seed = j.value("seed", std::uint64_t{0});
    if (s.values.size() != s.labels.size()) {
        throw ParseError("sample has " + std::to_string(s.values.size()) + " values but " +
                         std::to_string(s.labels.size()) + " labels");
    }
    return s;
}

Sample make_sample(const gen::BaseSeriesSpec& base_spec, const anomaly::AnomalyPlan& plan,
                   std::uint64_t seed) {
    const auto base = gen::compose_series(base_spec);
    const auto labeled = anomaly::apply_plan(base, plan);
    const auto bundle = explain::explain(base_spec, plan);
    Sample s;
    s.values = labeled.values;
    s.labels = labeled.labels;
    s.types = labeled.type_labels;
    s.base_explanation = bundle.base_text;
    s.anomaly_explanation = bundle.anomaly_text;
    s.combined_explanation = bundle.combined_text;
    s.base_spec = base_spec;
    s.plan = plan;
    s.seed = seed;
    return s;
}

Sample generate_sample(std::size_t length, std::uint64_t seed,
                       const std::vector<anomaly::Category>& categories, bool no_anomaly) {
    Rng rng(seed);
    const auto spec = gen::sample_base_spec(rng, length);
    anomaly::AnomalyPlan plan;
    if (!no_anomaly) {
        const auto base = gen::compose_series(spec);
        anomaly::PlanOptions options;
        options.categories = categories;
        plan = anomaly::sample_anomaly_plan(rng, base, options);
    }
    return make_sample(spec, plan, seed);
}

json to_json(const Manifest& m) {
    return {{"kind", m.kind},
            {"format_version", m.format_version},
            {"master_seed", m.master_seed},
            {"sample_count", m.sample_count},
            {"lengths", m.lengths},
            {"quotas", m.quotas},
            {"files", m.files},
            {"extra", m.extra}};
}

Manifest manifest_from_json(const json& j) {
    Manifest m;
    m.kind = j.at("kind").get<std::string>();
    m.format_version = j.at("format_version").get<int>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.sample_count = j.at("sample_count").get<std::size_t>();
    m.lengths = j.value("lengths", std::vector<std::size_t>{});
    m.quotas = j.value("quotas", decltype(m.quotas){});
    m.files = j.value("files", std::vector<std::string>{});
    m.extra = j.value("extra", json::object());
    return m;
}

std::string sample_category(const Sample& s) {
    const auto cats = s.plan.categories();
    if (cats.empty()) {
        return std::string(anomaly::kNormalType);
    }
    return std::string(anomaly::to_string(cats.front()));
}

EvalDataset build_eval_dataset(std::uint64_t master_seed, int jobs) {
    EvalDataset ds;
    ds.manifest.kind = "eval";
    ds.manifest.master_seed = master_seed;
    constexpr std::size_t per_length = kEvalPerType * anomaly::kAllCategories.size();
    for (std::size_t length : kEvalLengths) {
        std::vector<Sample> samples(per_length);
        parallel_for(per_length, jobs, [&](std::size_t index) {
            const auto category = anomaly::kAllCategories[index / kEvalPerType];
            // Re-seed until the plan holds exactly the requested category.
            for (int attempt = 0;; ++attempt) {
                const auto seed = attempt_seed(master_seed, length, index, attempt);
                Sample s = generate_sample(length, seed, {category});
                const auto cats = s.plan.categories();
                if (cats.size() == 1 && cats.front() == category) {
                    samples[index] = std::move(s);
                    return;
                }
                if (attempt >= 100) {
                    throw std::runtime_error("could not place a " +
                                             std::string(anomaly::to_string(category)) +
                                             " anomaly");
                }
            }
        });
        auto& hist = ds.manifest.quotas["eval_" + std::to_string(length) + ".jsonl"];
        for (const auto& s : samples) {
            ++hist[sample_category(s)];
        }
        ds.manifest.lengths.push_back(length);
        ds.manifest.files.push_back("eval_" + std::to_string(length) + ".jsonl");
        ds.manifest.sample_count += samples.size();
        ds.samples[length] = std::move(samples);
    }
    ds.manifest.extra = {{"per_type", kEvalPerType},
                         {"seed_scheme", "derive_seed(master, length, index)"}};
    return ds;
}

Manifest write_eval_dataset(const EvalDataset& dataset, const fs::path& dir) {
    fs::create_directories(dir);
    for (const auto& [length, samples] : dataset.samples) {
        std::vector<json> rows;
        rows.reserve(samples.size());
        for (const auto& s : samples) {
            rows.push_back(to_json(s));
        }
        write_text_atomic(dir / ("eval_" + std::to_string(length) + ".jsonl"), to_jsonl(rows));
    }
    write_text_atomic(dir / "manifest.json", to_json(dataset.manifest).dump(2) + "\n");
    return dataset.manifest;
}

std::vector<InstructionRecord> build_instruction_dataset(const InstructionOptions& options) {
    if (options.n < 1) {
        throw std::invalid_argument("instruction dataset size must be at least 1");
    }
    if (!(options.no_anomaly_probability >= 0.0 && options.no_anomaly_probability <= 1.0)) {
        throw std::invalid_argument("no-anomaly probability must lie in [0, 1]");
    }
    std::vector<InstructionRecord> records(options.n);
    parallel_for(options.n, options.jobs, [&](std::size_t index) {
        const std::uint64_t seed = derive_seed(options.master_seed, index);
        Rng picker(derive_seed(seed, 0xA11CEULL));
        const std::size_t length =
            kInstructionLengths[static_cast<std::size_t>(uniform_int(picker, 0, 2))];
        bool none = options.force_no_anomaly;
        if (!none && options.allow_no_anomaly) {
            none = coin(picker, options.no_anomaly_probability);
        }
        Rng rng(seed);
        const auto spec = gen::sample_base_spec(rng, length);
        const auto base = gen::compose_series(spec);
        anomaly::AnomalyPlan plan;
        if (!none) {
            plan = anomaly::sample_anomaly_plan(rng, base);
        }
        const auto labeled = anomaly::apply_plan(base, plan);
        auto bundle = explain::explain(spec, plan);
        InstructionRecord rec;
        if (options.rewrite) {
            bundle = explain::rewrite_via_llm(std::move(bundle), *options.rewrite);
            rec.warning = bundle.warning;
        }
        rec.sample = prompt::build_finetune_sample(labeled, bundle);
        rec.length = length;
        records[index] = std::move(rec);
    });
    return records;
}

json to_json(const prompt::InstructionSample& s) {
    return {{"instruction", s.instruction},
            {"values", s.values_text},
            {"requirements", s.requirements},
            {"response", s.response},
            {"text", s.text()}};
}

prompt::InstructionSample instruction_from_json(const json& j) {
    prompt::InstructionSample s;
    s.instruction = j.at("instruction").get<std::string>();
    s.values_text = j.at("values").get<std::string>();
    s.requirements = j.at("requirements").get<std::string>();
    s.response = j.at("response").get<std::string>();
    return s;
}

BenchmarkSeries parse_benchmark_csv(std::string_view text, const std::string& source) {
    BenchmarkSeries out;
    out.source = source;
    const std::string where = source.empty() ? "" : source + ": ";
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool first_content = true;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        const std::string line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) {
            if (nl == text.size()) {
                break;
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ParseError(where + "line " + std::to_string(line_no) +
                             ": expected two comma-separated columns");
        }
        const std::string value_text = trim(line.substr(0, comma));
        const std::string label_text = trim(line.substr(comma + 1));
        const auto value = parse_double(value_text);
        if (!value) {
            if (first_content) {
                first_content = false;
                continue; // header
            }
            throw ParseError(where + "line " + std::to_string(line_no) + ": bad value '" +
                             value_text + "'");
        }
        first_content = false;
        if (label_text != "0" && label_text != "1") {
            throw ParseError(where + "line " + std::to_string(line_no) + ": label '" +
                             label_text + "' is not 0 or 1");
        }
        out.values.push_back(*value);
        out.labels.push_back(label_text == "1" ? 1 : 0);
        if (nl == text.size()) {
            break;
        }
    }
    if (out.values.empty()) {
        throw ParseError(where + "no data rows");
    }
    return out;
}

BenchmarkSeries load_benchmark_series(const fs::path& path) {
    return parse_benchmark_csv(read_text(path), path.string());
}

std::vector<Segment> segment_series(const std::vector<double>& values,
                                    const std::vector<int>& labels, std::size_t median_window,
                                    const std::string& source,
                                    std::vector<std::string>* warnings) {
    if (values.size() != labels.size()) {
        throw std::invalid_argument("values and labels differ in length");
    }
    if (median_window < 1) {
        throw std::invalid_argument("median window must be positive");
    }
    const std::size_t len = segment_length_for(median_window);
    std::vector<Segment> out;
    if (values.size() < len) {
        if (warnings) {
            warnings->push_back((source.empty() ? std::string("series") : source) + " has " +
                                std::to_string(values.size()) + " points, fewer than one segment of " +
                                std::to_string(len) + "; skipped");
        }
        return out;
    }
    for (std::size_t off = 0; off + len <= values.size(); off += len) {
        Segment s;
        s.values.assign(values.begin() + static_cast<long>(off),
                        values.begin() + static_cast<long>(off + len));
        s.labels.assign(labels.begin() + static_cast<long>(off),
                        labels.begin() + static_cast<long>(off + len));
        s.source = source;
        s.offset = off;
        out.push_back(std::move(s));
    }
    return out;
}

std::size_t dataset_median_window(const std::vector<std::vector<double>>& series) {
    std::vector<double> periods;
    for (const auto& s : series) {
        if (s.size() >= 8) {
            periods.push_back(static_cast<double>(detect::estimate_period_fft(s).period));
        }
    }
    if (periods.empty()) {
        throw std::invalid_argument("no series long enough to estimate a window");
    }
    return static_cast<std::size_t>(std::llround(stats::median(periods)));
}

std::vector<Segment> select_top_variability(std::vector<Segment> segments, std::size_t k) {
    std::vector<double> sd(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        sd[i] = stats::stddev(segments[i].values);
    }
    std::vector<std::size_t> order(segments.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sd[a] > sd[b]; });
    order.resize(std::min(k, order.size()));
    std::vector<Segment> out;
    out.reserve(order.size());
    for (auto i : order) {
        out.push_back(std::move(segments[i]));
    }
    return out;
}

json to_json(const Segment& s) {
    return {{"values", s.values}, {"labels", s.labels}, {"source", s.source}, {"offset", s.offset}};
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::system_error(errno, std::generic_category(),
                                    "cannot open " + tmp.string() + " for writing");
        }
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) {
            throw std::system_error(errno, std::generic_category(), "write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<json> read_jsonl(const fs::path& path) {
    const std::string text = read_text(path);
    std::vector<json> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            nl = text.size();
        }
        ++line_no;
        const std::string line = trim(std::string_view(text).substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty()) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": invalid JSON");
        }
        rows.push_back(std::move(j));
    }
    return rows;
}

std::string to_jsonl(const std::vector<json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

} // namespace tsad::data
