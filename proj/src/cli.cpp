#include "tsad/cli.hpp"

#include "tsad/datasets.hpp"
#include "tsad/detectors.hpp"
#include "tsad/llm.hpp"
#include "tsad/metrics.hpp"
#include "tsad/mock_server.hpp"
#include "tsad/parallel.hpp"
#include "tsad/prompts.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <system_error>

namespace tsad::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string env_name(std::string name) {
    for (char& c : name) {
        c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return "TSAD_" + name;
}

/// key = value lines; "[section]" headers prefix later keys with "section.".
std::map<std::string, std::string> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::system_error(errno, std::generic_category(),
                                "cannot open config file " + path.string());
    }
    std::map<std::string, std::string> out;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) {
            return std::string();
        }
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw data::ParseError(path.string() + ": line " + std::to_string(line_no) +
                                   ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

void attach_env(CLI::App* app) {
    for (CLI::Option* opt : app->get_options()) {
        const auto& longs = opt->get_lnames();
        if (longs.empty() || longs.front() == "help" || longs.front() == "config") {
            continue;
        }
        opt->envname(env_name(longs.front()));
    }
}

void apply_config(CLI::App* app, const std::map<std::string, std::string>& config) {
    for (CLI::Option* opt : app->get_options()) {
        const auto& longs = opt->get_lnames();
        if (longs.empty() || opt->count() > 0) {
            continue;
        }
        const std::string& key = longs.front();
        auto it = config.find(app->get_name() + "." + key);
        if (it == config.end()) {
            it = config.find(key);
        }
        if (it == config.end()) {
            continue;
        }
        opt->add_result(it->second);
        opt->run_callback();
    }
}

void check_readable(const std::string& path, const char* what) {
    if (path.empty()) {
        throw UsageError(std::string("missing ") + what);
    }
    if (!fs::is_regular_file(path)) {
        throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory),
                                std::string(what) + " not found: " + path);
    }
}

std::uint64_t need_seed(const std::optional<std::uint64_t>& seed, const char* command) {
    if (!seed) {
        throw UsageError(std::string(command) + " requires --seed");
    }
    return *seed;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        data::write_text_atomic(path, text);
    }
}

struct LlmOptions {
    std::string endpoint;
    std::string model = "gpt-4";
    std::string api_key_env = "LLM_API_KEY";
    std::optional<double> temperature;
    int max_retries = 5;
    double timeout = 60.0;
    int max_concurrent = 4;
};

void add_llm_options(CLI::App* sub, LlmOptions& o) {
    sub->add_option("--endpoint", o.endpoint,
                    "Chat-completions URL, or 'mock' for the built-in local server");
    sub->add_option("--model", o.model, "Model name")->capture_default_str();
    sub->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key")
        ->capture_default_str();
    sub->add_option("--temperature", o.temperature, "Sampling temperature (provider default when unset)");
    sub->add_option("--max-retries", o.max_retries, "Attempts per query")->capture_default_str();
    sub->add_option("--timeout", o.timeout, "Request timeout in seconds")->capture_default_str();
    sub->add_option("--max-concurrent", o.max_concurrent, "Requests in flight")
        ->capture_default_str();
}

/// Resolves "mock" into a running local server.
llm::LlmConfig make_llm_config(const LlmOptions& o,
                               std::unique_ptr<llm::MockChatServer>& mock,
                               llm::MockChatServer::Responder responder) {
    if (o.endpoint.empty()) {
        throw UsageError("missing --endpoint");
    }
    llm::LlmConfig c;
    c.endpoint = o.endpoint;
    c.model = o.model;
    c.api_key_env = o.api_key_env;
    c.temperature = o.temperature;
    c.max_retries = o.max_retries;
    c.timeout_seconds = o.timeout;
    c.max_concurrent_requests = o.max_concurrent;
    if (o.endpoint == "mock") {
        mock = std::make_unique<llm::MockChatServer>(std::move(responder));
        c.endpoint = mock->endpoint();
        c.require_api_key = false;
    }
    llm::validate(c);
    return c;
}

std::vector<data::Sample> load_samples(const std::string& path) {
    check_readable(path, "dataset");
    std::vector<data::Sample> out;
    std::size_t line = 0;
    for (const auto& row : data::read_jsonl(path)) {
        ++line;
        try {
            data::Sample s;
            s.values = row.at("values").get<std::vector<double>>();
            s.labels = row.value("labels", std::vector<int>(s.values.size(), 0));
            if (s.labels.size() != s.values.size()) {
                throw data::ParseError("values and labels differ in length");
            }
            if (row.contains("spec")) {
                s.plan = data::plan_from_json(row.at("spec").at("anomalies"));
            }
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw data::ParseError(path + ": line " + std::to_string(line) + ": " + e.what());
        } catch (const data::ParseError& e) {
            throw data::ParseError(path + ": line " + std::to_string(line) + ": " + e.what());
        }
    }
    if (out.empty()) {
        throw data::ParseError(path + ": no samples");
    }
    return out;
}

// Commands.

struct GenerateArgs {
    std::optional<std::uint64_t> seed;
    std::size_t length = 200;
    std::string type;
    std::string out;
    bool pretty = false;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    const auto seed = need_seed(a.seed, "generate");
    if (a.length < gen::kMinLength) {
        throw UsageError("--length must be at least " + std::to_string(gen::kMinLength));
    }
    std::vector<anomaly::Category> cats;
    bool none = false;
    if (a.type == anomaly::kNormalType) {
        none = true;
    } else if (!a.type.empty()) {
        cats.push_back(anomaly::parse_category(a.type));
    }
    const auto sample = data::generate_sample(a.length, seed, cats, none);
    emit(data::to_json(sample).dump(a.pretty ? 2 : -1) + "\n", a.out, out);
    return kOk;
}

struct BuildEvalArgs {
    std::optional<std::uint64_t> seed;
    std::string out;
    int jobs = 1;
};

int cmd_build_eval(const BuildEvalArgs& a, std::ostream& out) {
    const auto seed = need_seed(a.seed, "build-eval");
    if (a.out.empty()) {
        throw UsageError("build-eval requires --out");
    }
    const auto ds = data::build_eval_dataset(seed, a.jobs);
    const auto manifest = data::write_eval_dataset(ds, a.out);
    out << "wrote " << manifest.sample_count << " samples to " << a.out << "\n";
    return kOk;
}

struct BuildInstructionsArgs {
    std::optional<std::uint64_t> seed;
    std::size_t n = 1000;
    std::string out;
    std::string no_anomaly = "allow";
    bool rewrite = false;
    int jobs = 1;
    LlmOptions llm;
};

int cmd_build_instructions(const BuildInstructionsArgs& a, std::ostream& out, std::ostream& err) {
    data::InstructionOptions opt;
    opt.master_seed = need_seed(a.seed, "build-instructions");
    if (a.out.empty()) {
        throw UsageError("build-instructions requires --out");
    }
    if (a.n < 1) {
        throw UsageError("--n must be at least 1");
    }
    opt.n = a.n;
    opt.jobs = a.jobs;
    if (a.no_anomaly == "allow") {
        opt.allow_no_anomaly = true;
    } else if (a.no_anomaly == "forbid") {
        opt.allow_no_anomaly = false;
    } else if (a.no_anomaly == "force") {
        opt.force_no_anomaly = true;
    } else {
        throw UsageError("--no-anomaly must be allow, forbid or force");
    }
    std::unique_ptr<llm::MockChatServer> mock;
    if (a.rewrite) {
        opt.rewrite = make_llm_config(a.llm, mock, llm::MockChatServer::echo());
        llm::LlmClient probe(*opt.rewrite); // surfaces a missing key before any work
    }
    const auto records = data::build_instruction_dataset(opt);
    std::vector<json> rows;
    rows.reserve(records.size());
    std::size_t warnings = 0;
    for (const auto& r : records) {
        rows.push_back(data::to_json(r.sample));
        warnings += r.warning ? 1 : 0;
    }
    data::write_text_atomic(a.out, data::to_jsonl(rows));

    data::Manifest m;
    m.kind = "instruction";
    m.master_seed = opt.master_seed;
    m.sample_count = records.size();
    m.lengths.assign(std::begin(data::kInstructionLengths), std::end(data::kInstructionLengths));
    auto& quota = m.quotas[fs::path(a.out).filename().string()];
    for (const auto& r : records) {
        ++quota["length_" + std::to_string(r.length)];
        const auto resp = llm::parse_response(r.sample.response);
        ++quota[resp && resp.value->anomaly.empty() ? "no_anomaly" : "with_anomaly"];
    }
    m.files.push_back(fs::path(a.out).filename().string());
    m.extra = {{"no_anomaly", a.no_anomaly}, {"rewrite_warnings", warnings}};
    fs::path manifest_path = a.out;
    manifest_path += ".manifest.json";
    data::write_text_atomic(manifest_path, data::to_json(m).dump(2) + "\n");
    if (warnings) {
        err << "warning: " << warnings << " explanations kept their template text\n";
    }
    out << "wrote " << records.size() << " instruction samples to " << a.out << "\n";
    return kOk;
}

struct BuildBenchmarkArgs {
    std::vector<std::string> inputs;
    std::string out;
    std::size_t top_k = data::kBenchmarkTopK;
    std::optional<std::size_t> median_window;
};

int cmd_build_benchmark(const BuildBenchmarkArgs& a, std::ostream& out, std::ostream& err) {
    if (a.inputs.empty()) {
        throw UsageError("build-benchmark requires at least one --input");
    }
    if (a.out.empty()) {
        throw UsageError("build-benchmark requires --out");
    }
    std::vector<data::BenchmarkSeries> series;
    for (const auto& p : a.inputs) {
        check_readable(p, "input");
        series.push_back(data::load_benchmark_series(p));
    }
    std::size_t window = 0;
    if (a.median_window) {
        window = *a.median_window;
    } else {
        std::vector<std::vector<double>> values;
        for (const auto& s : series) {
            values.push_back(s.values);
        }
        window = data::dataset_median_window(values);
    }
    std::vector<data::Segment> segments;
    std::vector<std::string> warnings;
    for (const auto& s : series) {
        auto part = data::segment_series(s.values, s.labels, window, s.source, &warnings);
        segments.insert(segments.end(), std::make_move_iterator(part.begin()),
                        std::make_move_iterator(part.end()));
    }
    for (const auto& w : warnings) {
        err << "warning: " << w << "\n";
    }
    const std::size_t total = segments.size();
    const auto chosen = data::select_top_variability(std::move(segments), a.top_k);
    std::vector<json> rows;
    for (const auto& s : chosen) {
        rows.push_back(data::to_json(s));
    }
    const fs::path dir = a.out;
    data::write_text_atomic(dir / "benchmark.jsonl", data::to_jsonl(rows));
    data::Manifest m;
    m.kind = "benchmark";
    m.sample_count = chosen.size();
    m.lengths = {data::segment_length_for(window)};
    m.files = {"benchmark.jsonl"};
    m.extra = {{"median_window", window},
               {"segment_length", data::segment_length_for(window)},
               {"candidate_segments", total},
               {"selection", "top segments by standard deviation"},
               {"inputs", a.inputs}};
    data::write_text_atomic(dir / "manifest.json", data::to_json(m).dump(2) + "\n");
    out << "wrote " << chosen.size() << " segments of length " << data::segment_length_for(window)
        << " to " << (dir / "benchmark.jsonl").string() << "\n";
    return kOk;
}

struct DetectArgs {
    std::string dataset;
    std::string detector = "global-zscore";
    std::string window = "auto";
    double lambda = 3.0;
    double train_fraction = 0.5;
    double quantile = 0.99;
    std::string out;
    int jobs = 1;
};

int cmd_detect(const DetectArgs& a, std::ostream& out) {
    detect::DetectorConfig cfg;
    try {
        cfg.kind = detect::parse_detector_kind(a.detector);
    } catch (const std::invalid_argument&) {
        throw UsageError("unknown detector '" + a.detector +
                         "'; valid kinds: global-zscore, local-zscore, matrix-profile, "
                         "moving-average-residual, seasonal-naive-residual");
    }
    if (a.window != "auto") {
        std::size_t pos = 0;
        unsigned long w = 0;
        try {
            w = std::stoul(a.window, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != a.window.size() || pos == 0) {
            throw UsageError("--window must be 'auto' or a positive integer");
        }
        cfg.window = w;
    }
    cfg.lambda = a.lambda;
    cfg.train_fraction = a.train_fraction;
    cfg.discord_quantile = a.quantile;
    detect::validate(cfg);
    const auto samples = load_samples(a.dataset);

    std::vector<json> rows(samples.size());
    parallel_for(samples.size(), a.jobs, [&](std::size_t i) {
        const auto det = detect::run_detector(samples[i].values, cfg);
        json row = {{"index", i},
                    {"length", samples[i].values.size()},
                    {"anomaly", det.indices},
                    {"detector", a.detector},
                    {"degenerate", det.degenerate}};
        row["window"] = det.window_used ? json(*det.window_used) : json(nullptr);
        rows[i] = std::move(row);
    });
    emit(data::to_jsonl(rows), a.out, out);
    return kOk;
}

struct QueryArgs {
    std::string dataset;
    std::string strategy = "direct";
    int shots = -1;
    std::string requirements = "json";
    bool multimodal_base = false;
    int precision = prompt::kDefaultPrecision;
    std::optional<std::uint64_t> seed;
    std::string out;
    int jobs = 1;
    LlmOptions llm;
};

int cmd_query_llm(const QueryArgs& a, std::ostream& out, std::ostream& err) {
    const auto strategy = prompt::parse_strategy(a.strategy);
    const auto mode = prompt::parse_requirements_mode(a.requirements);
    const auto [lo, hi] = prompt::legal_shot_range(strategy);
    const int shots = a.shots < 0 ? lo : a.shots;
    if (shots < lo || shots > hi) {
        throw UsageError("--shots for " + std::string(prompt::to_string(strategy)) + " must lie in " +
                         std::to_string(lo) + "-" + std::to_string(hi));
    }
    if (a.precision < 0 || a.precision > 17) {
        throw UsageError("--precision must lie in 0-17");
    }
    const std::uint64_t seed = shots > 0 ? need_seed(a.seed, "query-llm with shots") : a.seed.value_or(0);
    const auto samples = load_samples(a.dataset);

    std::unique_ptr<llm::MockChatServer> mock;
    const auto config = make_llm_config(a.llm, mock, llm::MockChatServer::zscore());
    const llm::LlmClient client(config);

    std::vector<json> rows(samples.size());
    std::atomic<std::size_t> exhausted{0};
    parallel_for(samples.size(), std::max(a.jobs, 1), [&](std::size_t i) {
        const auto& s = samples[i];
        std::optional<anomaly::Category> target;
        const auto cats = s.plan.categories();
        if (cats.size() == 1) {
            target = cats.front();
        }
        std::vector<prompt::ShotExample> chosen;
        if (shots > 0) {
            Rng rng(derive_seed(seed, i));
            chosen = prompt::select_shot_examples(target, shots, prompt::shot_library(), rng);
        }
        const auto bundle =
            prompt::build_prompt(strategy, mode, s.values, chosen, a.multimodal_base, a.precision);
        const auto result = client.query(bundle.body);
        if (result.defaulted && result.transport_failures == result.attempts) {
            ++exhausted;
        }
        json shot_types = json::array();
        for (const auto& shot : chosen) {
            shot_types.push_back(anomaly::to_string(shot.type));
        }
        rows[i] = {{"index", i},
                   {"length", s.values.size()},
                   {"anomaly", result.anomaly_indices},
                   {"reason", result.reason},
                   {"raw_response", result.raw_response},
                   {"attempts", result.attempts},
                   {"defaulted", result.defaulted},
                   {"transport_failures", result.transport_failures},
                   {"strategy", prompt::to_string(strategy)},
                   {"shots", shot_types}};
    });
    emit(data::to_jsonl(rows), a.out, out);
    if (exhausted > 0) {
        err << "error: endpoint unreachable for " << exhausted.load() << " of " << samples.size()
            << " queries\n";
        return kEndpointExhausted;
    }
    return kOk;
}

struct ScoreArgs {
    std::string predictions;
    std::string dataset;
    std::size_t window = 5;
    std::string out;
    std::string csv;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
    check_readable(a.predictions, "predictions");
    const auto samples = load_samples(a.dataset);
    std::map<std::size_t, std::vector<std::int64_t>> preds;
    std::size_t line = 0;
    for (const auto& row : data::read_jsonl(a.predictions)) {
        ++line;
        try {
            preds[row.at("index").get<std::size_t>()] = row.at("anomaly").get<std::vector<std::int64_t>>();
        } catch (const json::exception& e) {
            throw data::ParseError(a.predictions + ": line " + std::to_string(line) + ": " + e.what());
        }
    }
    std::vector<metrics::ScoredSegment> segs;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto it = preds.find(i);
        if (it == preds.end()) {
            throw data::ParseError(a.predictions + ": no prediction for sample " + std::to_string(i));
        }
        segs.push_back({it->second, metrics::positive_indices(samples[i].labels),
                        samples[i].values.size()});
    }
    const auto report = metrics::score(segs, a.window);
    emit(metrics::report_to_json(report) + "\n", a.out, out);
    if (!a.csv.empty()) {
        data::write_text_atomic(a.csv, metrics::report_to_csv(report));
    }
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic time-series anomaly datasets, baseline detectors, LLM querying and scoring",
                 "tsad"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key = value file with option defaults")
        ->envname("TSAD_CONFIG");

    GenerateArgs gen_args;
    auto* gen_cmd = app.add_subcommand("generate", "Generate one labelled sample with explanations");
    gen_cmd->add_option("--seed", gen_args.seed, "Random seed");
    gen_cmd->add_option("--length", gen_args.length, "Series length")->capture_default_str();
    gen_cmd->add_option("--type", gen_args.type,
                        "global_point, local_point, seasonality, trend, shape or none");
    gen_cmd->add_option("--out", gen_args.out, "Output file (default stdout)");
    gen_cmd->add_flag("--pretty", gen_args.pretty, "Indent the JSON");

    BuildEvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("build-eval", "Build the three evaluation datasets");
    eval_cmd->add_option("--seed", eval_args.seed, "Master seed");
    eval_cmd->add_option("--out", eval_args.out, "Output directory");
    eval_cmd->add_option("--jobs", eval_args.jobs, "Worker threads")->capture_default_str();

    BuildInstructionsArgs ins_args;
    auto* ins_cmd = app.add_subcommand("build-instructions", "Build an instruction-tuning JSONL");
    ins_cmd->add_option("--seed", ins_args.seed, "Master seed");
    ins_cmd->add_option("--n", ins_args.n, "Number of samples")->capture_default_str();
    ins_cmd->add_option("--out", ins_args.out, "Output JSONL file");
    ins_cmd->add_option("--no-anomaly", ins_args.no_anomaly,
                        "Anomaly-free samples: allow, forbid or force")->capture_default_str();
    ins_cmd->add_flag("--rewrite", ins_args.rewrite, "Paraphrase explanations through --endpoint");
    ins_cmd->add_option("--jobs", ins_args.jobs, "Worker threads")->capture_default_str();
    add_llm_options(ins_cmd, ins_args.llm);

    BuildBenchmarkArgs bench_args;
    auto* bench_cmd = app.add_subcommand("build-benchmark", "Segment labelled CSV series");
    bench_cmd->add_option("--input", bench_args.inputs, "value,label CSV files");
    bench_cmd->add_option("--out", bench_args.out, "Output directory");
    bench_cmd->add_option("--top-k", bench_args.top_k, "Segments kept")->capture_default_str();
    bench_cmd->add_option("--median-window", bench_args.median_window,
                          "Override the FFT median window");

    DetectArgs det_args;
    auto* det_cmd = app.add_subcommand("detect", "Run a baseline detector over a dataset");
    det_cmd->add_option("--dataset", det_args.dataset, "Dataset JSONL");
    det_cmd->add_option("--detector", det_args.detector,
                        "global-zscore, local-zscore, matrix-profile, moving-average-residual, "
                        "seasonal-naive-residual")->capture_default_str();
    det_cmd->add_option("--window", det_args.window, "'auto' or a positive integer")
        ->capture_default_str();
    det_cmd->add_option("--lambda", det_args.lambda, "Threshold in standard deviations")
        ->capture_default_str();
    det_cmd->add_option("--train-fraction", det_args.train_fraction, "Training prefix share")
        ->capture_default_str();
    det_cmd->add_option("--quantile", det_args.quantile, "Discord quantile")->capture_default_str();
    det_cmd->add_option("--out", det_args.out, "Predictions JSONL (default stdout)");
    det_cmd->add_option("--jobs", det_args.jobs, "Worker threads")->capture_default_str();

    QueryArgs q_args;
    auto* q_cmd = app.add_subcommand("query-llm", "Ask a chat endpoint to label a dataset");
    q_cmd->add_option("--dataset", q_args.dataset, "Dataset JSONL");
    q_cmd->add_option("--strategy", q_args.strategy,
                      "direct, multimodal, in-context or chain-of-thought")->capture_default_str();
    q_cmd->add_option("--shots", q_args.shots, "Worked examples (in-context 1-5, chain-of-thought 0-5)");
    q_cmd->add_option("--requirements", q_args.requirements, "json or trial")->capture_default_str();
    q_cmd->add_flag("--multimodal-base", q_args.multimodal_base,
                    "Lead in-context and chain-of-thought prompts with the visual instruction");
    q_cmd->add_option("--precision", q_args.precision, "Decimal places for values")
        ->capture_default_str();
    q_cmd->add_option("--seed", q_args.seed, "Seed for shot selection");
    q_cmd->add_option("--out", q_args.out, "Predictions JSONL (default stdout)");
    q_cmd->add_option("--jobs", q_args.jobs, "Worker threads")->capture_default_str();
    add_llm_options(q_cmd, q_args.llm);

    ScoreArgs s_args;
    auto* s_cmd = app.add_subcommand("score", "Score predictions against dataset labels");
    s_cmd->add_option("--predictions", s_args.predictions, "Predictions JSONL");
    s_cmd->add_option("--dataset", s_args.dataset, "Dataset JSONL");
    s_cmd->add_option("--window", s_args.window, "Range-F window W")->capture_default_str();
    s_cmd->add_option("--out", s_args.out, "Report JSON (default stdout)");
    s_cmd->add_option("--csv", s_args.csv, "Also write the per-segment CSV here");

    for (auto* sub : app.get_subcommands({})) {
        attach_env(sub);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::ostringstream msg;
        app.exit(e, msg, msg);
        err << msg.str();
        return e.get_exit_code() == 0 ? kOk : kUsage;
    }

    try {
        CLI::App* selected = app.get_subcommands().front();
        if (!config_path.empty()) {
            apply_config(selected, read_config(config_path));
        }
        if (selected == gen_cmd) return cmd_generate(gen_args, out);
        if (selected == eval_cmd) return cmd_build_eval(eval_args, out);
        if (selected == ins_cmd) return cmd_build_instructions(ins_args, out, err);
        if (selected == bench_cmd) return cmd_build_benchmark(bench_args, out, err);
        if (selected == det_cmd) return cmd_detect(det_args, out);
        if (selected == q_cmd) return cmd_query_llm(q_args, out, err);
        if (selected == s_cmd) return cmd_score(s_args, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const llm::ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kUsage;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const data::ParseError& e) {
        err << "input error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}

} // namespace tsad::cli
