// Runs the acceptance criteria and prints one line per criterion.

#include "golden.hpp"
#include "oracles.hpp"
#include "prompt_cases.hpp"

#include "tsad/rng.hpp"
#include "tsad/anomalies.hpp"
#include "tsad/datasets.hpp"
#include "tsad/detectors.hpp"
#include "tsad/generator.hpp"
#include "tsad/llm.hpp"
#include "tsad/metrics.hpp"
#include "tsad/mock_server.hpp"
#include "tsad/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include <sys/wait.h>

using namespace tsad;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Outcome generator_statistics() {
    const auto t0 = Clock::now();
    Rng rng(20240101);
    std::array<int, 4> season{};
    std::array<int, 3> trend{};
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto s = gen::sample_base_spec(rng, 360);
        ++season[static_cast<int>(s.seasonality.kind)];
        ++trend[static_cast<int>(s.trend.kind)];
    }
    const double sec = seconds_since(t0);
    const double sf[3] = {season[0] / double(n), season[1] / double(n), season[2] / double(n)};
    const double tf[3] = {trend[0] / double(n), trend[1] / double(n), trend[2] / double(n)};
    const double want_s[3] = {0.25, 0.25, 0.50};
    const double want_t[3] = {0.30, 0.10, 0.60};
    bool ok = season[3] == 0 && sec < 10.0;
    for (int k = 0; k < 3; ++k) {
        ok = ok && std::abs(sf[k] - want_s[k]) <= 0.02 && std::abs(tf[k] - want_t[k]) <= 0.02;
    }
    return {ok, fmt("seasonality (%.3f, %.3f, %.3f)", sf[0], sf[1], sf[2]) +
                    fmt(" trend (%.3f, %.3f, %.3f)", tf[0], tf[1], tf[2]) + fmt(" in %.2fs", sec)};
}

Outcome noise_calibration() {
    bool ok = true;
    std::string detail;
    Rng rng(99);
    for (double amp : {1.0, 7.5, 42.0}) {
        auto spec = gen::sample_base_spec(rng, 10000);
        spec.noise.amplitude = amp;
        const auto s = gen::compose_series(spec);
        std::vector<double> r(spec.length);
        for (std::size_t t = 0; t < spec.length; ++t) {
            r[t] = s.values[t] - s.seasonal[t] - s.trend[t];
        }
        const double mu = oracle::mean(r) / amp;
        const double sd = oracle::pstdev(r) / amp;
        ok = ok && std::abs(mu) < 0.05 && std::abs(sd - 1.0) <= 0.05;
        detail += fmt("amp %.1f: mean/amp %.4f std/amp %.4f; ", amp, mu, sd);
    }
    return {ok, detail};
}

Outcome injection_detectability() {
    std::size_t points = 0, above = 0, found = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const std::size_t length = data::kEvalLengths[seed % 3];
        Rng rng(derive_seed(7001, seed));
        const auto base = gen::compose_series(gen::sample_base_spec(rng, length));
        anomaly::PlanOptions opt;
        opt.categories = {anomaly::Category::GlobalPoint};
        const auto plan = anomaly::sample_anomaly_plan(rng, base, opt);
        const auto series = anomaly::apply_plan(base, plan);
        const double med = stats::median(base.values);
        const double sd = oracle::pstdev(base.values);
        const auto det = detect::detect_global_zscore(series.values, 3.0);
        const std::set<std::size_t> flagged(det.indices.begin(), det.indices.end());
        for (const auto& ins : plan.insertions) {
            ++points;
            if (std::abs(series.values[ins.start] - med) >= 3.0 * sd) ++above;
            if (flagged.count(ins.start)) ++found;
        }
    }
    const double recall = double(found) / double(points);

    const auto eval = data::build_eval_dataset(11);
    std::vector<double> fs;
    for (const auto& [len, samples] : eval.samples) {
        for (const auto& s : samples) {
            if (data::sample_category(s) != anomaly::to_string(anomaly::Category::GlobalPoint)) continue;
            const auto det = detect::detect_global_zscore(s.values, 3.0);
            fs.push_back(metrics::point_prf(det.indices, metrics::positive_indices(s.labels)).f);
        }
    }
    const double f = oracle::mean(fs);
    const bool ok = above == points && recall >= 0.99 && f >= 0.8;
    return {ok, fmt("%.0f/%.0f points beyond 3 sigma(base); pooled recall %.4f (need 0.99); eval split point-F %.4f",
                    double(above), double(points), recall, f)};
}

std::vector<std::size_t> to_vec(const std::set<long>& s) {
    return {s.begin(), s.end()};
}

bool same(const metrics::PRF& a, const oracle::Prf& b) {
    return a.precision == b.p && a.recall == b.r && a.f == b.f;
}

Outcome metric_oracle() {
    std::size_t cases = 0, mismatches = 0;
    for (unsigned pm = 0; pm < 256; ++pm) {
        for (unsigned tm = 0; tm < 256; ++tm) {
            std::set<long> p, t;
            for (long k = 0; k < 8; ++k) {
                if (pm >> k & 1u) p.insert(k);
                if (tm >> k & 1u) t.insert(k);
            }
            const auto point = metrics::point_prf(to_vec(p), to_vec(t));
            if (!same(point, oracle::windowed_prf(p, t, 0))) ++mismatches;
            for (long w : {0L, 1L, 2L, 5L}) {
                const auto r = metrics::range_prf(to_vec(p), to_vec(t), static_cast<std::size_t>(w));
                if (!same(r, oracle::windowed_prf(p, t, w))) ++mismatches;
                if (w == 0 && !(r.precision == point.precision && r.recall == point.recall && r.f == point.f)) {
                    ++mismatches;
                }
                ++cases;
            }
        }
    }
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        std::set<long> p, t;
        const auto np = uniform_int(rng, 0, 20), nt = uniform_int(rng, 0, 20);
        for (long k = 0; k < np; ++k) p.insert(uniform_int(rng, 0, 63));
        for (long k = 0; k < nt; ++k) t.insert(uniform_int(rng, 0, 63));
        const long w = uniform_int(rng, 0, 10);
        const auto point = metrics::point_prf(to_vec(p), to_vec(t));
        const auto r0 = metrics::range_prf(to_vec(p), to_vec(t), 0);
        if (!same(point, oracle::windowed_prf(p, t, 0))) ++mismatches;
        if (!same(metrics::range_prf(to_vec(p), to_vec(t), static_cast<std::size_t>(w)),
                  oracle::windowed_prf(p, t, w))) {
            ++mismatches;
        }
        if (!(r0.precision == point.precision && r0.recall == point.recall && r0.f == point.f)) ++mismatches;
        ++cases;
    }
    return {mismatches == 0, fmt("%.0f cases, %.0f mismatches", double(cases), double(mismatches))};
}

Outcome window_monotonicity() {
    Rng rng(5);
    std::size_t violations = 0;
    for (int i = 0; i < 500; ++i) {
        std::vector<std::size_t> p, t;
        const auto np = uniform_int(rng, 0, 15), nt = uniform_int(rng, 0, 15);
        for (long k = 0; k < np; ++k) p.push_back(static_cast<std::size_t>(uniform_int(rng, 0, 199)));
        for (long k = 0; k < nt; ++k) t.push_back(static_cast<std::size_t>(uniform_int(rng, 0, 199)));
        double prev = -1.0;
        for (std::size_t w : {0, 1, 2, 3, 5, 10}) {
            const double f = metrics::range_prf(p, t, w).f;
            if (f < prev) ++violations;
            prev = f;
        }
    }
    return {violations == 0, fmt("500 pairs, %.0f decreases", double(violations))};
}

Outcome hallucination_protocol() {
    const auto one = metrics::hallucination_stats({{{1200}, 1000}});
    const auto two = metrics::hallucination_stats({{{-1, 300}, 100}, {{5}, 100}, {{400, 401, 402, -9}, 100}});
    const bool ok = one.segment_count == 1 && two.segment_count == 2 && two.mean && two.median &&
                    *two.mean == 3.0 && *two.median == 3.0;
    return {ok, fmt("{1200} vs 1000: %.0f segment; counts 2 and 4: mean %.1f median %.1f",
                    double(one.segment_count), two.mean.value_or(-1), two.median.value_or(-1))};
}

Outcome dataset_quotas() {
    const auto eval = data::build_eval_dataset(3);
    bool ok = eval.samples.size() == 3;
    for (const auto& [len, samples] : eval.samples) {
        std::map<std::string, int> hist;
        for (const auto& s : samples) {
            ok = ok && s.values.size() == len;
            ++hist[data::sample_category(s)];
        }
        ok = ok && samples.size() == 100 && hist.size() == 5;
        for (const auto& [name, count] : hist) ok = ok && count == 20 && name != anomaly::kNormalType;
    }
    data::InstructionOptions opt;
    opt.n = 1000;
    opt.master_seed = 3;
    const auto records = data::build_instruction_dataset(opt);
    std::size_t parsed = 0;
    for (const auto& r : records) {
        const auto line = data::to_json(r.sample).dump();
        const auto back = data::instruction_from_json(nlohmann::json::parse(line));
        if (llm::parse_response(back.response).value) ++parsed;
    }
    ok = ok && records.size() == 1000 && parsed == 1000;
    return {ok, fmt("eval 3 x 100 with 20 per type; %.0f instruction lines, %.0f parse", double(records.size()),
                    double(parsed))};
}

Outcome prompt_goldens(const std::filesystem::path& dir) {
    std::size_t total = 0, matched = 0, leaks = 0;
    for (const auto& c : prompt_cases::all_cases()) {
        ++total;
        const auto path = dir / c.file;
        if (std::filesystem::exists(path) && golden::read(path) == c.body) ++matched;
        if (c.target) {
            for (const auto& s : c.chosen) {
                if (s.type == *c.target) ++leaks;
            }
        }
    }
    Rng rng(8);
    for (int i = 0; i < 2000; ++i) {
        const auto target = anomaly::kAllCategories[static_cast<std::size_t>(uniform_int(rng, 0, 4))];
        const int n = static_cast<int>(uniform_int(rng, 1, 4));
        for (const auto& s : prompt::select_shot_examples(target, n, prompt::shot_library(), rng)) {
            if (s.type == target) ++leaks;
        }
    }
    return {matched == total && leaks == 0,
            fmt("%.0f/%.0f goldens byte-identical; %.0f shots sharing the target type", double(matched),
                double(total), double(leaks))};
}

Outcome llm_protocol() {
    const char* prose = "Nothing stands out to me here.";
    const char* valid = R"({"anomaly": [4], "reason": "spike"})";
    bool ok = true;
    std::string detail;
    for (int fails = 0; fails <= 6; ++fails) {
        std::vector<std::string> script(static_cast<std::size_t>(fails), prose);
        script.push_back(valid);
        llm::MockChatServer server(llm::MockChatServer::scripted(script));
        llm::LlmConfig c;
        c.endpoint = server.endpoint();
        c.require_api_key = false;
        c.timeout_seconds = 5.0;
        const auto r = llm::LlmClient(c).query("prompt");
        const int want = std::min(fails + 1, 5);
        const bool exhausted = fails + 1 > 5;
        ok = ok && r.attempts == want && server.request_count() == static_cast<std::size_t>(want) &&
             r.defaulted == exhausted;
        if (exhausted) ok = ok && r.anomaly_indices.empty() && r.reason.empty();
        detail += std::to_string(server.request_count()) + (fails < 6 ? "," : "");
    }
    return {ok, "requests for 0..6 leading failures: " + detail};
}

Outcome matrix_profile(Clock::time_point suite_start) {
    Rng rng(10);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = static_cast<std::size_t>(uniform_int(rng, 16, 256));
        const std::size_t m = static_cast<std::size_t>(uniform_int(rng, 4, static_cast<long>(n / 2)));
        std::vector<double> x(n);
        std::normal_distribution<double> z;
        for (auto& v : x) v = z(rng);
        const auto mp = detect::compute_matrix_profile(x, m);
        const auto ref = oracle::brute_profile(x, m, mp.exclusion);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (std::isinf(ref[i]) && std::isinf(mp.distances[i])) continue;
            const double e = std::abs(mp.distances[i] - ref[i]);
            if (!(e <= worst)) worst = e;
        }
    }

    int hits = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        Rng r(derive_seed(10010, static_cast<std::uint64_t>(trial)));
        gen::BaseSeriesSpec spec;
        spec.length = 400;
        spec.seasonality = {gen::SeasonalityKind::SingleSine, 100.0, uniform(r, 0.0, 2.0 * oracle::kPi),
                            {static_cast<double>(uniform_int(r, 4, 10))}, {1.0}};
        spec.noise.amplitude = 2.0;
        spec.seed = r();
        const auto base = gen::compose_series(spec);
        const auto ins = anomaly::sample_shape_insertion(r, base, anomaly::PatternVariant::Break);
        auto series = anomaly::start_labeled(base);
        anomaly::apply_insertion(base, ins, series);
        const std::size_t m = detect::estimate_period_fft(series.values).period;
        const auto d = detect::top_discord(detect::compute_matrix_profile(series.values, m));
        if (d <= ins.end && d + m > ins.start) ++hits;
    }
    const double rate = double(hits) / trials;
    const double elapsed = seconds_since(suite_start);
    return {worst < 1e-6 && rate >= 0.8 && elapsed < 120.0,
            fmt("max |STOMP - brute| %.2e; discord overlap %.0f/50; suite time so far %.1fs", worst, double(hits),
                elapsed)};
}

int shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome end_to_end(const std::string& cli) {
    const auto dir = oracle::temp_dir("acceptance_e2e");
    const auto t0 = Clock::now();
    const auto q = [](const std::filesystem::path& p) { return "'" + p.string() + "'"; };
    const auto eval_dir = dir / "eval";
    const auto preds = dir / "preds.jsonl";
    const auto report = dir / "report.json";
    const auto log = dir / "log.txt";
    int rc = shell("'" + cli + "' build-eval --seed 1 --out " + q(eval_dir) + " > " + q(log) + " 2>&1");
    if (rc == 0) {
        rc = shell("'" + cli + "' query-llm --endpoint mock --jobs 4 --dataset " + q(eval_dir / "eval_400.jsonl") +
                   " --out " + q(preds) + " >> " + q(log) + " 2>&1");
    }
    if (rc == 0) {
        rc = shell("'" + cli + "' score --predictions " + q(preds) + " --dataset " +
                   q(eval_dir / "eval_400.jsonl") + " --out " + q(report) + " >> " + q(log) + " 2>&1");
    }
    const double sec = seconds_since(t0);
    bool ok = rc == 0 && sec < 30.0;
    double f = -1.0;
    if (ok) {
        try {
            const auto j = nlohmann::json::parse(data::read_text(report));
            ok = j.at("segment_count") == 100 && j.at("segments").size() == 100 &&
                 j.at("distributions").size() == 6 && j.at("hallucination").contains("segment_count");
            f = j.at("mean").at("range").at("f").get<double>();
        } catch (const std::exception&) {
            ok = false;
        }
    } else {
        std::cerr << data::read_text(log);
    }
    std::filesystem::remove_all(dir);
    return {ok, fmt("exit %.0f in %.2fs; mean range-F %.3f", rc, sec, f)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tsad acceptance checks"};
    std::string cli;
    std::string golden_dir;
    app.add_option("--cli", cli, "Path to the tsad executable")->required();
    app.add_option("--golden", golden_dir, "Directory of stored prompt files")->required();
    CLI11_PARSE(app, argc, argv);

    const auto start = Clock::now();
    int failed = 0;
    const auto report = [&](int n, const char* name, const Outcome& o) {
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << n << ": " << name << ": " << o.detail << "\n"
                  << std::flush;
        failed += o.pass ? 0 : 1;
    };
    report(1, "generator statistics", generator_statistics());
    report(2, "noise calibration", noise_calibration());
    report(3, "injection detectability", injection_detectability());
    report(4, "metric oracle equivalence", metric_oracle());
    report(5, "window monotonicity", window_monotonicity());
    report(6, "hallucination protocol", hallucination_protocol());
    report(7, "dataset quotas", dataset_quotas());
    report(8, "prompt goldens", prompt_goldens(golden_dir));
    report(9, "LLM protocol", llm_protocol());
    report(10, "matrix profile", matrix_profile(start));
    report(11, "end to end", end_to_end(cli));
    std::cout << (11 - failed) << "/11 criteria passed\n";
    return failed == 0 ? 0 : 1;
}
