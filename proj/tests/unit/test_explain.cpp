#include "golden.hpp"

#include "tsad/rng.hpp"
#include "tsad/explain.hpp"
#include "tsad/llm.hpp"
#include "tsad/mock_server.hpp"
#include "tsad/stats.hpp"

#include <doctest.h>

#include <regex>
#include <set>

using namespace tsad;
using namespace tsad::explain;
using anomaly::Insertion;
using anomaly::Kind;

namespace {

gen::BaseSeriesSpec fixed_spec() {
    gen::BaseSeriesSpec spec;
    spec.length = 200;
    spec.seasonality = {gen::SeasonalityKind::SingleSine, 20.0, 0.5, {4.0}, {1.0}};
    spec.trend = {gen::TrendKind::Linear, 0.3, 0, {}, 0.0, 40.0};
    spec.noise.amplitude = 2.0;
    spec.seed = 17;
    return spec;
}

Insertion point(Kind kind, std::size_t t, int dir) {
    Insertion ins;
    ins.kind = kind;
    ins.start = ins.end = t;
    ins.direction = dir;
    ins.magnitude = 5.0;
    ins.context = 20;
    return ins;
}

Insertion range(Kind kind, std::size_t i, std::size_t j, int dir, double ratio = 1.0) {
    Insertion ins;
    ins.kind = kind;
    ins.start = i;
    ins.end = j;
    ins.direction = dir;
    ins.ratio = ratio;
    ins.magnitude = 2.5;
    if (kind == Kind::ShapeChange || kind == Kind::ShapeBreak) {
        ins.replacement = gen::SeasonalitySpec{gen::SeasonalityKind::Ifft, 20.0, 0.0, {2.0, 7.0},
                                               {1.0, 0.6}};
    }
    return ins;
}

llm::LlmConfig mock_config(const std::string& endpoint) {
    llm::LlmConfig c;
    c.endpoint = endpoint;
    c.require_api_key = false;
    c.max_retries = 1;
    c.timeout_seconds = 2.0;
    return c;
}

} // namespace

TEST_SUITE("explain") {

TEST_CASE("trend sentences") {
    auto spec = fixed_spec();
    CHECK(describe_base(spec).find("increasing trend") != std::string::npos);
    spec.trend.slope = -0.3;
    CHECK(describe_base(spec).find("decreasing trend") != std::string::npos);
    spec.trend = {};
    const auto text = describe_base(spec);
    CHECK(text.find("trend") == std::string::npos);
    CHECK(text.rfind("This time series includes sine-wave like seasonal patterns", 0) == 0);
}

TEST_CASE("polynomial direction follows the derivative sign") {
    gen::TrendSpec t;
    t.kind = gen::TrendKind::Polynomial;
    t.degree = 2;
    t.coefficients = {0.5, 0.2};
    CHECK(describe_trend(t, 100) == "This time series shows increasing polynomial trend.");
    t.coefficients = {-0.5, -0.2};
    CHECK(describe_trend(t, 100) == "This time series shows decreasing polynomial trend.");
    t.coefficients = {-0.5, 0.6};
    CHECK(describe_trend(t, 100) == "This time series shows polynomial trend.");
}

TEST_CASE("seasonality sentences") {
    gen::SeasonalitySpec s{gen::SeasonalityKind::SingleSine, 1.0, 0.0, {4.0}, {1.0}};
    CHECK(describe_seasonality(s, 200) ==
          "This time series includes sine-wave like seasonal patterns, which include 4 periods "
          "with each last for approximately every 50 points.");
    gen::SeasonalitySpec f{gen::SeasonalityKind::Ifft, 1.0, 0.0, {2.0, 7.0}, {1.0, 0.7}};
    const auto text = describe_seasonality(f, 200);
    CHECK(text.find("Fourier Transform") != std::string::npos);
    CHECK(text.find("prominent frequencies at 2, 7") != std::string::npos);
    gen::SeasonalitySpec q{gen::SeasonalityKind::SquareSine, 1.0, 0.0, {2.0, 6.0, 10.0},
                           {1.0, 1.0 / 3, 0.2}};
    const auto sq = describe_seasonality(q, 300);
    CHECK(sq.find("include 2 periods") != std::string::npos);
    CHECK(sq.find("include 6 periods") != std::string::npos);
    CHECK(sq.find("include 10 periods with each last for approximately every 30 points") !=
          std::string::npos);
    CHECK(describe_seasonality({}, 10) == "No seasonality observed in this time series.");
}

TEST_CASE("empty plan gives the no-anomaly sentence") {
    CHECK(describe_anomalies({}, 100, 1.0) == kNoAnomalyText);
    const auto b = explain::explain(fixed_spec(), {});
    CHECK(b.anomaly_text == kNoAnomalyText);
    CHECK(b.combined_text == b.base_text + " " + b.anomaly_text);
}

TEST_CASE("global point clauses") {
    const auto spikes = describe_anomalies({{point(Kind::GlobalPoint, 11, 1)}}, 100, 1.0);
    CHECK(spikes.find("[11]") != std::string::npos);
    CHECK(spikes.find("spikes") != std::string::npos);
    CHECK(spikes.find("global") != std::string::npos);

    const auto mixed = describe_anomalies(
        {{point(Kind::GlobalPoint, 11, 1), point(Kind::GlobalPoint, 40, -1),
          point(Kind::GlobalPoint, 70, 1)}},
        100, 1.0);
    CHECK(mixed.find("spikes in positions [11, 70]") != std::string::npos);
    CHECK(mixed.find("dips in positions [40]") != std::string::npos);

    const auto local = describe_anomalies({{point(Kind::LocalPoint, 5, -1)}}, 100, 1.0);
    CHECK(local.find("local") != std::string::npos);
    CHECK(local.find("dips") != std::string::npos);
}

TEST_CASE("pattern clauses carry direction words") {
    auto text = [](const Insertion& ins) { return describe_anomalies({{ins}}, 200, 2.0); };
    CHECK(text(range(Kind::SeasonalityAmplitude, 40, 90, 1, 2.0)).find("larger") != std::string::npos);
    CHECK(text(range(Kind::SeasonalityAmplitude, 40, 90, -1, 0.5)).find("smaller") != std::string::npos);
    CHECK(text(range(Kind::SeasonalityPeriod, 40, 90, 1, 2.0)).find("longer") != std::string::npos);
    CHECK(text(range(Kind::SeasonalityPeriod, 40, 90, -1, 0.5)).find("shorter") != std::string::npos);
    const auto change = text(range(Kind::TrendChange, 60, 199, 1));
    CHECK(change.find("increases by 5.00") != std::string::npos);
    CHECK(text(range(Kind::TrendChange, 60, 199, -1)).find("decreases") != std::string::npos);
    CHECK(text(range(Kind::TrendBreak, 60, 80, 1)).find("increase since index 60") != std::string::npos);
    CHECK(text(range(Kind::TrendBreak, 60, 80, -1)).find("decrease since index 60") != std::string::npos);
    const auto shape = text(range(Kind::ShapeChange, 60, 199, 1));
    CHECK(shape.find("the time series changed to the time series appears to contain signals") !=
          std::string::npos);
    CHECK(text(range(Kind::ShapeBreak, 60, 120, 1)).find("between the index 60 and the 120") !=
          std::string::npos);
}

TEST_CASE("templates leave no placeholders and only mention plan indices") {
    Rng rng(5);
    const std::regex number(R"(\d+(\.\d+)?)");
    for (int i = 0; i < 2000; ++i) {
        const auto spec = gen::sample_base_spec(rng, 100 + 100 * (i % 3));
        const auto base = gen::compose_series(spec);
        const auto plan = anomaly::sample_anomaly_plan(rng, base);
        const auto b = explain::explain(spec, plan);
        REQUIRE(b.combined_text.find('{') == std::string::npos);
        REQUIRE(b.combined_text.find('}') == std::string::npos);
        for (const auto& ins : plan.insertions) {
            auto clause = describe_anomalies({{ins}}, spec.length, 1.0);
            // Shape clauses embed a seasonality description with its own counts.
            for (const char* cut : {"changed to ", "time series as "}) {
                const auto p = clause.find(cut);
                if (p != std::string::npos) clause.resize(p);
            }
            for (std::sregex_iterator it(clause.begin(), clause.end(), number), end; it != end; ++it) {
                if ((*it)[1].matched) continue;
                const auto v = std::stoul((*it)[0].str());
                REQUIRE(v >= ins.start);
                REQUIRE(v <= ins.end);
            }
        }
    }
}

TEST_CASE("explanation text is stable") {
    const auto spec = fixed_spec();
    anomaly::AnomalyPlan plan{{range(Kind::TrendBreak, 120, 150, 1), point(Kind::GlobalPoint, 11, 1),
                               point(Kind::GlobalPoint, 30, -1),
                               range(Kind::SeasonalityAmplitude, 40, 100, 1, 2.25)}};
    const auto b = explain::explain(spec, plan);
    CHECK(golden::check(TSAD_GOLDEN_DIR, "explanation_fixed.txt", b.combined_text + "\n"));
    CHECK(explain::explain(spec, plan).combined_text == b.combined_text);
}

TEST_CASE("rewrite through an echo endpoint") {
    llm::MockChatServer server(llm::MockChatServer::echo());
    auto bundle = explain::explain(fixed_spec(), {{point(Kind::GlobalPoint, 11, 1)}});
    const auto out = rewrite_via_llm(bundle, mock_config(server.endpoint()));
    REQUIRE(out.rewritten_text);
    CHECK(*out.rewritten_text == bundle.combined_text);
    CHECK(!out.warning);
    CHECK(server.request_count() == 1);
}

TEST_CASE("rewrite failure leaves the bundle intact with a warning") {
    int port = 0;
    {
        llm::MockChatServer probe(llm::MockChatServer::echo());
        port = probe.port();
    }
    auto bundle = explain::explain(fixed_spec(), {});
    const auto out =
        rewrite_via_llm(bundle, mock_config("http://127.0.0.1:" + std::to_string(port) + "/v1"));
    CHECK(!out.rewritten_text);
    REQUIRE(out.warning);
    CHECK(out.combined_text == bundle.combined_text);
    CHECK(out.base_text == bundle.base_text);
}

TEST_CASE("rewrite rejects an empty bundle") {
    ExplanationBundle empty;
    CHECK_THROWS_AS(rewrite_via_llm(empty, mock_config("http://127.0.0.1:1/")), std::invalid_argument);
}

TEST_CASE("index lists") {
    CHECK(format_index_list({}) == "[]");
    CHECK(format_index_list({3, 7, 11}) == "[3, 7, 11]");
}

}
