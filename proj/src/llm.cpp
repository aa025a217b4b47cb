#include "tsad/llm.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <regex>

namespace tsad::llm {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<std::int64_t> coerce_index(const json& v) {
    if (v.is_number_integer() && !v.is_number_unsigned()) {
        return v.get<std::int64_t>();
    }
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            return std::nullopt;
        }
        return static_cast<std::int64_t>(u);
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (!std::isfinite(d) || d != std::floor(d) || std::abs(d) > 9.0e15) {
            return std::nullopt;
        }
        return static_cast<std::int64_t>(d);
    }
    if (v.is_string()) {
        const std::string s = trim(v.get<std::string>());
        std::int64_t out = 0;
        const char* begin = s.data();
        const char* end = s.data() + s.size();
        if (begin != end && *begin == '+') {
            ++begin;
        }
        auto [ptr, ec] = std::from_chars(begin, end, out);
        if (ec != std::errc() || ptr != end || begin == end) {
            return std::nullopt;
        }
        return out;
    }
    return std::nullopt;
}

/// Removes commas that directly precede a closing bracket, outside strings.
std::string strip_trailing_commas(const std::string& in) {
    std::string out;
    out.reserve(in.size());
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const char c = in[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
        } else if (c == '"') {
            in_string = true;
        } else if (c == ',') {
            std::size_t k = i + 1;
            while (k < in.size() && std::isspace(static_cast<unsigned char>(in[k]))) {
                ++k;
            }
            if (k < in.size() && (in[k] == ']' || in[k] == '}')) {
                continue;
            }
        }
        out.push_back(c);
    }
    return out;
}

json try_parse(const std::string& candidate) {
    json j = json::parse(candidate, nullptr, false);
    if (!j.is_discarded()) {
        return j;
    }
    std::string fixed = strip_trailing_commas(candidate);
    j = json::parse(fixed, nullptr, false);
    if (!j.is_discarded()) {
        return j;
    }
    // Python-style dicts with single quotes.
    if (fixed.find('"') == std::string::npos && fixed.find('\'') != std::string::npos) {
        for (char& c : fixed) {
            if (c == '\'') {
                c = '"';
            }
        }
        j = json::parse(fixed, nullptr, false);
    }
    return j;
}

} // namespace

void validate(const LlmConfig& config) {
    if (config.endpoint.empty()) {
        throw ConfigError("endpoint is empty");
    }
    parse_endpoint(config.endpoint);
    if (config.model.empty()) {
        throw ConfigError("model is empty");
    }
    if (config.max_retries < 1) {
        throw ConfigError("max_retries must be at least 1");
    }
    if (!(config.timeout_seconds > 0.0)) {
        throw ConfigError("timeout must be positive");
    }
    if (config.max_concurrent_requests < 1) {
        throw ConfigError("max_concurrent_requests must be at least 1");
    }
    if (config.temperature && (*config.temperature < 0.0 || *config.temperature > 2.0)) {
        throw ConfigError("temperature must lie in [0, 2]");
    }
}

std::string_view balanced_object_at(std::string_view text, std::size_t start) {
    if (start >= text.size() || text[start] != '{') {
        return {};
    }
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) {
                return text.substr(start, i - start + 1);
            }
        }
    }
    return {};
}

ParseOutcome parse_response(std::string_view text) {
    ParseOutcome out;
    std::size_t pos = text.find('{');
    while (pos != std::string_view::npos) {
        const auto candidate = balanced_object_at(text, pos);
        if (!candidate.empty()) {
            const json j = try_parse(std::string(candidate));
            if (j.is_object() && j.contains("anomaly") && j.contains("reason")) {
                const json& a = j.at("anomaly");
                const json& r = j.at("reason");
                if (!a.is_array()) {
                    out.error = "\"anomaly\" is not a list";
                    return out;
                }
                if (!r.is_string()) {
                    out.error = "\"reason\" is not a string";
                    return out;
                }
                ParsedResponse parsed;
                for (const auto& v : a) {
                    auto idx = coerce_index(v);
                    if (!idx) {
                        out.error = "\"anomaly\" entry is not an integer: " + v.dump();
                        return out;
                    }
                    parsed.anomaly.push_back(*idx);
                }
                parsed.reason = r.get<std::string>();
                out.value = std::move(parsed);
                return out;
            }
        }
        pos = text.find('{', pos + 1);
    }
    out.error = "no JSON object with \"anomaly\" and \"reason\" found";
    return out;
}

Endpoint parse_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?)://([^/:\s]+)(?::(\d{1,5}))?(/[^\s]*)?$)",
                               std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, re)) {
        throw ConfigError("invalid endpoint URL: " + url);
    }
    Endpoint ep;
    ep.scheme = m[1].str();
    for (char& c : ep.scheme) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    ep.host = m[2].str();
    if (m[3].matched) {
        ep.port = std::stoi(m[3].str());
        if (ep.port < 1 || ep.port > 65535) {
            throw ConfigError("invalid port in endpoint URL: " + url);
        }
    } else {
        ep.port = ep.scheme == "https" ? 443 : 80;
    }
    ep.path = m[4].matched ? m[4].str() : "/";
    return ep;
}

std::string build_chat_request(const LlmConfig& config, const std::vector<ChatMessage>& messages) {
    json body;
    body["model"] = config.model;
    body["messages"] = json::array();
    for (const auto& m : messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    if (config.temperature) {
        body["temperature"] = *config.temperature;
    }
    return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::optional<std::string> extract_chat_content(std::string_view body) {
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return std::nullopt;
    }
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) {
        return std::nullopt;
    }
    const json& first = choices->front();
    if (!first.is_object()) {
        return std::nullopt;
    }
    const auto message = first.find("message");
    if (message == first.end() || !message->is_object()) {
        return std::nullopt;
    }
    const auto content = message->find("content");
    if (content == message->end() || !content->is_string()) {
        return std::nullopt;
    }
    return content->get<std::string>();
}

ConcurrencyLimiter::ConcurrencyLimiter(int slots) : free_(slots) {
    if (slots < 1) {
        throw std::invalid_argument("ConcurrencyLimiter needs at least one slot");
    }
}

void ConcurrencyLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return free_ > 0; });
    --free_;
}

void ConcurrencyLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        ++free_;
    }
    cv_.notify_one();
}

LlmClient::LlmClient(LlmConfig config) : config_(std::move(config)) {
    validate(config_);
    endpoint_ = parse_endpoint(config_.endpoint);
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            api_key_ = key;
        }
    }
    if (config_.require_api_key && api_key_.empty()) {
        throw ConfigError("API key missing: set the environment variable " +
                          (config_.api_key_env.empty() ? std::string("<unset>")
                                                       : config_.api_key_env));
    }
    limiter_ = std::make_shared<ConcurrencyLimiter>(config_.max_concurrent_requests);
}

CompletionReply LlmClient::complete(const std::vector<ChatMessage>& messages) const {
    CompletionReply reply;
    const std::string base = endpoint_.scheme + "://" + endpoint_.host + ":" +
                             std::to_string(endpoint_.port);
    httplib::Client client(base);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }
    const std::string body = build_chat_request(config_, messages);

    ConcurrencyLimiter::Slot slot(*limiter_);
    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    if (!res) {
        reply.transport_error = true;
        reply.error = "request failed: " + httplib::to_string(res.error());
        return reply;
    }
    if (res->status != 200) {
        reply.transport_error = true;
        reply.error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        return reply;
    }
    reply.content = extract_chat_content(res->body);
    if (!reply.content) {
        reply.error = "response has no choices[0].message.content";
    }
    return reply;
}

DetectionResult LlmClient::query(const std::string& prompt) const {
    DetectionResult result;
    const std::vector<ChatMessage> messages = {{"user", prompt}};
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        result.attempts = attempt;
        auto reply = complete(messages);
        if (reply.transport_error) {
            ++result.transport_failures;
        }
        if (!reply.content) {
            result.raw_response = reply.error;
            continue;
        }
        result.raw_response = *reply.content;
        auto parsed = parse_response(*reply.content);
        if (parsed) {
            result.anomaly_indices = std::move(parsed.value->anomaly);
            result.reason = std::move(parsed.value->reason);
            return result;
        }
    }
    result.defaulted = true;
    result.anomaly_indices.clear();
    result.reason.clear();
    return result;
}

DetectionResult query(const std::string& prompt, const LlmConfig& config) {
    return LlmClient(config).query(prompt);
}

} // namespace tsad::llm
