#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsad::llm {

/// Connection settings for an OpenAI-compatible chat-completions endpoint.
struct LlmConfig {
    /// Full URL, e.g. https://api.openai.com/v1/chat/completions
    std::string endpoint;
    std::string model = "gpt-4";
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "LLM_API_KEY";
    /// Local mock endpoints run without a key.
    bool require_api_key = true;
    /// Unset means the provider default.
    std::optional<double> temperature;
    int max_retries = 5;
    double timeout_seconds = 60.0;
    int max_concurrent_requests = 4;
};

/// Raised for configuration problems detected before any request is sent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void validate(const LlmConfig& config);

struct ChatMessage {
    std::string role;
    std::string content;
};

/// The two-key detection payload.
struct ParsedResponse {
    std::vector<std::int64_t> anomaly;
    std::string reason;

    bool operator==(const ParsedResponse&) const = default;
};

/// Either a parsed payload or a description of why parsing failed.
struct ParseOutcome {
    std::optional<ParsedResponse> value;
    std::string error;

    explicit operator bool() const { return value.has_value(); }
};

/// Finds the first balanced JSON object carrying both "anomaly" (integer list,
/// numeric strings coerced) and "reason" (string). Surrounding prose and code
/// fences are ignored. Never throws.
ParseOutcome parse_response(std::string_view text);

/// Brace-balanced substring starting at text[start] == '{', string-literal
/// aware. Empty when unbalanced.
std::string_view balanced_object_at(std::string_view text, std::size_t start);

struct DetectionResult {
    std::vector<std::int64_t> anomaly_indices;
    std::string reason;
    /// Raw text of the last attempt (response content or transport error).
    std::string raw_response;
    int attempts = 0;
    bool defaulted = false;
    /// Attempts that failed before a response body was obtained.
    int transport_failures = 0;
};

struct CompletionReply {
    std::optional<std::string> content;
    std::string error;
    bool transport_error = false;
};

struct Endpoint {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path;
};

/// Throws ConfigError for anything that is not http(s)://host[:port][/path].
Endpoint parse_endpoint(const std::string& url);

std::string build_chat_request(const LlmConfig& config, const std::vector<ChatMessage>& messages);

/// choices[0].message.content of a chat-completions response body.
std::optional<std::string> extract_chat_content(std::string_view body);

/// Bounds the number of requests in flight across every client sharing it.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int slots);

    void acquire();
    void release();

    class Slot {
    public:
        explicit Slot(ConcurrencyLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
        ~Slot() { limiter_.release(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        ConcurrencyLimiter& limiter_;
    };

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int free_;
};

/// Chat client. Safe to share between threads; every call opens its own
/// connection and retries are tracked per call.
class LlmClient {
public:
    /// Resolves the API key from the environment; throws ConfigError when it is
    /// required but missing.
    explicit LlmClient(LlmConfig config);

    CompletionReply complete(const std::vector<ChatMessage>& messages) const;

    /// Sends `prompt` as a single user message, re-asking until a response
    /// parses or `max_retries` attempts are spent. Exhaustion yields the default
    /// result {anomaly: [], reason: ""} with `defaulted` set.
    DetectionResult query(const std::string& prompt) const;

    const LlmConfig& config() const { return config_; }

private:
    LlmConfig config_;
    Endpoint endpoint_;
    std::string api_key_;
    std::shared_ptr<ConcurrencyLimiter> limiter_;
};

DetectionResult query(const std::string& prompt, const LlmConfig& config);

} // namespace tsad::llm
