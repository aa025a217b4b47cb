#pragma once

#include "tsad/llm.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace tsad::llm {

/// In-process chat-completions server on 127.0.0.1 speaking the OpenAI wire
/// format. The responder maps the request messages to the reply content.
class MockChatServer {
public:
    using Responder = std::function<std::string(const std::vector<ChatMessage>&)>;

    explicit MockChatServer(Responder responder);
    ~MockChatServer();
    MockChatServer(const MockChatServer&) = delete;
    MockChatServer& operator=(const MockChatServer&) = delete;

    int port() const { return port_; }
    /// http://127.0.0.1:<port>/v1/chat/completions
    std::string endpoint() const;
    std::size_t request_count() const { return requests_.load(); }

    /// Replies in order; the last one repeats once the script runs out.
    static Responder scripted(std::vector<std::string> replies);
    /// Returns the content of the last user message.
    static Responder echo();
    /// Reads the bracketed values following "with values" in the last user
    /// message and flags |z| > lambda, replying inside a fenced JSON block.
    static Responder zscore(double lambda = 3.0);

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<std::size_t> requests_{0};
    int port_ = 0;
};

/// Values of the first "[...]" list after "with values" in `prompt`.
std::vector<double> values_from_prompt(const std::string& prompt);

} // namespace tsad::llm
