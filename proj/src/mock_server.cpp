#include "tsad/mock_server.hpp"

#include "tsad/stats.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace tsad::llm {

using nlohmann::json;

namespace {

std::string last_user_content(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            return it->content;
        }
    }
    return {};
}

std::string completion_body(const std::string& content) {
    json reply = {{"id", "mock"},
                  {"object", "chat.completion"},
                  {"choices",
                   json::array({{{"index", 0},
                                 {"message", {{"role", "assistant"}, {"content", content}}},
                                 {"finish_reason", "stop"}}})}};
    return reply.dump(-1, ' ', false, json::error_handler_t::replace);
}

} // namespace

std::vector<double> values_from_prompt(const std::string& prompt) {
    std::vector<double> out;
    auto anchor = prompt.find("with values");
    if (anchor == std::string::npos) {
        anchor = 0;
    }
    const auto open = prompt.find('[', anchor);
    if (open == std::string::npos) {
        return out;
    }
    const auto close = prompt.find(']', open);
    if (close == std::string::npos) {
        return out;
    }
    const std::string body = prompt.substr(open + 1, close - open - 1);
    const char* p = body.c_str();
    while (*p) {
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p) {
            ++p;
            continue;
        }
        out.push_back(v);
        p = end;
    }
    return out;
}

MockChatServer::MockChatServer(Responder responder) : server_(std::make_unique<httplib::Server>()) {
    server_->Post(".*", [this, responder = std::move(responder)](const httplib::Request& req,
                                                                  httplib::Response& res) {
        ++requests_;
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array()) {
            res.status = 400;
            res.set_content(R"({"error":"bad request"})", "application/json");
            return;
        }
        std::vector<ChatMessage> messages;
        for (const auto& m : body["messages"]) {
            messages.push_back({m.value("role", ""), m.value("content", "")});
        }
        res.set_content(completion_body(responder(messages)), "application/json");
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) {
        throw std::runtime_error("mock server could not bind a port");
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockChatServer::~MockChatServer() {
    server_->stop();
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::string MockChatServer::endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

MockChatServer::Responder MockChatServer::scripted(std::vector<std::string> replies) {
    if (replies.empty()) {
        throw std::invalid_argument("scripted mock needs at least one reply");
    }
    auto script = std::make_shared<const std::vector<std::string>>(std::move(replies));
    auto next = std::make_shared<std::atomic<std::size_t>>(0);
    return [script, next](const std::vector<ChatMessage>&) {
        const std::size_t k = next->fetch_add(1);
        return (*script)[std::min(k, script->size() - 1)];
    };
}

MockChatServer::Responder MockChatServer::echo() {
    return [](const std::vector<ChatMessage>& messages) { return last_user_content(messages); };
}

MockChatServer::Responder MockChatServer::zscore(double lambda) {
    return [lambda](const std::vector<ChatMessage>& messages) {
        const auto values = values_from_prompt(last_user_content(messages));
        json anomaly = json::array();
        if (!values.empty()) {
            const double mu = stats::mean(values);
            const double sd = stats::stddev(values);
            for (std::size_t t = 0; t < values.size(); ++t) {
                if (sd > 0.0 && std::abs(values[t] - mu) > lambda * sd) {
                    anomaly.push_back(t);
                }
            }
        }
        const std::string reason = anomaly.empty() ? "There is no obvious anomaly in this time series"
                                                   : "Values far from the series mean.";
        json payload = {{"anomaly", anomaly}, {"reason", reason}};
        return "Here is my analysis.\n```json\n" + payload.dump() + "\n```";
    };
}

} // namespace tsad::llm
