#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmut/digest.hpp"
#include "ragmut/error.hpp"
#include "ragmut/http.hpp"
#include "ragmut/parallel.hpp"
#include "ragmut/text.hpp"

namespace ragmut {

struct BackendConfig {
    std::string endpoint;               // base URL; requests go to <endpoint>/chat/completions
    std::string model;
    std::optional<double> temperature;  // unset: server default
    int max_tokens = 4096;
    std::chrono::milliseconds timeout{120000};
    int max_retries = 3;
    int concurrency = 4;
    std::chrono::milliseconds backoff_base{500};
    std::string api_key_env = "RAGMUT_API_KEY";

    void validate() const {
        if (concurrency < 1) throw Error("backend concurrency must be at least 1");
        if (max_retries < 0) throw Error("backend retries must be non-negative");
        if (max_tokens < 1) throw Error("backend max_tokens must be positive");
        if (timeout.count() <= 0) throw Error("backend timeout must be positive");
    }
};

struct Completion {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    int retries = 0;
};

class LlmError : public Error {
public:
    enum class Kind { Auth, Exhausted, Malformed, Rejected, NotScripted };

    LlmError(Kind kind, const std::string& what, int last_status = 0, int retries = 0)
        : Error(what), kind_(kind), last_status_(last_status), retries_(retries) {}

    Kind kind() const noexcept { return kind_; }
    int last_status() const noexcept { return last_status_; }
    int retries() const noexcept { return retries_; }

private:
    Kind kind_;
    int last_status_;
    int retries_;
};

/// A chat-completion provider. Implementations are shared across threads.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string id() const = 0;
    virtual Completion complete(const std::string& prompt) const = 0;
};

inline std::string prompt_digest(const std::string& prompt) { return sha256_hex(prompt); }

/// Replays scripted replies keyed by the SHA-256 of the prompt.
class MockBackend final : public LlmBackend {
public:
    struct Entry {
        std::string response_text;
        long prompt_tokens = 0;
        long completion_tokens = 0;
    };

    MockBackend() = default;
    explicit MockBackend(std::map<std::string, Entry> script) : script_(std::move(script)) {}

    static MockBackend from_stream(std::istream& in) {
        std::map<std::string, Entry> script;
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (text::is_blank(line)) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                Entry e{j.at("response_text").get<std::string>(), j.value("prompt_tokens", 0L),
                        j.value("completion_tokens", 0L)};
                const auto digest = j.at("prompt_digest").get<std::string>();
                if (!script.emplace(digest, std::move(e)).second)
                    throw FormatError("duplicate prompt_digest in mock script at line " + std::to_string(n));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError("bad mock script record at line " + std::to_string(n) + ": " + e.what());
            }
        }
        return MockBackend(std::move(script));
    }

    static MockBackend from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot read mock script: " + path);
        return from_stream(in);
    }

    void add(const std::string& prompt, Entry e) { script_[prompt_digest(prompt)] = std::move(e); }

    std::string id() const override { return "mock"; }

    Completion complete(const std::string& prompt) const override {
        const auto digest = prompt_digest(prompt);
        auto it = script_.find(digest);
        if (it == script_.end()) throw LlmError(LlmError::Kind::NotScripted, "no scripted reply for prompt " + digest);
        return {it->second.response_text, it->second.prompt_tokens, it->second.completion_tokens, 0};
    }

private:
    std::map<std::string, Entry> script_;
};

inline nlohmann::json script_record(const std::string& digest, const MockBackend::Entry& e) {
    return {{"prompt_digest", digest},
            {"response_text", e.response_text},
            {"prompt_tokens", e.prompt_tokens},
            {"completion_tokens", e.completion_tokens}};
}

/// Chat-completions client: one user message per request, no streaming.
/// 429, 5xx and transport failures are retried with exponential backoff;
/// 401/403 fail immediately.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        http::parse_url(cfg_.endpoint);
    }

    std::string id() const override { return "http:" + cfg_.model; }
    const BackendConfig& config() const { return cfg_; }

    std::string request_body(const std::string& prompt) const {
        nlohmann::json body{{"model", cfg_.model},
                            {"messages", {{{"role", "user"}, {"content", prompt}}}},
                            {"max_tokens", cfg_.max_tokens},
                            {"stream", false}};
        if (cfg_.temperature) body["temperature"] = *cfg_.temperature;
        return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    }

    Completion complete(const std::string& prompt) const override {
        std::optional<std::string> key;
        if (const char* k = std::getenv(cfg_.api_key_env.c_str())) key = k;
        const auto url = http::join_path(cfg_.endpoint, "chat/completions");
        const auto body = request_body(prompt);
        int last_status = 0;
        std::string last_error;
        for (int attempt = 0;; ++attempt) {
            try {
                const auto res = http::post_json(url, body, cfg_.timeout, key);
                last_status = res.status;
                if (res.status == 200) {
                    auto c = parse_reply(res.body, res.status);
                    c.retries = attempt;
                    return c;
                }
                if (res.status == 401 || res.status == 403)
                    throw LlmError(LlmError::Kind::Auth, "authentication failed (status " + std::to_string(res.status) + ")",
                                   res.status, attempt);
                if (res.status != 429 && res.status < 500)
                    throw LlmError(LlmError::Kind::Rejected, "request rejected with status " + std::to_string(res.status),
                                   res.status, attempt);
                last_error = "status " + std::to_string(res.status);
            } catch (const http::HttpError& e) {
                last_status = e.status();
                last_error = e.what();
            }
            if (attempt >= cfg_.max_retries)
                throw LlmError(LlmError::Kind::Exhausted,
                               "retries exhausted after " + std::to_string(attempt) + " retries: " + last_error,
                               last_status, attempt);
            std::this_thread::sleep_for(cfg_.backoff_base * (1 << std::min(attempt, 16)));
        }
    }

private:
    BackendConfig cfg_;

    static Completion parse_reply(const std::string& raw, int status) {
        try {
            const auto j = nlohmann::json::parse(raw);
            Completion c;
            c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage") && j["usage"].is_object()) {
                c.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
                c.completion_tokens = j["usage"].value("completion_tokens", 0L);
            }
            return c;
        } catch (const nlohmann::json::exception& e) {
            throw LlmError(LlmError::Kind::Malformed, std::string("malformed completion reply: ") + e.what(), status);
        }
    }
};

struct BatchItem {
    std::string prompt_id;
    std::optional<Completion> completion;
    std::string error;

    bool ok() const { return completion.has_value(); }
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    int requests = 0;
    int failures = 0;
};

/// Completes every (id, prompt) with at most `concurrency` requests in
/// flight. Results follow input order; failures stay per item.
inline std::vector<BatchItem> complete_batch(const LlmBackend& backend,
                                             const std::vector<std::pair<std::string, std::string>>& prompts,
                                             int concurrency) {
    if (concurrency < 1) throw Error("backend concurrency must be at least 1");
    std::vector<BatchItem> out(prompts.size());
    parallel_for(prompts.size(), static_cast<unsigned>(concurrency), [&](std::size_t i) {
        out[i].prompt_id = prompts[i].first;
        try {
            out[i].completion = backend.complete(prompts[i].second);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

inline TokenUsage total_usage(const std::vector<BatchItem>& items) {
    TokenUsage u;
    for (const auto& it : items) {
        ++u.requests;
        if (!it.ok()) {
            ++u.failures;
            continue;
        }
        u.prompt_tokens += it.completion->prompt_tokens;
        u.completion_tokens += it.completion->completion_tokens;
    }
    return u;
}

} // namespace ragmut
