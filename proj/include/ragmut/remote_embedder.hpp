#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmut/embedder.hpp"
#include "ragmut/http.hpp"

namespace ragmut {

struct RemoteEmbedderConfig {
    std::string endpoint; // base URL; requests go to <endpoint>/embeddings
    std::string model;
    std::size_t dimension = 0;
    std::chrono::milliseconds timeout{30000};
    std::string api_key_env = "RAGMUT_EMBED_API_KEY";
};

/// Client for an embeddings service speaking the common
/// `{"model", "input": [...]} -> {"data": [{"embedding": [...]}]}` shape.
class RemoteEmbedder final : public EmbeddingBackend {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.dimension == 0) throw Error("remote embedder needs a dimension");
        http::parse_url(cfg_.endpoint);
    }

    std::string id() const override { return "remote:" + cfg_.model + ":" + std::to_string(cfg_.dimension); }
    std::size_t dimension() const override { return cfg_.dimension; }

    std::vector<CodeEmbedding> embed_batch(std::span<const std::string> texts) const override {
        for (const auto& t : texts)
            if (text::is_blank(t)) throw Error("cannot embed empty code");
        nlohmann::json req{{"model", cfg_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
        std::optional<std::string> key;
        if (const char* k = std::getenv(cfg_.api_key_env.c_str())) key = k;
        const auto res = http::post_json(http::join_path(cfg_.endpoint, "embeddings"), req.dump(), cfg_.timeout, key);
        if (res.status != 200)
            throw http::HttpError("embedding service returned status " + std::to_string(res.status), res.status);

        std::vector<CodeEmbedding> out(texts.size());
        try {
            const auto body = nlohmann::json::parse(res.body);
            const auto& data = body.at("data");
            if (data.size() != texts.size()) throw FormatError("embedding service returned wrong item count");
            for (std::size_t i = 0; i < data.size(); ++i) {
                const std::size_t slot = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
                if (slot >= out.size()) throw FormatError("embedding index out of range");
                auto values = data[i].at("embedding").get<std::vector<float>>();
                if (values.size() != cfg_.dimension)
                    throw Error("dimension mismatch: expected " + std::to_string(cfg_.dimension) + ", got " +
                                std::to_string(values.size()));
                out[slot] = CodeEmbedding{std::move(values), id()};
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("malformed embedding reply: ") + e.what());
        }
        return out;
    }

private:
    RemoteEmbedderConfig cfg_;
};

} // namespace ragmut
