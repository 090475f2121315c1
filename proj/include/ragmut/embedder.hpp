#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ragmut/corpus.hpp"
#include "ragmut/error.hpp"
#include "ragmut/parallel.hpp"
#include "ragmut/text.hpp"

namespace ragmut {

struct CodeEmbedding {
    std::vector<float> values;
    std::string backend_id;

    std::size_t dimension() const { return values.size(); }
};

/// Produces embeddings for code text. Implementations must be safe to call
/// from several threads at once.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<CodeEmbedding> embed_batch(std::span<const std::string> texts) const = 0;

    CodeEmbedding embed(const std::string& code) const {
        auto v = embed_batch(std::span<const std::string>(&code, 1));
        return std::move(v.front());
    }
};

/// Splits code into identifier/number runs and single punctuation characters.
inline std::vector<std::string> lexical_tokens(std::string_view code) {
    std::vector<std::string> out;
    std::size_t i = 0;
    auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; };
    while (i < code.size()) {
        const char c = code[i];
        if (text::is_space(c)) {
            ++i;
        } else if (word(c)) {
            std::size_t j = i;
            while (j < code.size() && word(code[j])) ++j;
            out.emplace_back(code.substr(i, j - i));
            i = j;
        } else {
            out.emplace_back(1, c);
            ++i;
        }
    }
    return out;
}

/// Deterministic offline embedder: each token 3-gram (with sentence
/// boundary markers) is hashed into one of D buckets and counted.
class LexicalEmbedder final : public EmbeddingBackend {
public:
    explicit LexicalEmbedder(std::size_t dimension = 512) : dim_(dimension) {
        if (dim_ == 0) throw Error("embedding dimension must be positive");
    }

    std::string id() const override { return "lexical-3gram-" + std::to_string(dim_); }
    std::size_t dimension() const override { return dim_; }

    static std::size_t bucket(const std::string& a, const std::string& b, const std::string& c, std::size_t dim) {
        std::uint64_t h = text::fnv1a(a);
        h = text::fnv1a("\x1f", h);
        h = text::fnv1a(b, h);
        h = text::fnv1a("\x1f", h);
        h = text::fnv1a(c, h);
        return static_cast<std::size_t>(h % dim);
    }

    CodeEmbedding embed_one(std::string_view code) const {
        auto toks = lexical_tokens(code);
        if (toks.empty()) throw Error("cannot embed empty code");
        toks.insert(toks.begin(), "<s>");
        toks.emplace_back("</s>");
        CodeEmbedding e{std::vector<float>(dim_, 0.0f), id()};
        for (std::size_t i = 0; i + 2 < toks.size(); ++i) e.values[bucket(toks[i], toks[i + 1], toks[i + 2], dim_)] += 1.0f;
        return e;
    }

    std::vector<CodeEmbedding> embed_batch(std::span<const std::string> texts) const override {
        std::vector<CodeEmbedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_one(t));
        return out;
    }

private:
    std::size_t dim_;
};

enum class Metric : std::uint8_t { Euclidean = 0, Cosine = 1, Dot = 2 };

inline std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Cosine: return "cosine";
    case Metric::Dot: return "dot";
    }
    return "?";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "euclidean") return Metric::Euclidean;
    if (s == "cosine") return Metric::Cosine;
    if (s == "dot") return Metric::Dot;
    throw Error("unknown metric: " + std::string(s));
}

enum class KeySide { PreFix, PostFix };

inline KeySide parse_key_side(std::string_view s) {
    if (s == "post_fix") return KeySide::PostFix;
    if (s == "pre_fix") return KeySide::PreFix;
    throw Error("unknown key side: " + std::string(s));
}

struct ScoredId {
    std::string id;
    double score; // distance for euclidean, similarity otherwise

    bool operator==(const ScoredId&) const = default;
};

/// Exhaustive-scan vector index. Stored vectors are unnormalized; cosine
/// normalizes at query time so one representation serves every metric.
class VectorIndex {
public:
    VectorIndex(std::size_t dimension, Metric metric, std::string backend_id)
        : dim_(dimension), metric_(metric), backend_id_(std::move(backend_id)) {}

    std::size_t dimension() const { return dim_; }
    Metric metric() const { return metric_; }
    void set_metric(Metric m) { metric_ = m; }
    const std::string& backend_id() const { return backend_id_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    const std::vector<std::string>& ids() const { return ids_; }
    std::span<const float> vector(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

    void add(const std::string& id, const CodeEmbedding& e) {
        if (e.dimension() != dim_)
            throw Error("dimension mismatch: index has " + std::to_string(dim_) + ", embedding has " +
                        std::to_string(e.dimension()));
        if (!e.backend_id.empty() && e.backend_id != backend_id_)
            throw Error("backend mismatch: index built with " + backend_id_ + ", embedding from " + e.backend_id);
        for (float v : e.values)
            if (!std::isfinite(v)) throw Error("non-finite embedding value for " + id);
        if (!seen_.insert(id).second) throw Error("duplicate index id: " + id);
        ids_.push_back(id);
        data_.insert(data_.end(), e.values.begin(), e.values.end());
    }

    double score(std::size_t i, std::span<const float> probe) const {
        const auto v = vector(i);
        switch (metric_) {
        case Metric::Euclidean: {
            double s = 0;
            for (std::size_t k = 0; k < dim_; ++k) {
                const double d = static_cast<double>(v[k]) - probe[k];
                s += d * d;
            }
            return std::sqrt(s);
        }
        case Metric::Dot: {
            double s = 0;
            for (std::size_t k = 0; k < dim_; ++k) s += static_cast<double>(v[k]) * probe[k];
            return s;
        }
        case Metric::Cosine: {
            double dot = 0, na = 0, nb = 0;
            for (std::size_t k = 0; k < dim_; ++k) {
                dot += static_cast<double>(v[k]) * probe[k];
                na += static_cast<double>(v[k]) * v[k];
                nb += static_cast<double>(probe[k]) * probe[k];
            }
            return na == 0 || nb == 0 ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
        }
        }
        return 0;
    }

    /// Top-n entries: ascending distance (euclidean) or descending
    /// similarity (cosine, dot); ties broken by id.
    std::vector<ScoredId> query(const CodeEmbedding& probe, std::size_t n) const {
        if (empty()) throw Error("query on empty index");
        if (n == 0) throw Error("query size must be at least 1");
        if (probe.dimension() != dim_)
            throw Error("dimension mismatch: index has " + std::to_string(dim_) + ", probe has " +
                        std::to_string(probe.dimension()));
        std::vector<ScoredId> all;
        all.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) all.push_back({ids_[i], score(i, probe.values)});
        const bool ascending = metric_ == Metric::Euclidean;
        auto better = [ascending](const ScoredId& a, const ScoredId& b) {
            if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
            return a.id < b.id;
        };
        const std::size_t k = std::min(n, all.size());
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
        all.resize(k);
        return all;
    }

    bool operator==(const VectorIndex& o) const {
        return dim_ == o.dim_ && metric_ == o.metric_ && backend_id_ == o.backend_id_ && ids_ == o.ids_ &&
               data_ == o.data_;
    }

private:
    std::size_t dim_;
    Metric metric_;
    std::string backend_id_;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_set<std::string> seen_;
};

inline const std::string& key_text(const BugFixPair& p, KeySide side) {
    return side == KeySide::PostFix ? p.post_fix_code : p.pre_fix_code;
}

/// One entry per corpus pair, keyed on the chosen side. Embedding runs in
/// parallel batches; entries keep corpus order.
inline VectorIndex build_index(const Corpus& corpus, KeySide side, const EmbeddingBackend& backend, Metric metric,
                               unsigned jobs = default_jobs(), std::size_t batch = 64) {
    if (corpus.empty()) throw Error("cannot build an index over an empty corpus");
    const auto& pairs = corpus.pairs();
    const std::size_t n_batches = (pairs.size() + batch - 1) / batch;
    std::vector<std::vector<CodeEmbedding>> results(n_batches);
    parallel_for(n_batches, jobs, [&](std::size_t b) {
        std::vector<std::string> texts;
        for (std::size_t i = b * batch; i < std::min(pairs.size(), (b + 1) * batch); ++i)
            texts.push_back(key_text(pairs[i], side));
        results[b] = backend.embed_batch(texts);
    });
    VectorIndex index(backend.dimension(), metric, backend.id());
    std::size_t i = 0;
    for (const auto& r : results)
        for (const auto& e : r) index.add(pairs[i++].id, e);
    return index;
}

namespace detail {

inline constexpr char kIndexMagic[8] = {'R', 'A', 'G', 'M', 'U', 'T', 'I', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;

inline void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline bool get_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
        static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
    return true;
}

inline void put_f32(std::ostream& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

} // namespace detail

/// Binary layout, little-endian:
///   magic "RAGMUTIX" | u32 version | u32 D | u8 metric | u32 len | backend id
///   then per entry: u32 len | id bytes | D x f32
inline void save_index(const VectorIndex& index, std::ostream& out) {
    out.write(detail::kIndexMagic, 8);
    detail::put_u32(out, detail::kIndexVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(index.dimension()));
    out.put(static_cast<char>(index.metric()));
    detail::put_u32(out, static_cast<std::uint32_t>(index.backend_id().size()));
    out.write(index.backend_id().data(), static_cast<std::streamsize>(index.backend_id().size()));
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto& id = index.ids()[i];
        detail::put_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        for (float f : index.vector(i)) detail::put_f32(out, f);
    }
    if (!out) throw Error("failed to write index");
}

inline void save_index(const VectorIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write index file: " + path);
    save_index(index, out);
}

inline VectorIndex load_index(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, detail::kIndexMagic, 8) != 0) throw FormatError("not an index file");
    std::uint32_t version = 0, dim = 0, blen = 0;
    if (!detail::get_u32(in, version) || version != detail::kIndexVersion)
        throw FormatError("unsupported index version");
    if (!detail::get_u32(in, dim) || dim == 0) throw FormatError("bad index dimension");
    const int metric_byte = in.get();
    if (metric_byte < 0 || metric_byte > 2) throw FormatError("bad index metric");
    if (!detail::get_u32(in, blen)) throw FormatError("truncated index header");
    std::string backend(blen, '\0');
    if (!in.read(backend.data(), blen)) throw FormatError("truncated index header");
    VectorIndex index(dim, static_cast<Metric>(metric_byte), backend);
    std::uint32_t idlen = 0;
    while (detail::get_u32(in, idlen)) {
        std::string id(idlen, '\0');
        if (!in.read(id.data(), idlen)) throw FormatError("truncated index record");
        CodeEmbedding e{std::vector<float>(dim), backend};
        for (auto& f : e.values) {
            std::uint32_t bits = 0;
            if (!detail::get_u32(in, bits)) throw FormatError("truncated index record");
            std::memcpy(&f, &bits, 4);
        }
        index.add(id, e);
    }
    return index;
}

inline VectorIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read index file: " + path);
    return load_index(in);
}

} // namespace ragmut
