#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmut/chunker.hpp"
#include "ragmut/corpus.hpp"
#include "ragmut/embedder.hpp"
#include "ragmut/execution.hpp"
#include "ragmut/llm_backend.hpp"
#include "ragmut/mbfl.hpp"
#include "ragmut/metrics.hpp"
#include "ragmut/parallel.hpp"
#include "ragmut/prompt.hpp"
#include "ragmut/remote_embedder.hpp"
#include "ragmut/sft_export.hpp"
#include "ragmut/tcp.hpp"
#include "ragmut/validity.hpp"

namespace ragmut::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------- config

struct EmbedderSettings {
    std::string kind = "lexical"; // lexical | remote
    std::size_t dimension = 512;
    std::string endpoint;
    std::string model;
    int timeout_ms = 30000;
};

struct BackendSettings {
    std::string kind = "mock"; // mock | http
    std::string script;        // mock response script
    BackendConfig http;
};

struct Config {
    fs::path base_dir = ".";
    std::string corpus;
    std::string index = "index.bin";
    std::string targets;
    std::string out = "out";
    KeySide key_side = KeySide::PostFix;
    int retrieval_n = 6;
    Metric metric = Metric::Euclidean;
    bool chunking = true;
    bool rag = true;
    EmbedderSettings embedder;
    BackendSettings backend;
    std::string compile_command;
    std::string test_command;
    int compile_timeout_ms = 30000;
    int test_timeout_ms = 60000;
    DedupMode dedup = DedupMode::Normalized;
    unsigned jobs = 0; // 0: one per hardware thread
    std::uint64_t seed = 0;
    std::optional<std::size_t> sample_targets;
    double omega = 0.5;
    std::vector<int> top_k{1, 3, 5};
    std::string tool_path; // substituted for {ragmut} in commands

    /// Relative paths in the config resolve against its directory.
    std::string path(const std::string& p) const {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (base_dir / p).lexically_normal().string();
    }
    unsigned workers() const { return jobs ? jobs : default_jobs(); }

    void validate() const {
        if (retrieval_n < 1) throw Error("retrieval_n must be at least 1");
        if (!(omega >= 0.0 && omega <= 1.0)) throw Error("omega must be within [0, 1]");
        if (embedder.kind != "lexical" && embedder.kind != "remote")
            throw Error("unknown embedder kind: " + embedder.kind);
        if (embedder.dimension == 0) throw Error("embedder dimension must be positive");
        if (backend.kind != "mock" && backend.kind != "http") throw Error("unknown backend kind: " + backend.kind);
        if (top_k.empty()) throw Error("top_k needs at least one value");
        for (int k : top_k)
            if (k < 1) throw Error("top_k values must be positive");
        if (compile_timeout_ms <= 0 || test_timeout_ms <= 0) throw Error("timeouts must be positive");
        backend.http.validate();
    }
};

inline std::string to_string(DedupMode m) { return m == DedupMode::Exact ? "exact" : "normalized"; }

inline DedupMode parse_dedup_mode(std::string_view s) {
    if (s == "normalized") return DedupMode::Normalized;
    if (s == "exact") return DedupMode::Exact;
    throw Error("unknown dedup mode: " + std::string(s));
}

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [k, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw FormatError("unknown key '" + k + "' in " + where);
    }
}

} // namespace detail

inline Config config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    detail::check_keys(j,
                       {"corpus", "index", "targets", "out", "key_side", "retrieval_n", "metric", "chunking", "rag",
                        "embedder", "backend", "compile_command", "test_command", "compile_timeout_ms",
                        "test_timeout_ms", "dedup", "jobs", "seed", "sample_targets", "omega", "top_k"},
                       "config");
    Config c;
    c.base_dir = base_dir;
    try {
        c.corpus = j.value("corpus", c.corpus);
        c.index = j.value("index", c.index);
        c.targets = j.value("targets", c.targets);
        c.out = j.value("out", c.out);
        c.key_side = parse_key_side(j.value("key_side", std::string("post_fix")));
        c.retrieval_n = j.value("retrieval_n", c.retrieval_n);
        c.metric = parse_metric(j.value("metric", std::string("euclidean")));
        c.chunking = j.value("chunking", c.chunking);
        c.rag = j.value("rag", c.rag);
        if (j.contains("embedder")) {
            const auto& e = j["embedder"];
            detail::check_keys(e, {"kind", "dimension", "endpoint", "model", "timeout_ms"}, "embedder");
            c.embedder.kind = e.value("kind", c.embedder.kind);
            c.embedder.dimension = e.value("dimension", c.embedder.dimension);
            c.embedder.endpoint = e.value("endpoint", c.embedder.endpoint);
            c.embedder.model = e.value("model", c.embedder.model);
            c.embedder.timeout_ms = e.value("timeout_ms", c.embedder.timeout_ms);
        }
        if (j.contains("backend")) {
            const auto& b = j["backend"];
            detail::check_keys(b,
                               {"kind", "script", "endpoint", "model", "temperature", "max_tokens", "timeout_ms",
                                "max_retries", "concurrency", "backoff_ms", "api_key_env"},
                               "backend");
            auto& h = c.backend.http;
            c.backend.kind = b.value("kind", c.backend.kind);
            c.backend.script = b.value("script", c.backend.script);
            h.endpoint = b.value("endpoint", h.endpoint);
            h.model = b.value("model", h.model);
            if (b.contains("temperature") && !b["temperature"].is_null()) h.temperature = b["temperature"].get<double>();
            h.max_tokens = b.value("max_tokens", h.max_tokens);
            h.timeout = std::chrono::milliseconds(b.value("timeout_ms", static_cast<long>(h.timeout.count())));
            h.max_retries = b.value("max_retries", h.max_retries);
            h.concurrency = b.value("concurrency", h.concurrency);
            h.backoff_base = std::chrono::milliseconds(b.value("backoff_ms", static_cast<long>(h.backoff_base.count())));
            h.api_key_env = b.value("api_key_env", h.api_key_env);
        }
        c.compile_command = j.value("compile_command", c.compile_command);
        c.test_command = j.value("test_command", c.test_command);
        c.compile_timeout_ms = j.value("compile_timeout_ms", c.compile_timeout_ms);
        c.test_timeout_ms = j.value("test_timeout_ms", c.test_timeout_ms);
        c.dedup = parse_dedup_mode(j.value("dedup", std::string("normalized")));
        c.jobs = j.value("jobs", c.jobs);
        c.seed = j.value("seed", c.seed);
        if (j.contains("sample_targets") && !j["sample_targets"].is_null())
            c.sample_targets = j["sample_targets"].get<std::size_t>();
        c.omega = j.value("omega", c.omega);
        c.top_k = j.value("top_k", c.top_k);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad config value: ") + e.what());
    }
    return c;
}

inline Config load_config(const std::string& path) {
    const auto raw = nlohmann::json::parse(text::read_file(path), nullptr, false);
    if (raw.is_discarded()) throw FormatError("config is not valid JSON: " + path);
    return config_from_json(raw, fs::absolute(path).parent_path());
}

/// Every setting with its effective value; written next to the outputs.
inline ojson config_to_json(const Config& c) {
    ojson j;
    j["corpus"] = c.corpus;
    j["index"] = c.index;
    j["targets"] = c.targets;
    j["key_side"] = c.key_side == KeySide::PostFix ? "post_fix" : "pre_fix";
    j["retrieval_n"] = c.retrieval_n;
    j["metric"] = std::string(to_string(c.metric));
    j["chunking"] = c.chunking;
    j["rag"] = c.rag;
    j["embedder"] = {{"kind", c.embedder.kind}, {"dimension", c.embedder.dimension}, {"model", c.embedder.model}};
    j["backend"] = {{"kind", c.backend.kind}, {"model", c.backend.http.model}};
    if (c.backend.http.temperature) j["backend"]["temperature"] = *c.backend.http.temperature;
    j["dedup"] = to_string(c.dedup);
    j["seed"] = c.seed;
    j["sample_targets"] = c.sample_targets ? ojson(*c.sample_targets) : ojson(nullptr);
    j["omega"] = c.omega;
    j["top_k"] = c.top_k;
    return j;
}

// ---------------------------------------------------------------- targets

enum class Mode { Fixed, Buggy };

inline std::string_view to_string(Mode m) { return m == Mode::Fixed ? "fixed" : "buggy"; }

/// One focal method to mutate. Fixed-mode targets feed the effectiveness,
/// prioritization and fine-tuning stages; buggy-mode targets feed fault
/// localization.
struct Target {
    std::string id;
    std::string bug_id;
    std::string project;
    std::string dataset = "default";
    Mode mode = Mode::Fixed;
    std::string source_path; // resolved
    int start_line = 1;
    int end_line = 0; // 0: end of file
    std::set<std::string> revealing_tests;
    std::set<int> faulty_lines;
    std::string compile_command; // overrides the config when set
    std::string test_command;

    std::string file_name() const { return fs::path(source_path).filename().string(); }
};

inline void check_id(const std::string& id, const std::string& what) {
    if (id.empty()) throw FormatError(what + " id is empty");
    for (char c : id)
        if (text::is_space(c) || c == '/' || c == '\\') throw FormatError("invalid " + what + " id: '" + id + "'");
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::vector<nlohmann::json> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::is_blank(line)) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw FormatError(path + ":" + std::to_string(n) + ": not a JSON object");
        out.push_back(std::move(j));
    }
    return out;
}

inline Target target_from_json(const nlohmann::json& j, const Config& cfg) {
    detail::check_keys(j,
                       {"id", "bug_id", "project", "dataset", "mode", "source_path", "start_line", "end_line",
                        "revealing_tests", "faulty_lines", "compile_command", "test_command"},
                       "target");
    Target t;
    try {
        t.bug_id = j.at("bug_id").get<std::string>();
        const auto mode = j.value("mode", std::string("fixed"));
        if (mode != "fixed" && mode != "buggy") throw FormatError("target mode must be fixed or buggy");
        t.mode = mode == "fixed" ? Mode::Fixed : Mode::Buggy;
        t.id = j.value("id", t.mode == Mode::Fixed ? t.bug_id : t.bug_id + "-buggy");
        t.project = j.value("project", std::string());
        t.dataset = j.value("dataset", t.dataset);
        t.source_path = cfg.path(j.at("source_path").get<std::string>());
        t.start_line = j.value("start_line", 1);
        t.end_line = j.value("end_line", 0);
        for (const auto& s : j.value("revealing_tests", std::vector<std::string>{})) t.revealing_tests.insert(s);
        for (int l : j.value("faulty_lines", std::vector<int>{})) t.faulty_lines.insert(l);
        t.compile_command = j.value("compile_command", std::string());
        t.test_command = j.value("test_command", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad target record: ") + e.what());
    }
    check_id(t.id, "target");
    if (t.start_line < 1 || (t.end_line != 0 && t.end_line < t.start_line))
        throw FormatError("target " + t.id + ": bad line range");
    return t;
}

inline std::vector<Target> load_targets(const Config& cfg) {
    if (cfg.targets.empty()) throw Error("no targets file configured");
    std::vector<Target> out;
    std::set<std::string> ids;
    for (const auto& j : read_jsonl(cfg.path(cfg.targets))) {
        out.push_back(target_from_json(j, cfg));
        if (!ids.insert(out.back().id).second) throw FormatError("duplicate target id: " + out.back().id);
    }
    if (out.empty()) throw Error("targets file has no records");
    if (cfg.sample_targets && *cfg.sample_targets < out.size()) {
        // Seeded subset, kept in file order.
        std::vector<std::size_t> idx(out.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::mt19937_64 rng(cfg.seed);
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng() % (i + 1)]);
        idx.resize(*cfg.sample_targets);
        std::sort(idx.begin(), idx.end());
        std::vector<Target> picked;
        for (auto i : idx) picked.push_back(std::move(out[i]));
        out = std::move(picked);
    }
    return out;
}

/// The program file and the focal method inside it.
struct LoadedTarget {
    std::string file_source;
    FocalMethod method;
};

inline LoadedTarget load_method(Target& t) {
    LoadedTarget lt;
    lt.file_source = text::read_file(t.source_path);
    const auto lines = text::split_lines(lt.file_source);
    if (t.end_line == 0) t.end_line = static_cast<int>(lines.size());
    if (t.end_line > static_cast<int>(lines.size()))
        throw Error("target " + t.id + ": end_line beyond " + std::to_string(lines.size()) + " lines");
    std::vector<std::string> body(lines.begin() + (t.start_line - 1), lines.begin() + t.end_line);
    lt.method = parse_method(text::join_lines(body), t.start_line);
    return lt;
}

inline std::vector<CodeChunk> target_chunks(const FocalMethod& m, bool chunking) {
    return chunking ? chunk_method(m) : std::vector<CodeChunk>{whole_method_chunk(m)};
}

inline std::string chunk_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%02zu", i);
    return buf;
}

inline std::string mutant_id(const std::string& target, std::size_t seq) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "-m%04zu", seq);
    return target + buf;
}

/// Fills `{bug}`, `{target}`, `{base}` and `{ragmut}`; `{src}` and `{dir}`
/// are expanded per program later.
inline std::string command_for(const Config& cfg, const Target& t, const std::string& tmpl) {
    auto s = text::replace_all(tmpl, "{bug}", shell_quote(t.bug_id));
    s = text::replace_all(s, "{target}", shell_quote(t.id));
    s = text::replace_all(s, "{base}", shell_quote(fs::absolute(cfg.base_dir).lexically_normal().string()));
    s = text::replace_all(s, "{ragmut}", shell_quote(cfg.tool_path));
    return s;
}

inline std::string compile_command_for(const Config& cfg, const Target& t) {
    return command_for(cfg, t, t.compile_command.empty() ? cfg.compile_command : t.compile_command);
}
inline std::string test_command_for(const Config& cfg, const Target& t) {
    return command_for(cfg, t, t.test_command.empty() ? cfg.test_command : t.test_command);
}

// ---------------------------------------------------------------- backends

inline std::unique_ptr<EmbeddingBackend> make_embedder(const Config& cfg) {
    if (cfg.embedder.kind == "remote") {
        RemoteEmbedderConfig rc;
        rc.endpoint = cfg.embedder.endpoint;
        rc.model = cfg.embedder.model;
        rc.dimension = cfg.embedder.dimension;
        rc.timeout = std::chrono::milliseconds(cfg.embedder.timeout_ms);
        return std::make_unique<RemoteEmbedder>(rc);
    }
    return std::make_unique<LexicalEmbedder>(cfg.embedder.dimension);
}

inline std::unique_ptr<LlmBackend> make_backend(const Config& cfg) {
    if (cfg.backend.kind == "http") return std::make_unique<HttpBackend>(cfg.backend.http);
    if (cfg.backend.script.empty()) throw Error("mock backend needs a script");
    return std::make_unique<MockBackend>(MockBackend::from_file(cfg.path(cfg.backend.script)));
}

// ---------------------------------------------------------------- generate

struct TargetGenerateStatus {
    std::string target_id;
    int prompts = 0;
    int completed = 0;
    long expected = 0;
    long generated = 0;
    long materialized = 0;
    std::vector<std::string> errors;

    bool ok() const { return completed > 0; }
};

struct GenerateSummary {
    std::vector<TargetGenerateStatus> targets;
    TokenUsage usage;

    std::size_t succeeded() const {
        std::size_t n = 0;
        for (const auto& t : targets) n += t.ok();
        return n;
    }
};

struct RenderedPrompt {
    std::size_t target = 0;
    std::string chunk_id;
    CodeChunk chunk;
    PromptInstance instance;
    std::string text;
    std::vector<ScoredId> retrieved;
    RenderedExamples examples;
};

inline std::string prompt_id(const std::string& target, const std::string& chunk) { return target + "/" + chunk; }

inline ojson prompt_record(const Target& t, const RenderedPrompt& p) {
    ojson j;
    j["prompt_id"] = prompt_id(t.id, p.chunk_id);
    j["target_id"] = t.id;
    j["bug_id"] = t.bug_id;
    j["chunk_id"] = p.chunk_id;
    j["chunk_kind"] = std::string(to_string(p.chunk.kind));
    j["chunk_lines"] = std::vector<int>(p.chunk.line_numbers.begin(), p.chunk.line_numbers.end());
    j["requested_n"] = p.instance.requested_n;
    ojson retrieved = ojson::array();
    for (const auto& r : p.retrieved) retrieved.push_back({{"id", r.id}, {"score", r.score}});
    j["retrieved"] = retrieved;
    ojson ex = ojson::array();
    for (const auto& e : p.examples.examples) ex.push_back(e.source_pair_id);
    j["examples"] = ex;
    ojson skipped = ojson::array();
    for (const auto& s : p.examples.skipped) skipped.push_back({{"id", s.pair_id}, {"reason", s.reason}});
    j["skipped_examples"] = skipped;
    j["prompt_digest"] = prompt_digest(p.text);
    j["prompt"] = p.text;
    return j;
}

inline std::string dump(const ojson& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

inline void write_jsonl(const fs::path& path, const std::vector<ojson>& records) {
    std::string s;
    for (const auto& r : records) s += dump(r) + "\n";
    text::write_file(path.string(), s);
}

/// chunk -> retrieve -> prompt -> complete -> parse -> materialize for every
/// target. Writes prompts.jsonl, manifest.jsonl, mutants/ and generate.json
/// under `out`. A dry run stops after rendering and writes prompts only.
/// Failures stay per target.
inline GenerateSummary run_generate(const Config& cfg, std::vector<Target> targets, const fs::path& out,
                                    const LlmBackend* backend, bool dry_run = false) {
    GenerateSummary summary;
    std::vector<std::optional<LoadedTarget>> loaded(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        summary.targets.push_back({targets[i].id, 0, 0, 0, 0, 0, {}});
        try {
            loaded[i] = load_method(targets[i]);
        } catch (const std::exception& e) {
            summary.targets[i].errors.push_back(e.what());
        }
    }

    std::optional<IngestResult> corpus;
    std::optional<VectorIndex> index;
    std::unique_ptr<EmbeddingBackend> embedder;
    if (cfg.rag) {
        corpus = ingest_corpus(cfg.path(cfg.corpus));
        index = load_index(cfg.path(cfg.index));
        embedder = make_embedder(cfg);
        if (index->backend_id() != embedder->id() || index->dimension() != embedder->dimension())
            throw Error("index was built by " + index->backend_id() + ", configured embedder is " + embedder->id());
        index->set_metric(cfg.metric);
    }

    std::vector<RenderedPrompt> prompts;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!loaded[i]) continue;
        try {
            const auto& m = loaded[i]->method;
            auto chunks = target_chunks(m, cfg.chunking);
            for (std::size_t c = 0; c < chunks.size(); ++c) {
                RenderedPrompt p;
                p.target = i;
                p.chunk_id = chunk_id(c);
                p.chunk = chunks[c];
                if (cfg.rag) {
                    p.retrieved = index->query(embedder->embed(p.chunk.text), static_cast<std::size_t>(cfg.retrieval_n));
                    std::vector<const BugFixPair*> pairs;
                    for (const auto& r : p.retrieved) {
                        const auto* bp = corpus->corpus.find(r.id);
                        if (!bp) throw Error("index entry " + r.id + " is not in the corpus");
                        pairs.push_back(bp);
                    }
                    p.examples = render_examples(pairs);
                }
                p.instance = make_prompt(m, p.chunk, p.examples.examples, p.chunk.loc());
                p.text = p.instance.text();
                prompts.push_back(std::move(p));
            }
        } catch (const std::exception& e) {
            summary.targets[i].errors.push_back(e.what());
        }
    }
    // A target whose prompts failed half-way keeps none of them.
    std::erase_if(prompts, [&](const RenderedPrompt& p) { return !summary.targets[p.target].errors.empty(); });

    fs::create_directories(out);
    std::vector<ojson> prompt_records;
    for (const auto& p : prompts) {
        prompt_records.push_back(prompt_record(targets[p.target], p));
        auto& st = summary.targets[p.target];
        ++st.prompts;
        st.expected += p.instance.requested_n;
    }
    if (dry_run) {
        write_jsonl(out / "prompts.jsonl", prompt_records);
        return summary;
    }
    if (!backend) throw Error("no backend for generation");

    std::vector<std::pair<std::string, std::string>> batch;
    for (const auto& p : prompts) batch.emplace_back(prompt_id(targets[p.target].id, p.chunk_id), p.text);
    const auto results = complete_batch(*backend, batch, cfg.backend.http.concurrency);
    summary.usage = total_usage(results);

    fs::remove_all(out / "mutants");
    std::vector<ojson> manifest;
    std::vector<std::size_t> seq(targets.size(), 0);
    for (std::size_t k = 0; k < prompts.size(); ++k) {
        const auto& p = prompts[k];
        const auto& t = targets[p.target];
        auto& st = summary.targets[p.target];
        auto& rec = prompt_records[k];
        const auto& item = results[k];
        if (!item.ok()) {
            rec["status"] = "error";
            rec["error"] = item.error;
            st.errors.push_back(p.chunk_id + ": " + item.error);
            continue;
        }
        ++st.completed;
        const auto parsed = parse_response(item.completion->text);
        rec["status"] = "ok";
        rec["response"] = item.completion->text;
        rec["prompt_tokens"] = item.completion->prompt_tokens;
        rec["completion_tokens"] = item.completion->completion_tokens;
        rec["retries"] = item.completion->retries;
        rec["parse_failed"] = parsed.parse_failed;
        if (parsed.parse_failed) rec["parse_failure"] = parsed.failure;
        rec["dropped"] = parsed.dropped;
        rec["pairs"] = parsed.pairs.size();
        for (const auto& pair : parsed.pairs) {
            const auto id = mutant_id(t.id, seq[p.target]++);
            auto mat = materialize(loaded[p.target]->file_source, p.chunk, pair);
            ojson m;
            m["mutant_id"] = id;
            m["target_id"] = t.id;
            m["bug_id"] = t.bug_id;
            m["chunk_id"] = p.chunk_id;
            m["precode"] = pair.precode;
            m["aftercode"] = pair.aftercode;
            ++st.generated;
            if (mat.mutant) {
                const auto rel = fs::path("mutants") / id / t.file_name();
                fs::create_directories(out / rel.parent_path());
                text::write_file((out / rel).string(), mat.mutant->source);
                m["target_line"] = mat.mutant->target_line;
                m["original_line"] = mat.mutant->original_line_text;
                m["mutated_line"] = mat.mutant->mutated_line_text;
                m["file"] = rel.generic_string();
                m["rejection"] = nullptr;
                ++st.materialized;
            } else {
                m["target_line"] = nullptr;
                m["rejection"] = mat.rejection;
            }
            manifest.push_back(std::move(m));
        }
    }
    write_jsonl(out / "prompts.jsonl", prompt_records);
    write_jsonl(out / "manifest.jsonl", manifest);

    ojson sj;
    ojson ts = ojson::array();
    for (const auto& st : summary.targets)
        ts.push_back({{"target_id", st.target_id},
                      {"prompts", st.prompts},
                      {"completed", st.completed},
                      {"expected", st.expected},
                      {"generated", st.generated},
                      {"materialized", st.materialized},
                      {"errors", st.errors}});
    sj["targets"] = ts;
    sj["succeeded"] = summary.succeeded();
    sj["failed"] = summary.targets.size() - summary.succeeded();
    sj["usage"] = {{"requests", summary.usage.requests},
                   {"failures", summary.usage.failures},
                   {"prompt_tokens", summary.usage.prompt_tokens},
                   {"completion_tokens", summary.usage.completion_tokens}};
    sj["config"] = config_to_json(cfg);
    text::write_file((out / "generate.json").string(), sj.dump(2) + "\n");
    return summary;
}

// ---------------------------------------------------------------- validate

struct ManifestEntry {
    std::string mutant_id;
    std::string target_id;
    std::string bug_id;
    std::string chunk_id;
    MutationPair pair;
    std::optional<int> target_line;
    std::string original_line;
    std::string mutated_line;
    std::string file; // relative to the output directory
    std::string rejection;
};

inline std::vector<ManifestEntry> load_manifest(const fs::path& out) {
    std::vector<ManifestEntry> v;
    for (const auto& j : read_jsonl((out / "manifest.jsonl").string())) {
        ManifestEntry e;
        e.mutant_id = j.at("mutant_id").get<std::string>();
        e.target_id = j.at("target_id").get<std::string>();
        e.bug_id = j.at("bug_id").get<std::string>();
        e.chunk_id = j.at("chunk_id").get<std::string>();
        e.pair = {j.at("precode").get<std::string>(), j.at("aftercode").get<std::string>()};
        if (!j["target_line"].is_null()) {
            e.target_line = j["target_line"].get<int>();
            e.original_line = j.at("original_line").get<std::string>();
            e.mutated_line = j.at("mutated_line").get<std::string>();
            e.file = j.at("file").get<std::string>();
        } else {
            e.rejection = j.at("rejection").get<std::string>();
        }
        v.push_back(std::move(e));
    }
    return v;
}

/// Expected mutant count per target: the sum of requested_n over its prompts.
inline std::map<std::string, long> load_expected(const fs::path& out) {
    std::map<std::string, long> e;
    for (const auto& j : read_jsonl((out / "prompts.jsonl").string()))
        e[j.at("target_id").get<std::string>()] += j.at("requested_n").get<long>();
    return e;
}

struct TargetValidity {
    ValidityLedger ledger;
    std::map<std::string, std::string> duplicate_reason;
    std::map<std::string, std::string> rejected;
    bool compile_checked = false;
};

inline ojson validity_record(const Target& t, const TargetValidity& v) {
    const auto r = validity_metrics(v.ledger);
    auto opt = [](const std::optional<double>& x) { return x ? ojson(*x) : ojson(nullptr); };
    ojson j;
    j["target_id"] = t.id;
    j["bug_id"] = t.bug_id;
    j["dataset"] = t.dataset;
    j["expected"] = v.ledger.expected;
    j["generated"] = v.ledger.generated;
    j["duplicates"] = v.duplicate_reason;
    j["rejected"] = v.rejected;
    j["compilable"] = v.ledger.compilable;
    j["timed_out"] = v.ledger.timed_out;
    j["useful"] = v.ledger.useful();
    j["compile_check"] = v.compile_checked ? "command" : "skipped";
    j["rates"] = {{"generation", opt(r.generation_rate)},
                  {"nonduplicate", opt(r.nonduplicate_rate)},
                  {"compilable", opt(r.compilable_rate)}};
    return j;
}

/// Sets A, D and C per target. Without a compile command every
/// materialized mutant counts as compilable; rejected pairs never do.
inline std::vector<TargetValidity> run_validate(const Config& cfg, const std::vector<Target>& targets,
                                                const fs::path& out) {
    const auto manifest = load_manifest(out);
    const auto expected = load_expected(out);
    std::vector<TargetValidity> result(targets.size());
    fs::remove_all(out / "compile");
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        auto& v = result[i];
        v.ledger.bug_id = t.id;
        auto e = expected.find(t.id);
        v.ledger.expected = e == expected.end() ? 0 : e->second;
        std::vector<Mutant> materialized;
        std::vector<const ManifestEntry*> entries;
        for (const auto& m : manifest) {
            if (m.target_id != t.id) continue;
            v.ledger.generated.push_back(m.mutant_id);
            if (!m.target_line) {
                v.rejected[m.mutant_id] = m.rejection;
                continue;
            }
            Mutant mu;
            mu.id = m.mutant_id;
            mu.target_line = *m.target_line;
            mu.original_line_text = m.original_line;
            mu.mutated_line_text = m.mutated_line;
            materialized.push_back(std::move(mu));
            entries.push_back(&m);
        }
        const auto d = dedup(materialized, cfg.dedup);
        for (std::size_t k = 0; k < materialized.size(); ++k)
            if (d.duplicate[k]) {
                v.ledger.duplicates.insert(materialized[k].id);
                v.duplicate_reason[materialized[k].id] = d.reason[k];
            }
        const auto cmd = compile_command_for(cfg, t);
        v.compile_checked = !cmd.empty();
        if (!v.compile_checked) {
            for (const auto& m : materialized) v.ledger.compilable.insert(m.id);
            continue;
        }
        std::vector<CompileResult> cr(entries.size());
        parallel_for(entries.size(), cfg.workers(), [&](std::size_t k) {
            cr[k] = check_compile((out / entries[k]->file).string(), cmd,
                                  std::chrono::milliseconds(cfg.compile_timeout_ms));
        });
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& id = entries[k]->mutant_id;
            if (cr[k].compilable) v.ledger.compilable.insert(id);
            if (cr[k].timed_out) v.ledger.timed_out.insert(id);
            if (!cr[k].stderr_text.empty()) {
                fs::create_directories(out / "compile");
                text::write_file((out / "compile" / (id + ".err")).string(), cr[k].stderr_text);
            }
        }
    }
    std::vector<ojson> records;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        result[i].ledger.check();
        records.push_back(validity_record(targets[i], result[i]));
    }
    write_jsonl(out / "validity.jsonl", records);
    return result;
}

/// Useful (C - D) mutant ids per target, from a previous validate run.
inline std::map<std::string, std::vector<std::string>> load_useful(const fs::path& out) {
    std::map<std::string, std::vector<std::string>> u;
    for (const auto& j : read_jsonl((out / "validity.jsonl").string()))
        u[j.at("target_id").get<std::string>()] = j.at("useful").get<std::vector<std::string>>();
    return u;
}

// ---------------------------------------------------------------- execute

struct TargetExecution {
    KillMatrix matrix;
    std::set<std::string> original_failing;
    std::vector<std::string> timed_out; // mutants cut off by the timeout
    std::vector<std::string> partial;   // mutants whose runner output missed tests
};

inline std::string outcomes_to_string(const TestOutcomeVector& v) {
    std::string s;
    for (const auto& [t, p] : v.passed) s += t + (p ? " PASS\n" : " FAIL\n");
    return s;
}

/// Runs the suite on the original program, then on each useful mutant in
/// its own directory with twice the original's wall time as the limit.
inline TargetExecution execute_target(const Config& cfg, const Target& t, const std::vector<std::string>& useful,
                                      const std::map<std::string, const ManifestEntry*>& by_id, const fs::path& out) {
    const auto cmd = test_command_for(cfg, t);
    if (cmd.empty()) throw Error("no test command configured for " + t.id);
    std::chrono::milliseconds elapsed{0};
    auto original = run_suite(t.id, t.source_path, cmd, std::chrono::milliseconds(cfg.test_timeout_ms), nullptr, &elapsed);
    if (original.timed_out) throw Error("original suite of " + t.id + " timed out");
    const auto tests = original.test_ids();
    const auto limit = mutant_timeout(elapsed);
    std::vector<TestOutcomeVector> runs(useful.size());
    parallel_for(useful.size(), cfg.workers(), [&](std::size_t k) {
        const auto* m = by_id.at(useful[k]);
        runs[k] = run_suite(m->mutant_id, (out / m->file).string(), cmd, limit, &tests);
    });
    TargetExecution ex;
    ex.matrix = build_kill_matrix(original, runs, t.id);
    ex.original_failing = original.failing();
    for (const auto& r : runs) {
        if (r.timed_out) ex.timed_out.push_back(r.program_id);
        if (!r.missing.empty()) ex.partial.push_back(r.program_id);
    }
    fs::create_directories(out / "matrices");
    fs::create_directories(out / "outcomes");
    save_matrix(ex.matrix, (out / "matrices" / (t.id + ".matrix")).string());
    text::write_file((out / "outcomes" / (t.id + ".original")).string(), outcomes_to_string(original));
    return ex;
}

inline std::vector<TargetExecution> run_execute(const Config& cfg, const std::vector<Target>& targets,
                                                const fs::path& out) {
    const auto manifest = load_manifest(out);
    const auto useful = load_useful(out);
    std::map<std::string, const ManifestEntry*> by_id;
    for (const auto& m : manifest) by_id[m.mutant_id] = &m;
    std::vector<TargetExecution> result;
    std::vector<ojson> log;
    for (const auto& t : targets) {
        auto u = useful.find(t.id);
        result.push_back(execute_target(cfg, t, u == useful.end() ? std::vector<std::string>{} : u->second, by_id, out));
        const auto& ex = result.back();
        log.push_back({{"target_id", t.id},
                       {"mutants", ex.matrix.rows()},
                       {"tests", ex.matrix.cols()},
                       {"original_failing", ex.original_failing},
                       {"timed_out", ex.timed_out},
                       {"partial", ex.partial}});
    }
    write_jsonl(out / "execution.jsonl", log);
    return result;
}

/// Loads a matrix produced elsewhere and restricts it to the useful rows.
/// The original outcome file is optional; without it the failing set is
/// empty for fixed targets and the revealing tests for buggy ones.
inline TargetExecution load_execution(const Target& t, const std::vector<std::string>& useful, const fs::path& dir) {
    TargetExecution ex;
    const auto mpath = dir / "matrices" / (t.id + ".matrix");
    const auto alt = dir / (t.id + ".matrix");
    const auto path = fs::exists(mpath) ? mpath : alt;
    if (!fs::exists(path)) throw Error("missing matrix for " + t.id + " and no test runner configured");
    auto km = load_matrix(path.string());
    for (const auto& id : useful)
        if (!std::binary_search(km.mutants().begin(), km.mutants().end(), id))
            throw Error("matrix for " + t.id + " lacks useful mutant " + id);
    ex.matrix = km.select_rows(useful);
    ex.matrix.bug_id = t.id;
    for (const auto& o : {dir / "outcomes" / (t.id + ".original"), dir / (t.id + ".original")})
        if (fs::exists(o)) {
            auto v = outcome_from_output(t.id, text::read_file(o.string()), false);
            ex.original_failing = v.failing();
            return ex;
        }
    if (t.mode == Mode::Buggy) ex.original_failing = t.revealing_tests;
    return ex;
}

// ---------------------------------------------------------------- report

/// Rows of several targets of one bug stacked into one matrix over the
/// shared test suite.
inline KillMatrix merge_rows(const std::vector<const KillMatrix*>& parts, const std::string& bug_id) {
    std::vector<std::string> rows;
    for (const auto* p : parts) {
        if (p->tests() != parts.front()->tests()) throw Error("targets of bug " + bug_id + " ran different tests");
        rows.insert(rows.end(), p->mutants().begin(), p->mutants().end());
    }
    KillMatrix km(rows, parts.front()->tests());
    km.bug_id = bug_id;
    for (const auto* p : parts)
        for (std::size_t m = 0; m < p->rows(); ++m)
            for (std::size_t t = 0; t < p->cols(); ++t) km.set(p->mutants()[m], p->tests()[t], p->kill(m, t));
    return km;
}

inline std::string fmt(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}
inline std::string pct(const std::optional<double>& v) { return v ? fmt(*v * 100.0, 2) + "%" : "-"; }
inline std::string num(const std::optional<double>& v, int prec) { return v ? fmt(*v, prec) : "-"; }
inline ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

struct ReportInputs {
    std::vector<Target> targets;
    std::vector<TargetValidity> validity;
    std::vector<TargetExecution> execution;
    std::vector<ManifestEntry> manifest;
};

struct BugGroup {
    std::string bug_id;
    std::string dataset;
    std::vector<std::size_t> targets;
};

inline std::vector<BugGroup> group_bugs(const std::vector<Target>& targets, Mode mode) {
    std::vector<BugGroup> groups;
    std::map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i].mode != mode) continue;
        auto [it, fresh] = at.emplace(targets[i].bug_id, groups.size());
        if (fresh) groups.push_back({targets[i].bug_id, targets[i].dataset, {}});
        groups[it->second].targets.push_back(i);
    }
    return groups;
}

inline std::vector<std::string> datasets_of(const std::vector<Target>& targets) {
    std::vector<std::string> ds;
    for (const auto& t : targets)
        if (std::find(ds.begin(), ds.end(), t.dataset) == ds.end()) ds.push_back(t.dataset);
    return ds;
}

struct Report {
    std::map<std::string, std::string> files; // name -> content
    std::vector<BugContext> fixed_bugs;       // for fine-tuning export
};

inline std::string join_ids(const std::vector<std::string>& v, char sep = ' ') {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : std::string(1, sep)) + x;
    return s;
}

/// Builds every report table from validated and executed targets. Output
/// depends only on ids, kill cells and outcomes, never on timing or paths.
inline Report build_report(const Config& cfg, const ReportInputs& in) {
    Report rep;
    const auto datasets = datasets_of(in.targets);
    std::vector<std::string> rows = datasets;
    if (datasets.size() > 1) rows.push_back("all");
    auto in_row = [&](const std::string& row, const std::string& ds) { return row == "all" || row == ds; };

    // Table 2: validity, pooled per dataset.
    {
        std::string s = "dataset\tExp.\tGen.\tGe. R.\tND. R.\tCom. R.\n";
        std::string per = "target\tbug\tmode\tExp.\tGen.\tDup.\tComp.\tTimeout\tRejected\tUseful\tGe. R.\tND. R.\tCom. R.\n";
        for (const auto& row : rows) {
            std::vector<ValidityLedger> ls;
            for (std::size_t i = 0; i < in.targets.size(); ++i)
                if (in_row(row, in.targets[i].dataset)) ls.push_back(in.validity[i].ledger);
            const auto r = validity_metrics(ls);
            s += row + "\t" + std::to_string(r.expected) + "\t" + std::to_string(r.generated) + "\t" +
                 pct(r.generation_rate) + "\t" + pct(r.nonduplicate_rate) + "\t" + pct(r.compilable_rate) + "\n";
        }
        for (std::size_t i = 0; i < in.targets.size(); ++i) {
            const auto& v = in.validity[i];
            const auto r = validity_metrics(v.ledger);
            per += in.targets[i].id + "\t" + in.targets[i].bug_id + "\t" + std::string(to_string(in.targets[i].mode)) +
                   "\t" + std::to_string(v.ledger.expected) + "\t" + std::to_string(v.ledger.generated.size()) + "\t" +
                   std::to_string(v.ledger.duplicates.size()) + "\t" + std::to_string(v.ledger.compilable.size()) +
                   "\t" + std::to_string(v.ledger.timed_out.size()) + "\t" + std::to_string(v.rejected.size()) +
                   "\t" + std::to_string(v.ledger.useful().size()) + "\t" + pct(r.generation_rate) + "\t" +
                   pct(r.nonduplicate_rate) + "\t" + pct(r.compilable_rate) + "\n";
        }
        rep.files["table2_validity.tsv"] = s;
        rep.files["validity_by_target.tsv"] = per;
    }

    ojson summary;
    summary["config"] = config_to_json(cfg);
    summary["conventions"] = {
        {"ochiai_empty_set", "0"},
        {"bug_without_useful_mutants", "excluded from AOC and O>=0.8"},
        {"rbd", "macro = mean over bugs, micro = pooled over revealing tests"},
        {"mutation_score_and_coupling", "pooled over the useful mutants of the dataset"},
        {"duplicates", to_string(cfg.dedup) + " line text, keyed by target line"},
        {"muse_p2f_zero", "penalty term dropped"},
        {"metallaxis_zero_denominator", "0"},
        {"mbfl_statements", "non-blank lines of the buggy focal method"},
        {"mar", "mean over bugs of the mean expected rank of all faulty statements"},
        {"mar_first_rank", "mean over bugs of the first faulty statement's expected rank (equals MFR)"},
        {"hyb", "omega * kills/|M| + (1 - omega) * pairs/|P|"},
        {"apfd_faults", "one fault per bug, detected by its revealing tests"},
        {"tie_break", "smallest test id"},
    };

    // Fixed-mode bugs: one context per bug over all its targets.
    const auto fixed = group_bugs(in.targets, Mode::Fixed);
    std::vector<std::string> fixed_ds;
    for (const auto& g : fixed) {
        std::vector<const KillMatrix*> parts;
        BugContext ctx;
        ctx.bug_id = g.bug_id;
        for (auto i : g.targets) {
            parts.push_back(&in.execution[i].matrix);
            ctx.revealing_tests.insert(in.targets[i].revealing_tests.begin(), in.targets[i].revealing_tests.end());
        }
        if (ctx.revealing_tests.empty()) throw Error("bug " + g.bug_id + " lists no revealing tests");
        ctx.matrix = merge_rows(parts, g.bug_id);
        ctx.check();
        rep.fixed_bugs.push_back(std::move(ctx));
        fixed_ds.push_back(g.dataset);
    }

    // Table 3: effectiveness.
    {
        std::string s = "dataset\tbugs\tMS\tR. B. D.\tR. B. D. (micro)\tCoup.\tAvg. O.\tO.>=0.8\tno mutants\n";
        std::string per = "bug\tdataset\tuseful\tkilled\tMS\tCoup.\tOchiai\tR. B. D.\n";
        ojson tj = ojson::object();
        for (const auto& row : rows) {
            std::vector<BugContext> ctxs;
            for (std::size_t b = 0; b < rep.fixed_bugs.size(); ++b)
                if (in_row(row, fixed_ds[b])) ctxs.push_back(rep.fixed_bugs[b]);
            if (ctxs.empty()) continue;
            const auto e = effectiveness(ctxs);
            s += row + "\t" + std::to_string(ctxs.size()) + "\t" + pct(e.mutation_score) + "\t" + pct(e.rbd.macro) +
                 "\t" + pct(e.rbd.micro) + "\t" + pct(e.coupling_rate) + "\t" + pct(e.aoc) + "\t" +
                 std::to_string(e.high_similarity) + "\t" + std::to_string(e.bugs_without_mutants) + "\n";
            tj[row] = {{"bugs", ctxs.size()},
                       {"mutation_score", opt_json(e.mutation_score)},
                       {"rbd_macro", e.rbd.macro},
                       {"rbd_micro", e.rbd.micro},
                       {"coupling_rate", opt_json(e.coupling_rate)},
                       {"aoc", opt_json(e.aoc)},
                       {"high_similarity", e.high_similarity},
                       {"bugs_without_mutants", e.bugs_without_mutants}};
            if (row != "all")
                for (std::size_t b = 0; b < ctxs.size(); ++b) {
                    const auto& be = e.bugs[b];
                    std::size_t killed = 0;
                    for (std::size_t m = 0; m < ctxs[b].matrix.rows(); ++m) killed += ctxs[b].matrix.killed(m);
                    per += ctxs[b].bug_id + "\t" + row + "\t" + std::to_string(ctxs[b].matrix.rows()) + "\t" +
                           std::to_string(killed) + "\t" + pct(be.mutation_score) + "\t" + pct(be.coupling_rate) +
                           "\t" + num(be.ochiai, 4) + "\t" + pct(e.rbd.per_bug[b]) + "\n";
                }
        }
        rep.files["table3_effectiveness.tsv"] = s;
        rep.files["effectiveness_by_bug.tsv"] = per;
        summary["effectiveness"] = tj;
    }

    // Table 4: prioritization.
    {
        const std::vector<std::pair<std::string, Strategy>> strategies{
            {"GRK", Strategy::GRK}, {"GRD", Strategy::GRD}, {"HYB-" + fmt(cfg.omega, 2), Strategy::HYB}};
        std::string s = "dataset\tbugs";
        for (const auto& [name, _] : strategies) s += "\t" + name;
        s += "\n";
        std::string orders = "bug\tstrategy\tAPFD\torder\n";
        std::vector<std::vector<double>> apfds(rep.fixed_bugs.size());
        for (std::size_t b = 0; b < rep.fixed_bugs.size(); ++b) {
            const auto& ctx = rep.fixed_bugs[b];
            for (const auto& [name, strat] : strategies) {
                const auto suite = prioritize(ctx.matrix, strat, cfg.omega);
                const double a = apfd(suite.order, {ctx.revealing_tests});
                apfds[b].push_back(a);
                orders += ctx.bug_id + "\t" + name + "\t" + fmt(a, 4) + "\t" + join_ids(suite.order, ',') + "\n";
            }
        }
        ojson tj = ojson::object();
        for (const auto& row : rows) {
            std::vector<double> sum(strategies.size(), 0.0);
            std::size_t n = 0;
            for (std::size_t b = 0; b < rep.fixed_bugs.size(); ++b) {
                if (!in_row(row, fixed_ds[b])) continue;
                ++n;
                for (std::size_t k = 0; k < strategies.size(); ++k) sum[k] += apfds[b][k];
            }
            if (n == 0) continue;
            s += row + "\t" + std::to_string(n);
            ojson r;
            for (std::size_t k = 0; k < strategies.size(); ++k) {
                s += "\t" + fmt(sum[k] / static_cast<double>(n), 4);
                r[strategies[k].first] = sum[k] / static_cast<double>(n);
            }
            s += "\n";
            tj[row] = r;
        }
        rep.files["table4_tcp.tsv"] = s;
        rep.files["tcp_orders.tsv"] = orders;
        summary["tcp"] = tj;
    }

    // Tables 5 and 6: fault localization on buggy-mode bugs.
    {
        std::map<std::string, std::string> line_of;
        std::map<std::string, const ManifestEntry*> by_id;
        for (const auto& m : in.manifest) by_id[m.mutant_id] = &m;
        struct Loc {
            std::string dataset;
            FLBugReport muse, metallaxis;
        };
        std::vector<Loc> locs;
        std::vector<std::string> skipped;
        std::string rankings = "bug\tmethod\tstatement\ttarget\tline\tscore\trank\tfaulty\n";
        for (const auto& g : group_bugs(in.targets, Mode::Buggy)) {
            // Statements: non-blank method lines, numbered across the bug's targets.
            std::map<std::pair<std::size_t, int>, int> stmt;
            std::vector<std::pair<std::size_t, int>> stmt_at{{0, 0}};
            std::set<int> statements, faulty;
            std::vector<const KillMatrix*> parts;
            std::set<std::string> failing;
            int missing_ids = 0;
            for (auto i : g.targets) {
                Target t = in.targets[i];
                const auto lt = load_method(t);
                for (int l : lt.method.lines) {
                    if (text::is_blank(lt.method.line_text(l))) continue;
                    const int s = static_cast<int>(stmt_at.size());
                    stmt[{i, l}] = s;
                    stmt_at.push_back({i, l});
                    statements.insert(s);
                }
                for (int f : t.faulty_lines) {
                    auto it = stmt.find({i, f});
                    faulty.insert(it == stmt.end() ? --missing_ids : it->second);
                }
                parts.push_back(&in.execution[i].matrix);
                failing.insert(in.execution[i].original_failing.begin(), in.execution[i].original_failing.end());
            }
            if (faulty.empty()) {
                skipped.push_back(g.bug_id + ": no faulty lines listed");
                continue;
            }
            const auto km = merge_rows(parts, g.bug_id);
            std::map<std::string, int> statement_of;
            for (const auto& id : km.mutants()) {
                const auto* m = by_id.at(id);
                std::size_t ti = 0;
                for (auto i : g.targets)
                    if (in.targets[i].id == m->target_id) ti = i;
                statement_of[id] = stmt.at({ti, *m->target_line});
            }
            FLStats st;
            try {
                st = fl_stats(km, failing, statement_of);
            } catch (const Error& e) {
                skipped.push_back(g.bug_id + ": " + e.what());
                continue;
            }
            Loc loc{g.dataset, {g.bug_id, rank(aggregate(st, FLMethod::Muse, statements)), faulty},
                    {g.bug_id, rank(aggregate(st, FLMethod::Metallaxis, statements)), faulty}};
            for (const auto* r : {&loc.muse, &loc.metallaxis})
                for (const auto& rs : r->ranking) {
                    const auto [ti, line] = stmt_at[static_cast<std::size_t>(rs.statement)];
                    rankings += g.bug_id + "\t" + (r == &loc.muse ? "muse" : "metallaxis") + "\t" +
                                std::to_string(rs.statement) + "\t" + in.targets[ti].id + "\t" + std::to_string(line) +
                                "\t" + fmt(rs.score, 6) + "\t" + fmt(rs.expected_rank, 1) + "\t" +
                                (faulty.count(rs.statement) ? "1" : "0") + "\n";
                }
            locs.push_back(std::move(loc));
        }
        std::string s = "dataset\tmethod\tbugs";
        for (int k : cfg.top_k) s += "\tTop-" + std::to_string(k);
        s += "\tMAR\tMFR\tMAR (first rank)\tmissing faulty\texcluded\n";
        ojson tj = ojson::object();
        for (const auto& row : rows) {
            std::vector<FLBugReport> muse, metallaxis;
            for (const auto& l : locs)
                if (in_row(row, l.dataset)) {
                    muse.push_back(l.muse);
                    metallaxis.push_back(l.metallaxis);
                }
            if (muse.empty()) continue;
            for (const auto& [name, reports] : {std::pair{"MUSE", &muse}, std::pair{"Metallaxis", &metallaxis}}) {
                const auto m = fl_metrics(*reports, cfg.top_k);
                s += row + "\t" + name + "\t" + std::to_string(m.bugs);
                ojson r;
                for (int k : cfg.top_k) {
                    s += "\t" + std::to_string(m.top_k.at(k));
                    r["top_" + std::to_string(k)] = m.top_k.at(k);
                }
                s += "\t" + num(m.mar, 2) + "\t" + num(m.mfr, 2) + "\t" + num(m.mar_first_rank, 2) + "\t" +
                     std::to_string(m.missing_faulty) + "\t" + std::to_string(m.excluded_bugs.size()) + "\n";
                r["mar"] = opt_json(m.mar);
                r["mfr"] = opt_json(m.mfr);
                r["mar_first_rank"] = opt_json(m.mar_first_rank);
                r["missing_faulty"] = m.missing_faulty;
                r["excluded_bugs"] = m.excluded_bugs;
                tj[row][name] = r;
            }
        }
        rep.files["table5_mbfl.tsv"] = s;
        rep.files["mbfl_rankings.tsv"] = rankings;
        summary["mbfl"] = tj;
        summary["mbfl_skipped_bugs"] = skipped;
    }

    ojson vj = ojson::object();
    for (const auto& row : rows) {
        std::vector<ValidityLedger> ls;
        for (std::size_t i = 0; i < in.targets.size(); ++i)
            if (in_row(row, in.targets[i].dataset)) ls.push_back(in.validity[i].ledger);
        const auto r = validity_metrics(ls);
        vj[row] = {{"expected", r.expected},
                   {"generated", r.generated},
                   {"generation_rate", opt_json(r.generation_rate)},
                   {"nonduplicate_rate", opt_json(r.nonduplicate_rate)},
                   {"compilable_rate", opt_json(r.compilable_rate)}};
    }
    summary["validity"] = vj;
    rep.files["summary.json"] = summary.dump(2) + "\n";
    return rep;
}

inline void write_report(const Report& rep, const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const auto& [name, content] : rep.files) text::write_file((dir / name).string(), content);
}

/// validate -> execute (or load matrices) -> every metric table.
/// `matrices` names a directory of precomputed matrices; when empty the
/// configured test runner is used, falling back to matrices already under
/// `out`.
inline Report run_evaluate(const Config& cfg, const std::vector<Target>& targets, const fs::path& out,
                           const std::string& matrices = {}) {
    ReportInputs in;
    in.targets = targets;
    for (auto& t : in.targets) load_method(t); // resolves end_line
    in.validity = run_validate(cfg, in.targets, out);
    in.manifest = load_manifest(out);
    const auto useful = load_useful(out);
    std::map<std::string, const ManifestEntry*> by_id;
    for (const auto& m : in.manifest) by_id[m.mutant_id] = &m;
    std::vector<ojson> log;
    for (const auto& t : in.targets) {
        const auto& u = useful.at(t.id);
        if (!matrices.empty()) in.execution.push_back(load_execution(t, u, matrices));
        else if (!test_command_for(cfg, t).empty()) in.execution.push_back(execute_target(cfg, t, u, by_id, out));
        else in.execution.push_back(load_execution(t, u, out));
    }
    return build_report(cfg, in);
}

// ---------------------------------------------------------------- fine-tuning export

/// Coupled mutants of fixed-mode bugs as training instances.
inline SftExport run_export_sft(const Config& cfg, const std::vector<Target>& targets, const fs::path& out,
                                const Report& rep, const SftOptions& opt) {
    std::map<std::string, SftContext> contexts;
    std::map<std::string, const Target*> by_target;
    std::map<std::string, LoadedTarget> loaded;
    for (const auto& t : targets) by_target[t.id] = &t;
    for (const auto& j : read_jsonl((out / "prompts.jsonl").string())) {
        const auto tid = j.at("target_id").get<std::string>();
        auto tt = by_target.find(tid);
        if (tt == by_target.end() || tt->second->mode != Mode::Fixed) continue;
        if (!loaded.count(tid)) {
            Target t = *tt->second;
            loaded.emplace(tid, load_method(t));
        }
        SftContext c;
        c.bug_id = tt->second->bug_id;
        c.chunk_id = j.at("chunk_id").get<std::string>();
        c.project = tt->second->project;
        c.prompt = j.at("prompt").get<std::string>();
        for (int l : j.at("chunk_lines").get<std::vector<int>>()) c.chunk.line_numbers.insert(l);
        c.original_source = loaded.at(tid).file_source;
        contexts[context_key(tid, c.chunk_id)] = std::move(c);
    }
    std::set<std::string> coupled;
    for (const auto& ctx : rep.fixed_bugs)
        for (const auto& id : coupled_mutants(ctx)) coupled.insert(id);
    std::set<std::string> useful;
    for (const auto& ctx : rep.fixed_bugs) useful.insert(ctx.matrix.mutants().begin(), ctx.matrix.mutants().end());
    std::vector<SftCandidate> cands;
    for (const auto& m : load_manifest(out)) {
        if (!useful.count(m.mutant_id)) continue;
        cands.push_back({m.mutant_id, context_key(m.target_id, m.chunk_id), m.pair, coupled.count(m.mutant_id) > 0});
    }
    (void)cfg;
    return export_sft(cands, contexts, opt);
}

} // namespace ragmut::pipeline
