#include "ragmut/pipeline.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

using namespace ragmut;
using namespace ragmut::pipeline;

namespace {

const std::string kClamp = "public static int clamp(int v, int lo, int hi) {\n"
                           "    if (v < lo) {\n"
                           "        return lo;\n"
                           "    }\n"
                           "    if (v > hi) {\n"
                           "        return hi;\n"
                           "    }\n"
                           "    return v;\n"
                           "}\n";

// Passes a test when the whitespace-free source contains its snippet.
const std::string kRunner = "flat=$(tr -d ' \\t\\n' < \"$2\")\n"
                            "while read -r id s; do\n"
                            "  case \"$flat\" in *\"$s\"*) echo \"$id PASS\" ;; *) echo \"$id FAIL\" ;; esac\n"
                            "done < \"$1\"\n";

const std::string kTests = "lowGuard if(v<lo){\nhighGuard if(v>hi){\nidentity returnv;\n";

class Replies final : public LlmBackend {
public:
    explicit Replies(std::string reply) : reply_(std::move(reply)) {}
    std::string id() const override { return "fixed-reply"; }
    Completion complete(const std::string&) const override { return {reply_, 10, 5, 0}; }

private:
    std::string reply_;
};

class Down final : public LlmBackend {
public:
    std::string id() const override { return "down"; }
    Completion complete(const std::string&) const override {
        throw LlmError(LlmError::Kind::Exhausted, "connection refused", 503, 3);
    }
};

const std::string kReply = "<json>["
                           "{\"precode\":\"if (v > hi) {\",\"aftercode\":\"if (v >= hi) {\"},"
                           "{\"precode\":\"if (v > hi) {\",\"aftercode\":\"if (v >= hi) {\"},"
                           "{\"precode\":\"return v;\",\"aftercode\":\"return -v;\"},"
                           "{\"precode\":\"return lo;\",\"aftercode\":\"return lo + 0;\"}"
                           "]</json>";

struct Workspace {
    fs::path dir;

    Workspace() {
        dir = fs::temp_directory_path() /
              ("ragmut_pipeline_" + std::to_string(getpid()) + "_" +
               ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir / "src");
        text::write_file((dir / "src" / "Clamp.java").string(), kClamp);
        text::write_file((dir / "run.sh").string(), kRunner);
        text::write_file((dir / "clamp.tests").string(), kTests);
        text::write_file((dir / "targets.jsonl").string(),
                         "{\"bug_id\":\"clamp\",\"project\":\"p\",\"source_path\":\"src/Clamp.java\","
                         "\"revealing_tests\":[\"highGuard\"]}\n");
        text::write_file((dir / "corpus.jsonl").string(),
                         "{\"id\":\"a\",\"pre_fix_code\":\"return a - b;\\n\",\"post_fix_code\":\"return a + b;\\n\"}\n"
                         "{\"id\":\"b\",\"pre_fix_code\":\"if (x >= 0) {\\n\",\"post_fix_code\":\"if (x > 0) {\\n\"}\n");
    }
    ~Workspace() { fs::remove_all(dir); }

    Config config(nlohmann::json extra = nlohmann::json::object()) const {
        nlohmann::json j = {{"targets", "targets.jsonl"}, {"corpus", "corpus.jsonl"}, {"out", "out"}, {"rag", false}};
        j.update(extra);
        return config_from_json(j, dir);
    }
    fs::path out() const { return dir / "out"; }
};

std::string read_dir(const fs::path& d) {
    std::string all;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(d)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) all += f.filename().string() + "\n" + text::read_file(f.string());
    return all;
}

} // namespace

TEST(Config, Defaults) {
    const auto c = config_from_json(nlohmann::json::object(), "/base");
    EXPECT_EQ(c.retrieval_n, 6);
    EXPECT_EQ(c.metric, Metric::Euclidean);
    EXPECT_EQ(c.key_side, KeySide::PostFix);
    EXPECT_TRUE(c.chunking);
    EXPECT_TRUE(c.rag);
    EXPECT_DOUBLE_EQ(c.omega, 0.5);
    EXPECT_EQ(c.top_k, (std::vector<int>{1, 3, 5}));
    EXPECT_EQ(c.path("x/y.jsonl"), "/base/x/y.jsonl");
    EXPECT_EQ(c.path("/abs/z"), "/abs/z");
}

TEST(Config, Rejections) {
    EXPECT_THROW(config_from_json({{"retreival_n", 3}}, "."), FormatError);
    EXPECT_THROW(config_from_json({{"backend", {{"kind", "mock"}, {"bogus", 1}}}}, "."), FormatError);
    EXPECT_THROW(config_from_json({{"metric", "manhattan"}}, "."), Error);
    EXPECT_THROW(config_from_json({{"retrieval_n", 0}}, ".").validate(), Error);
    EXPECT_THROW(config_from_json({{"omega", 1.5}}, ".").validate(), Error);
    EXPECT_NO_THROW(config_from_json({{"retrieval_n", 1}}, ".").validate());
}

TEST(Targets, IdsAndValidation) {
    const auto cfg = config_from_json(nlohmann::json::object(), "/base");
    auto fixed = target_from_json({{"bug_id", "b1"}, {"source_path", "A.java"}}, cfg);
    EXPECT_EQ(fixed.id, "b1");
    EXPECT_EQ(fixed.mode, Mode::Fixed);
    EXPECT_EQ(fixed.source_path, "/base/A.java");
    auto buggy = target_from_json({{"bug_id", "b1"}, {"mode", "buggy"}, {"source_path", "A.java"}}, cfg);
    EXPECT_EQ(buggy.id, "b1-buggy");
    EXPECT_THROW(target_from_json({{"bug_id", "b/1"}, {"source_path", "A.java"}}, cfg), FormatError);
    EXPECT_THROW(target_from_json({{"bug_id", "b"}, {"mode", "broken"}, {"source_path", "A.java"}}, cfg), FormatError);
    EXPECT_THROW(target_from_json({{"bug_id", "b"}, {"source_path", "A.java"}, {"start_line", 5}, {"end_line", 2}}, cfg),
                 FormatError);
    EXPECT_THROW(target_from_json({{"bug_id", "b"}}, cfg), FormatError);
}

TEST(Targets, DuplicateIdsAndSeededSample) {
    Workspace w;
    std::string lines;
    for (int i = 0; i < 10; ++i) lines += "{\"bug_id\":\"b" + std::to_string(i) + "\",\"source_path\":\"src/Clamp.java\"}\n";
    text::write_file((w.dir / "targets.jsonl").string(), lines);
    auto cfg = w.config({{"sample_targets", 4}, {"seed", 11}});
    const auto a = load_targets(cfg);
    const auto b = load_targets(cfg);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
    for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(std::stoi(a[i - 1].id.substr(1)), std::stoi(a[i].id.substr(1)));

    text::write_file((w.dir / "targets.jsonl").string(), lines + lines.substr(0, lines.find('\n') + 1));
    EXPECT_THROW(load_targets(w.config()), FormatError);
}

TEST(Generate, ChunkingOffExpectsMethodLoc) {
    Workspace w;
    const auto cfg = w.config({{"chunking", false}});
    Replies backend(kReply);
    const auto s = run_generate(cfg, load_targets(cfg), w.out(), &backend);
    ASSERT_EQ(s.targets.size(), 1u);
    EXPECT_EQ(s.targets[0].prompts, 1);
    EXPECT_EQ(s.targets[0].expected, 9);
    EXPECT_EQ(load_expected(w.out()).at("clamp"), 9);
}

TEST(Generate, ChunkingOnOnePromptPerChunk) {
    Workspace w;
    const auto cfg = w.config();
    Replies backend(kReply);
    const auto s = run_generate(cfg, load_targets(cfg), w.out(), &backend);
    const auto chunks = chunk_method(parse_method(kClamp));
    long sum = 0;
    for (const auto& c : chunks) sum += static_cast<long>(c.loc());
    EXPECT_EQ(s.targets[0].prompts, static_cast<int>(chunks.size()));
    EXPECT_GT(chunks.size(), 1u);
    EXPECT_EQ(s.targets[0].expected, sum);
    EXPECT_EQ(read_jsonl((w.out() / "prompts.jsonl").string()).size(), chunks.size());

    // Every parsed pair is in the manifest; pairs outside their chunk are
    // rejected rather than dropped.
    const auto manifest = load_manifest(w.out());
    EXPECT_EQ(static_cast<long>(manifest.size()), s.targets[0].generated);
    EXPECT_EQ(manifest.size(), 4 * chunks.size());
    std::size_t materialized = 0;
    for (const auto& m : manifest) {
        if (!m.target_line) {
            EXPECT_FALSE(m.rejection.empty());
            continue;
        }
        ++materialized;
        const auto mutated = text::read_file((w.out() / m.file).string());
        const auto a = text::split_lines(kClamp), b = text::split_lines(mutated);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i] != b[i], static_cast<int>(i + 1) == *m.target_line);
    }
    EXPECT_EQ(materialized, 4u);
}

TEST(Generate, BackendDownIsolatedPerTarget) {
    Workspace w;
    const auto cfg = w.config();
    Down backend;
    const auto s = run_generate(cfg, load_targets(cfg), w.out(), &backend);
    EXPECT_EQ(s.succeeded(), 0u);
    EXPECT_FALSE(s.targets[0].errors.empty());
    for (const auto& r : read_jsonl((w.out() / "prompts.jsonl").string())) EXPECT_EQ(r["status"], "error");
    EXPECT_TRUE(load_manifest(w.out()).empty());
}

TEST(Generate, MissingSourceFailsOnlyThatTarget) {
    Workspace w;
    text::write_file((w.dir / "targets.jsonl").string(),
                     "{\"bug_id\":\"ok\",\"source_path\":\"src/Clamp.java\"}\n"
                     "{\"bug_id\":\"gone\",\"source_path\":\"src/Missing.java\"}\n");
    const auto cfg = w.config();
    Replies backend(kReply);
    const auto s = run_generate(cfg, load_targets(cfg), w.out(), &backend);
    EXPECT_EQ(s.succeeded(), 1u);
    EXPECT_TRUE(s.targets[0].ok());
    EXPECT_FALSE(s.targets[1].ok());
}

TEST(Generate, RetrievalFillsPrompts) {
    Workspace w;
    auto cfg = w.config({{"rag", true}, {"index", "out/index.bin"}, {"retrieval_n", 6}});
    const auto corpus = ingest_corpus(cfg.path(cfg.corpus));
    fs::create_directories(w.out());
    save_index(build_index(corpus.corpus, cfg.key_side, *make_embedder(cfg), cfg.metric), cfg.path(cfg.index));
    run_generate(cfg, load_targets(cfg), w.out(), nullptr, true);
    for (const auto& r : read_jsonl((w.out() / "prompts.jsonl").string())) {
        EXPECT_EQ(r["retrieved"].size(), 2u); // min(N, corpus size)
        EXPECT_EQ(r["examples"].size(), 2u);
        EXPECT_FALSE(r.contains("status"));
    }
    EXPECT_FALSE(fs::exists(w.out() / "manifest.jsonl"));
}

TEST(Evaluate, RunnerReportIsReproducibleAndOfflineMatches) {
    Workspace w;
    const auto cfg = w.config({{"test_command", "sh {base}/run.sh {base}/clamp.tests {src}"}});
    const auto targets = load_targets(cfg);
    Replies backend(kReply);
    run_generate(cfg, targets, w.out(), &backend);

    const auto rep = run_evaluate(cfg, targets, w.out());
    write_report(rep, w.out() / "report");
    const auto first = read_dir(w.out() / "report");
    write_report(run_evaluate(cfg, targets, w.out()), w.out() / "report");
    EXPECT_EQ(read_dir(w.out() / "report"), first);

    // Useful: 4 materialized minus 1 duplicate, no compile command.
    ASSERT_EQ(rep.fixed_bugs.size(), 1u);
    EXPECT_EQ(rep.fixed_bugs[0].matrix.rows(), 3u);
    const auto t3 = rep.files.at("table3_effectiveness.tsv");
    // Killed: v >= hi (highGuard), -v (identity); lo + 0 survives.
    EXPECT_NE(t3.find("\t66.67%\t100.00%\t100.00%\t33.33%"), std::string::npos) << t3;

    // Precomputed matrices, no runner: same tables.
    const auto offline = w.config();
    const auto again = run_evaluate(offline, targets, w.out());
    EXPECT_EQ(again.files, rep.files);

    const auto sft = run_export_sft(cfg, targets, w.out(), rep, {});
    ASSERT_EQ(sft.instances.size(), 1u);
    EXPECT_EQ(sft.uncoupled, 2u);
    EXPECT_NE(sft.instances[0].response.find("if (v >= hi) {"), std::string::npos);
}

TEST(Evaluate, MissingMatrixWithoutRunner) {
    Workspace w;
    const auto cfg = w.config();
    Replies backend(kReply);
    run_generate(cfg, load_targets(cfg), w.out(), &backend);
    EXPECT_THROW(run_evaluate(cfg, load_targets(cfg), w.out()), Error);
}

TEST(Report, MergeRowsKeepsCells) {
    KillMatrix a({"m1"}, {"t1", "t2"}), b({"m2", "m3"}, {"t1", "t2"});
    a.set("m1", "t2", true);
    b.set("m3", "t1", true);
    const auto km = merge_rows({&a, &b}, "bug");
    EXPECT_EQ(km.rows(), 3u);
    EXPECT_TRUE(km.kill(km.mutant_index("m1"), km.test_index("t2")));
    EXPECT_TRUE(km.kill(km.mutant_index("m3"), km.test_index("t1")));
    EXPECT_FALSE(km.kill(km.mutant_index("m2"), km.test_index("t1")));
    KillMatrix c({"m4"}, {"t1"});
    EXPECT_THROW(merge_rows({&a, &c}, "bug"), Error);
}
