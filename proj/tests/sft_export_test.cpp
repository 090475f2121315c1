#include "ragmut/sft_export.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ragmut;

namespace {

const std::string kSource = "int clamp(int v, int lo, int hi) {\n"
                            "    if (v < lo) {\n"
                            "        return lo;\n"
                            "    }\n"
                            "    return v > hi ? hi : v;\n"
                            "}\n";

struct Fixture {
    FocalMethod method = parse_method(kSource);
    std::vector<CodeChunk> chunks = chunk_method(method);
    std::map<std::string, SftContext> contexts;

    Fixture() {
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const auto cid = "c" + std::to_string(i);
            contexts[context_key("b1", cid)] = {"b1", cid, "proj",
                                                render_prompt(method, chunks[i], {}, chunks[i].loc()), chunks[i],
                                                kSource};
        }
    }

    // Chunk id holding `line`.
    std::string chunk_of(int line) const {
        for (std::size_t i = 0; i < chunks.size(); ++i)
            if (chunks[i].line_numbers.count(line)) return "c" + std::to_string(i);
        return {};
    }
};

SftCandidate cand(const Fixture& f, const std::string& id, int line, std::string after, bool coupled) {
    const auto pre = std::string(text::trim(f.method.line_text(line)));
    return {id, context_key("b1", f.chunk_of(line)), {pre, std::move(after)}, coupled};
}

} // namespace

TEST(SftExport, CoupledMutantRoundTrips) {
    Fixture f;
    auto out = export_sft({cand(f, "m1", 2, "if (v <= lo) {", true)}, f.contexts);
    ASSERT_EQ(out.instances.size(), 1u);
    const auto& inst = out.instances[0];
    auto parsed = parse_response(inst.response);
    ASSERT_FALSE(parsed.parse_failed);
    ASSERT_EQ(parsed.pairs.size(), 1u);
    EXPECT_EQ(parsed.pairs[0].aftercode, "if (v <= lo) {");
    const auto& ctx = f.contexts.at(context_key("b1", inst.chunk_id));
    auto m = materialize(ctx.original_source, ctx.chunk, parsed.pairs[0]);
    ASSERT_TRUE(m.mutant);
    EXPECT_EQ(m.mutant->target_line, 2);
    EXPECT_NE(inst.prompt.find("[Entire Focal Method]"), std::string::npos);
    EXPECT_NE(inst.prompt.find("[The Current Chunk]"), std::string::npos);
}

TEST(SftExport, UncoupledExcluded) {
    Fixture f;
    auto out = export_sft({cand(f, "m1", 5, "return v;", false)}, f.contexts);
    EXPECT_TRUE(out.instances.empty());
    EXPECT_EQ(out.uncoupled, 1u);
}

TEST(SftExport, TenMutantsFourCoupled) {
    Fixture f;
    std::vector<SftCandidate> cs;
    for (int i = 0; i < 10; ++i)
        cs.push_back(cand(f, "m" + std::to_string(i), i % 2 ? 3 : 5, "return " + std::to_string(i) + ";", i % 3 == 0));
    auto out = export_sft(cs, f.contexts);
    EXPECT_EQ(out.instances.size(), 4u);
    EXPECT_EQ(out.uncoupled, 6u);
    std::string lines;
    for (const auto& t : out.instances) lines += to_jsonl(t) + "\n";
    EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 4);
    auto again = export_sft(cs, f.contexts);
    std::string lines2;
    for (const auto& t : again.instances) lines2 += to_jsonl(t) + "\n";
    EXPECT_EQ(lines, lines2);
}

TEST(SftExport, MissingContextSkippedWithReason) {
    Fixture f;
    SftCandidate c{"m9", "b1/nope", {"return lo;", "return hi;"}, true};
    auto out = export_sft({c}, f.contexts);
    ASSERT_EQ(out.skipped.size(), 1u);
    EXPECT_EQ(out.skipped[0].mutant_id, "m9");
    EXPECT_EQ(out.skipped[0].reason, "no chunk context");
}

TEST(SftExport, ProjectFilter) {
    Fixture f;
    SftOptions opt;
    opt.exclude_projects = {"proj"};
    auto out = export_sft({cand(f, "m1", 3, "return hi;", true)}, f.contexts, opt);
    EXPECT_TRUE(out.instances.empty());
    EXPECT_EQ(out.excluded, 1u);
}

TEST(SftExport, GroupedCollectsPairsPerChunk) {
    Fixture f;
    SftOptions opt;
    opt.grouped = true;
    auto out = export_sft({cand(f, "m1", 3, "return hi;", true), cand(f, "m2", 3, "return 0;", true),
                           cand(f, "m3", 5, "return v;", true)},
                          f.contexts, opt);
    ASSERT_EQ(out.instances.size(), f.chunk_of(3) == f.chunk_of(5) ? 1u : 2u);
    EXPECT_EQ(out.instances[0].mutant_ids, (std::vector<std::string>{"m1", "m2"}));
    EXPECT_EQ(parse_response(out.instances[0].response).pairs.size(), 2u);
    auto j = nlohmann::json::parse(to_jsonl(out.instances[0]));
    EXPECT_TRUE(j["provenance"].contains("mutant_ids"));
}

TEST(SftExport, JsonlShape) {
    Fixture f;
    auto out = export_sft({cand(f, "m1", 3, "return hi;", true)}, f.contexts);
    auto j = nlohmann::json::parse(to_jsonl(out.instances[0]));
    EXPECT_EQ(j["provenance"]["bug_id"], "b1");
    EXPECT_EQ(j["provenance"]["mutant_id"], "m1");
    EXPECT_EQ(j["provenance"]["project"], "proj");
    EXPECT_TRUE(j["prompt"].is_string());
    EXPECT_EQ(j["response"], "<json>[{\"precode\":\"return lo;\",\"aftercode\":\"return hi;\"}]</json>");
}
