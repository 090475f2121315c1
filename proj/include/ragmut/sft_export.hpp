#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmut/chunker.hpp"
#include "ragmut/prompt.hpp"

namespace ragmut {

/// What a mutant was generated from: the exact prompt plus enough of the
/// original program to re-materialize the response.
struct SftContext {
    std::string bug_id;
    std::string chunk_id;
    std::string project;
    std::string prompt;
    CodeChunk chunk;
    std::string original_source;
};

struct SftCandidate {
    std::string mutant_id;
    std::string context; // key into the context map
    MutationPair pair;
    bool coupled = false;
};

struct TrainingInstance {
    std::string prompt;
    std::string response;
    std::string bug_id;
    std::string chunk_id;
    std::string project;
    std::vector<std::string> mutant_ids;
    bool grouped = false;
};

struct SftOptions {
    bool grouped = false; // one instance per chunk holding every coupled pair
    std::set<std::string> exclude_projects;
};

struct SftSkip {
    std::string mutant_id;
    std::string reason;
};

struct SftExport {
    std::vector<TrainingInstance> instances;
    std::vector<SftSkip> skipped;
    std::size_t uncoupled = 0;
    std::size_t excluded = 0; // coupled mutants dropped by the project filter
};

inline std::string context_key(const std::string& owner, const std::string& chunk_id) { return owner + "/" + chunk_id; }

inline std::string sft_response(const std::vector<MutationPair>& pairs) {
    return "<json>" + pairs_to_json(pairs) + "</json>";
}

/// One instance per coupled mutant (or per chunk when grouped), prompted
/// with the generation prompt verbatim. Instances keep candidate order.
inline SftExport export_sft(const std::vector<SftCandidate>& candidates,
                            const std::map<std::string, SftContext>& contexts, const SftOptions& opt = {}) {
    SftExport out;
    std::map<std::string, std::size_t> group_of;
    std::vector<std::vector<MutationPair>> group_pairs;
    for (const auto& c : candidates) {
        if (!c.coupled) {
            ++out.uncoupled;
            continue;
        }
        auto it = contexts.find(c.context);
        if (it == contexts.end()) {
            out.skipped.push_back({c.mutant_id, "no chunk context"});
            continue;
        }
        const auto& ctx = it->second;
        if (opt.exclude_projects.count(ctx.project)) {
            ++out.excluded;
            continue;
        }
        if (!materialize(ctx.original_source, ctx.chunk, c.pair).mutant) {
            out.skipped.push_back({c.mutant_id, "pair does not re-materialize in its chunk"});
            continue;
        }
        if (opt.grouped) {
            auto [g, fresh] = group_of.emplace(it->first, out.instances.size());
            if (fresh) {
                out.instances.push_back({ctx.prompt, {}, ctx.bug_id, ctx.chunk_id, ctx.project, {}, true});
                group_pairs.emplace_back();
            }
            out.instances[g->second].mutant_ids.push_back(c.mutant_id);
            group_pairs[g->second].push_back(c.pair);
            continue;
        }
        out.instances.push_back({ctx.prompt, sft_response({c.pair}), ctx.bug_id, ctx.chunk_id, ctx.project, {c.mutant_id}, false});
    }
    for (std::size_t i = 0; i < group_pairs.size(); ++i) out.instances[i].response = sft_response(group_pairs[i]);
    return out;
}

inline std::string to_jsonl(const TrainingInstance& t) {
    nlohmann::ordered_json prov;
    prov["bug_id"] = t.bug_id;
    prov["project"] = t.project;
    prov["chunk_id"] = t.chunk_id;
    if (t.grouped) prov["mutant_ids"] = t.mutant_ids;
    else prov["mutant_id"] = t.mutant_ids.front();
    nlohmann::ordered_json j;
    j["prompt"] = t.prompt;
    j["response"] = t.response;
    j["provenance"] = prov;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

} // namespace ragmut
