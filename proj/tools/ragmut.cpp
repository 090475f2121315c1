#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ragmut/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ragmut;
using pipeline::ojson;

namespace {

// Settings a flag may override after the config file is read.
struct Overrides {
    std::string config;
    std::string out;
    std::optional<unsigned> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<int> retrieval_n;
    std::string metric;
    std::string variant;
    bool no_rag = false;
    bool no_chunking = false;
    std::string mock_script;
    std::optional<double> omega;
    std::optional<std::size_t> sample;
};

void add_config_options(CLI::App* cmd, Overrides& o, bool required = true) {
    auto* c = cmd->add_option("-c,--config", o.config, "Pipeline configuration file");
    if (required) c->required();
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("-j,--jobs", o.jobs, "Worker threads (0: one per hardware thread)");
    cmd->add_option("--seed", o.seed, "Seed for target sampling");
    cmd->add_option("--sample-targets", o.sample, "Process a seeded random subset of targets");
}

void add_generation_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-n,--retrieval-n", o.retrieval_n, "Retrieved examples per prompt");
    cmd->add_option("--metric", o.metric, "Retrieval metric: euclidean, cosine or dot");
    cmd->add_option("--variant", o.variant, "Ablation variant: rc (default), r, c or base")
        ->check(CLI::IsMember({"rc", "r", "c", "base"}));
    cmd->add_flag("--no-rag", o.no_rag, "Disable retrieval (no examples in the prompt)");
    cmd->add_flag("--no-chunking", o.no_chunking, "One prompt per whole method");
    cmd->add_option("--mock-script", o.mock_script, "Use the mock backend with this response script");
}

pipeline::Config resolve(const Overrides& o) {
    auto cfg = pipeline::load_config(o.config);
    if (!o.out.empty()) cfg.out = fs::absolute(o.out).string();
    if (o.jobs) cfg.jobs = *o.jobs;
    if (o.seed) cfg.seed = *o.seed;
    if (o.sample) cfg.sample_targets = *o.sample;
    if (o.retrieval_n) cfg.retrieval_n = *o.retrieval_n;
    if (!o.metric.empty()) cfg.metric = parse_metric(o.metric);
    if (!o.variant.empty()) {
        cfg.rag = o.variant == "rc" || o.variant == "r";
        cfg.chunking = o.variant == "rc" || o.variant == "c";
    }
    if (o.no_rag) cfg.rag = false;
    if (o.no_chunking) cfg.chunking = false;
    if (!o.mock_script.empty()) {
        cfg.backend.kind = "mock";
        cfg.backend.script = fs::absolute(o.mock_script).string();
    }
    if (o.omega) cfg.omega = *o.omega;
    std::error_code ec;
    cfg.tool_path = fs::read_symlink("/proc/self/exe", ec).string();
    cfg.validate();
    return cfg;
}

fs::path out_dir(const pipeline::Config& cfg) { return cfg.path(cfg.out); }

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!text::trim(item).empty()) v.emplace_back(text::trim(item));
    return v;
}

// "<key> <value...>" lines, '#' comments allowed.
std::vector<std::vector<std::string>> read_table(const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& line : text::split_lines(text::read_file(path))) {
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        rows.push_back(text::split_ws(t));
    }
    return rows;
}

int cmd_ingest(const std::string& path, bool check) {
    const auto r = ingest_corpus(path);
    std::cout << "pairs\t" << r.corpus.size() << "\nskipped\t" << r.skipped.size() << "\n";
    for (const auto& s : r.skipped)
        std::cerr << path << ":" << s.line_number << ": " << (s.id.empty() ? "" : s.id + ": ") << s.reason << "\n";
    return check && !r.skipped.empty() ? 1 : 0;
}

int cmd_chunk(const std::string& file, int start_line, bool whole) {
    const auto src = text::read_file(file);
    auto lines = text::split_lines(src);
    std::vector<std::string> body(lines.begin() + std::min<std::size_t>(lines.size(), start_line - 1), lines.end());
    const auto m = parse_method(text::join_lines(body), start_line);
    ojson j;
    j["file"] = file;
    j["start_line"] = m.start_line;
    j["end_line"] = m.last_line();
    ojson chunks = ojson::array();
    const auto cs = pipeline::target_chunks(m, !whole);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto& c = cs[i];
        ojson ranges = ojson::array();
        std::optional<int> lo, hi;
        for (int l : c.line_numbers) {
            if (hi && l == *hi + 1) {
                hi = l;
                continue;
            }
            if (lo) ranges.push_back({*lo, *hi});
            lo = hi = l;
        }
        if (lo) ranges.push_back({*lo, *hi});
        chunks.push_back({{"chunk_id", pipeline::chunk_id(i)},
                          {"kind", std::string(to_string(c.kind))},
                          {"loc", c.loc()},
                          {"ranges", ranges},
                          {"text", c.text}});
    }
    j["chunks"] = chunks;
    std::cout << j.dump(2) << "\n";
    return 0;
}

struct RagOptions {
    std::string config, corpus, index, embedder = "lexical", metric, key_side, text, file;
    std::size_t dimension = 512;
    int n = 0;
    unsigned jobs = 0;
};

pipeline::Config rag_config(const RagOptions& r) {
    pipeline::Config cfg;
    if (!r.config.empty()) cfg = pipeline::load_config(r.config);
    if (!r.corpus.empty()) cfg.corpus = fs::absolute(r.corpus).string();
    if (!r.index.empty()) cfg.index = fs::absolute(r.index).string();
    if (r.config.empty()) {
        cfg.embedder.kind = r.embedder;
        cfg.embedder.dimension = r.dimension;
    }
    if (!r.metric.empty()) cfg.metric = parse_metric(r.metric);
    if (!r.key_side.empty()) cfg.key_side = parse_key_side(r.key_side);
    if (r.n > 0) cfg.retrieval_n = r.n;
    if (r.jobs) cfg.jobs = r.jobs;
    return cfg;
}

int cmd_rag_build(const RagOptions& r) {
    const auto cfg = rag_config(r);
    const auto in = ingest_corpus(cfg.path(cfg.corpus));
    for (const auto& s : in.skipped) std::cerr << "skipped line " << s.line_number << ": " << s.reason << "\n";
    const auto emb = pipeline::make_embedder(cfg);
    const auto idx = build_index(in.corpus, cfg.key_side, *emb, cfg.metric, cfg.workers());
    const fs::path index_path = cfg.path(cfg.index);
    if (index_path.has_parent_path()) fs::create_directories(index_path.parent_path());
    save_index(idx, index_path.string());
    std::cout << "indexed\t" << idx.size() << "\ndimension\t" << idx.dimension() << "\nbackend\t" << idx.backend_id()
              << "\n";
    return 0;
}

int cmd_rag_query(const RagOptions& r) {
    const auto cfg = rag_config(r);
    auto idx = load_index(cfg.path(cfg.index));
    if (!r.metric.empty() || !r.config.empty()) idx.set_metric(cfg.metric);
    const auto emb = pipeline::make_embedder(cfg);
    if (emb->id() != idx.backend_id()) throw Error("index was built by " + idx.backend_id());
    const auto probe = r.file.empty() ? r.text : text::read_file(r.file);
    for (const auto& s : idx.query(emb->embed(probe), static_cast<std::size_t>(cfg.retrieval_n)))
        std::cout << s.id << "\t" << pipeline::fmt(s.score, 6) << "\n";
    return 0;
}

int cmd_generate(const Overrides& o, bool dry_run) {
    const auto cfg = resolve(o);
    const auto targets = pipeline::load_targets(cfg);
    std::unique_ptr<LlmBackend> backend;
    if (!dry_run) backend = pipeline::make_backend(cfg);
    const auto s = pipeline::run_generate(cfg, targets, out_dir(cfg), backend.get(), dry_run);
    for (const auto& t : s.targets) {
        std::cout << t.target_id << "\tprompts=" << t.prompts << "\texpected=" << t.expected;
        if (!dry_run) std::cout << "\tgenerated=" << t.generated << "\tmaterialized=" << t.materialized;
        std::cout << "\n";
        for (const auto& e : t.errors) std::cerr << t.target_id << ": " << e << "\n";
    }
    if (dry_run) return 0;
    std::cout << "succeeded\t" << s.succeeded() << "/" << s.targets.size() << "\n";
    return s.succeeded() == 0 ? 1 : 0;
}

// Turns prompt_id -> response records into a digest-keyed mock script.
int cmd_mock_script(const std::string& prompts, const std::string& responses, const std::string& out) {
    std::map<std::string, std::string> digest_of;
    for (const auto& j : pipeline::read_jsonl(prompts))
        digest_of[j.at("prompt_id").get<std::string>()] = j.at("prompt_digest").get<std::string>();
    std::vector<ojson> records;
    for (const auto& j : pipeline::read_jsonl(responses)) {
        const auto id = j.at("prompt_id").get<std::string>();
        auto it = digest_of.find(id);
        if (it == digest_of.end()) throw Error("response for unknown prompt " + id);
        ojson r;
        r["prompt_digest"] = it->second;
        r["response_text"] = j.at("response_text").get<std::string>();
        r["prompt_tokens"] = j.value("prompt_tokens", 0);
        r["completion_tokens"] = j.value("completion_tokens", 0);
        records.push_back(std::move(r));
    }
    pipeline::write_jsonl(out, records);
    std::cout << "scripted\t" << records.size() << "/" << digest_of.size() << "\n";
    return 0;
}

int cmd_validate(const Overrides& o) {
    const auto cfg = resolve(o);
    auto targets = pipeline::load_targets(cfg);
    const auto v = pipeline::run_validate(cfg, targets, out_dir(cfg));
    std::cout << "target\tExp.\tGen.\tGe. R.\tND. R.\tCom. R.\n";
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto r = validity_metrics(v[i].ledger);
        std::cout << targets[i].id << "\t" << r.expected << "\t" << r.generated << "\t" << pipeline::pct(r.generation_rate)
                  << "\t" << pipeline::pct(r.nonduplicate_rate) << "\t" << pipeline::pct(r.compilable_rate)
                  << (v[i].compile_checked ? "" : " (not compiled)") << "\n";
    }
    return 0;
}

int cmd_execute(const Overrides& o) {
    const auto cfg = resolve(o);
    auto targets = pipeline::load_targets(cfg);
    for (auto& t : targets) pipeline::load_method(t);
    const auto ex = pipeline::run_execute(cfg, targets, out_dir(cfg));
    for (std::size_t i = 0; i < targets.size(); ++i)
        std::cout << targets[i].id << "\tmutants=" << ex[i].matrix.rows() << "\ttests=" << ex[i].matrix.cols()
                  << "\ttimed_out=" << ex[i].timed_out.size() << "\n";
    return 0;
}

pipeline::Report evaluate(const Overrides& o, const std::string& matrices, pipeline::Config* cfg_out = nullptr) {
    const auto cfg = resolve(o);
    const auto targets = pipeline::load_targets(cfg);
    auto rep = pipeline::run_evaluate(cfg, targets, out_dir(cfg), matrices.empty() ? "" : fs::absolute(matrices).string());
    if (cfg_out) *cfg_out = cfg;
    return rep;
}

int cmd_report(const Overrides& o, const std::string& matrices, const std::string& report_dir) {
    pipeline::Config cfg;
    const auto rep = evaluate(o, matrices, &cfg);
    const fs::path dir = report_dir.empty() ? out_dir(cfg) / "report" : fs::absolute(report_dir);
    pipeline::write_report(rep, dir);
    for (const auto* name : {"table2_validity.tsv", "table3_effectiveness.tsv", "table4_tcp.tsv", "table5_mbfl.tsv"})
        std::cout << "== " << name << "\n" << rep.files.at(name);
    std::cout << "report written to " << dir.string() << "\n";
    return 0;
}

// metrics from matrix files: each file's stem is the bug id; the
// revealing file holds "<bug> <test...>" lines.
int cmd_metrics_files(const std::vector<std::string>& matrices, const std::string& revealing, double threshold) {
    std::map<std::string, std::set<std::string>> rev;
    for (const auto& row : read_table(revealing)) rev[row[0]].insert(row.begin() + 1, row.end());
    std::vector<BugContext> ctxs;
    for (const auto& path : matrices) {
        BugContext c;
        c.bug_id = fs::path(path).stem().string();
        c.matrix = load_matrix(path);
        c.matrix.bug_id = c.bug_id;
        auto it = rev.find(c.bug_id);
        if (it == rev.end()) throw Error("no revealing tests listed for " + c.bug_id);
        c.revealing_tests = it->second;
        c.check();
        ctxs.push_back(std::move(c));
    }
    const auto e = effectiveness(ctxs, threshold);
    std::cout << "bug\tuseful\tMS\tCoup.\tOchiai\tR. B. D.\n";
    for (std::size_t b = 0; b < e.bugs.size(); ++b) {
        const auto& be = e.bugs[b];
        std::cout << be.bug_id << "\t" << be.useful_mutants << "\t" << pipeline::pct(be.mutation_score) << "\t"
                  << pipeline::pct(be.coupling_rate) << "\t" << pipeline::num(be.ochiai, 4) << "\t"
                  << pipeline::pct(be.rbd) << "\n";
    }
    std::cout << "\nMS\tR. B. D.\tR. B. D. (micro)\tCoup.\tAvg. O.\tO.>=" << pipeline::fmt(threshold, 2)
              << "\tno mutants\n"
              << pipeline::pct(e.mutation_score) << "\t" << pipeline::pct(e.rbd.macro) << "\t"
              << pipeline::pct(e.rbd.micro) << "\t" << pipeline::pct(e.coupling_rate) << "\t" << pipeline::pct(e.aoc)
              << "\t" << e.high_similarity << "\t" << e.bugs_without_mutants << "\n";
    return 0;
}

// tcp from a matrix and a detection file: one fault per line, listing the
// tests that detect it.
int cmd_tcp_files(const std::string& matrix, const std::string& detection, const std::string& strategy, double omega) {
    const auto km = load_matrix(matrix);
    std::vector<std::set<std::string>> faults;
    for (const auto& row : read_table(detection)) faults.emplace_back(row.begin(), row.end());
    std::vector<Strategy> ss;
    if (strategy == "all" || strategy == "grk") ss.push_back(Strategy::GRK);
    if (strategy == "all" || strategy == "grd") ss.push_back(Strategy::GRD);
    if (strategy == "all" || strategy == "hyb") ss.push_back(Strategy::HYB);
    std::cout << "strategy\tAPFD\torder\n";
    for (auto s : ss) {
        const auto suite = prioritize(km, s, omega);
        std::cout << to_string(s) << "\t" << pipeline::fmt(apfd(suite.order, faults), 4) << "\t"
                  << pipeline::join_ids(suite.order, ',') << "\n";
    }
    return 0;
}

// mbfl from files: buggy-mode matrix, the original outcome lines,
// "<mutant> <statement>" lines and the faulty statements.
int cmd_mbfl_files(const std::string& matrix, const std::string& original, const std::string& statements,
                   const std::string& faulty, const std::string& universe) {
    const auto km = load_matrix(matrix);
    const auto orig = outcome_from_output("original", text::read_file(original), false);
    std::map<std::string, int> statement_of;
    for (const auto& row : read_table(statements)) {
        if (row.size() != 2) throw FormatError("statement lines are '<mutant> <statement>'");
        statement_of[row[0]] = std::stoi(row[1]);
    }
    std::set<int> faulty_set, all;
    for (const auto& f : split_csv(faulty)) faulty_set.insert(std::stoi(f));
    for (const auto& f : split_csv(universe)) all.insert(std::stoi(f));
    const auto st = fl_stats(km, orig.failing(), statement_of);
    std::cout << "method\tbugs\tTop-1\tTop-3\tTop-5\tMAR\tMFR\tranking\n";
    for (auto method : {FLMethod::Muse, FLMethod::Metallaxis}) {
        const auto r = rank(aggregate(st, method, all));
        const auto m = fl_metrics({{fs::path(matrix).stem().string(), r, faulty_set}});
        std::string ranking;
        for (const auto& s : r)
            ranking += (ranking.empty() ? "" : ",") + std::to_string(s.statement) + ":" + pipeline::fmt(s.score, 4);
        std::cout << (method == FLMethod::Muse ? "MUSE" : "Metallaxis") << "\t" << m.bugs << "\t" << m.top_k.at(1)
                  << "\t" << m.top_k.at(3) << "\t" << m.top_k.at(5) << "\t" << pipeline::num(m.mar, 2) << "\t"
                  << pipeline::num(m.mfr, 2) << "\t" << ranking << "\n";
    }
    return 0;
}

int cmd_export_sft(const Overrides& o, const std::string& matrices, bool grouped, const std::string& exclude,
                   const std::string& output) {
    pipeline::Config cfg;
    const auto rep = evaluate(o, matrices, &cfg);
    SftOptions opt;
    opt.grouped = grouped;
    for (const auto& p : split_csv(exclude)) opt.exclude_projects.insert(p);
    const auto targets = pipeline::load_targets(cfg);
    const auto ex = pipeline::run_export_sft(cfg, targets, out_dir(cfg), rep, opt);
    const auto path = output.empty() ? (out_dir(cfg) / "sft.jsonl").string() : output;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const auto& t : ex.instances) out << to_jsonl(t) << "\n";
    std::cout << "instances\t" << ex.instances.size() << "\nuncoupled\t" << ex.uncoupled << "\nexcluded\t"
              << ex.excluded << "\nskipped\t" << ex.skipped.size() << "\n";
    for (const auto& s : ex.skipped) std::cerr << s.mutant_id << ": " << s.reason << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ragmut: retrieval-augmented mutation generation and analysis"};
    app.require_subcommand(1);

    std::string corpus_path;
    bool check_only = false;
    auto* ingest = app.add_subcommand("ingest", "Validate and summarize a bug-fix corpus");
    ingest->add_option("corpus", corpus_path, "Corpus file (JSONL)")->required();
    ingest->add_flag("--check", check_only, "Exit 1 if any record is rejected");

    RagOptions rag_opt;
    auto* rag = app.add_subcommand("rag", "Retrieval index");
    rag->require_subcommand(1);
    auto* rag_build = rag->add_subcommand("build", "Embed the corpus and write the index");
    auto* rag_query = rag->add_subcommand("query", "Top-N corpus entries for a code snippet");
    for (auto* c : {rag_build, rag_query}) {
        c->add_option("-c,--config", rag_opt.config, "Pipeline configuration file");
        c->add_option("--index", rag_opt.index, "Index file");
        c->add_option("--embedder", rag_opt.embedder, "lexical or remote (without a config)");
        c->add_option("--dimension", rag_opt.dimension, "Embedding dimension (without a config)");
        c->add_option("--metric", rag_opt.metric, "euclidean, cosine or dot");
    }
    rag_build->add_option("--corpus", rag_opt.corpus, "Corpus file");
    rag_build->add_option("--key-side", rag_opt.key_side, "post_fix or pre_fix");
    rag_build->add_option("-j,--jobs", rag_opt.jobs, "Worker threads");
    rag_query->add_option("-n", rag_opt.n, "Number of results");
    auto* q_text = rag_query->add_option("--text", rag_opt.text, "Probe code");
    auto* q_file = rag_query->add_option("--file", rag_opt.file, "Probe code file");
    q_text->excludes(q_file);

    std::string chunk_file;
    int chunk_start = 1;
    bool chunk_whole = false;
    auto* chunk = app.add_subcommand("chunk", "Split a method file into prompt chunks (JSON)");
    chunk->add_option("file", chunk_file, "Method source file")->required();
    chunk->add_option("--start-line", chunk_start, "Line where the method starts");
    chunk->add_flag("--no-chunking", chunk_whole, "Report the whole method as one chunk");

    Overrides gen_o;
    bool dry_run = false;
    auto* generate = app.add_subcommand("generate", "Chunk, retrieve, prompt, complete, parse and materialize");
    add_config_options(generate, gen_o);
    add_generation_options(generate, gen_o);
    generate->add_flag("--dry-run", dry_run, "Render prompts only; no backend calls");

    std::string ms_prompts, ms_responses, ms_out;
    auto* mock = app.add_subcommand("mock-script", "Key scripted responses by prompt digest");
    mock->add_option("--prompts", ms_prompts, "prompts.jsonl from a generate run")->required();
    mock->add_option("--responses", ms_responses, "JSONL of {prompt_id, response_text}")->required();
    mock->add_option("-o,--output", ms_out, "Mock script to write")->required();

    Overrides val_o, exe_o, met_o, tcp_o, fl_o, sft_o, rep_o;
    auto* validate = app.add_subcommand("validate", "Deduplicate and compile generated mutants");
    add_config_options(validate, val_o);
    auto* execute = app.add_subcommand("execute", "Run the test suite on the original and every useful mutant");
    add_config_options(execute, exe_o);

    std::vector<std::string> met_matrices;
    std::string met_revealing, eval_matrices;
    double threshold = 0.8;
    auto* metrics = app.add_subcommand("metrics", "Effectiveness metrics (MS, R.B.D., coupling, Ochiai)");
    add_config_options(metrics, met_o, false);
    metrics->add_option("--matrix", met_matrices, "Kill matrix files; the file stem is the bug id");
    metrics->add_option("--revealing", met_revealing, "Lines of '<bug> <revealing test...>'");
    metrics->add_option("--threshold", threshold, "Ochiai threshold for the high-similarity count");

    std::string tcp_matrix, tcp_detection, tcp_strategy = "all";
    auto* tcp = app.add_subcommand("tcp", "Mutation-guided test prioritization and APFD");
    add_config_options(tcp, tcp_o, false);
    tcp->add_option("--matrix", tcp_matrix, "Kill matrix file");
    tcp->add_option("--detection", tcp_detection, "One fault per line: the tests detecting it");
    tcp->add_option("--strategy", tcp_strategy, "grk, grd, hyb or all")->check(CLI::IsMember({"grk", "grd", "hyb", "all"}));
    tcp->add_option("--omega", tcp_o.omega, "HYB weight in [0, 1]")->check(CLI::Range(0.0, 1.0));

    std::string fl_matrix, fl_original, fl_statements, fl_faulty, fl_universe;
    auto* mbfl = app.add_subcommand("mbfl", "Mutation-based fault localization (MUSE, Metallaxis)");
    add_config_options(mbfl, fl_o, false);
    mbfl->add_option("--matrix", fl_matrix, "Buggy-mode kill matrix");
    mbfl->add_option("--original", fl_original, "Original outcomes: '<test> PASS|FAIL' lines");
    mbfl->add_option("--statements", fl_statements, "Lines of '<mutant> <statement>'");
    mbfl->add_option("--faulty", fl_faulty, "Comma-separated faulty statements");
    mbfl->add_option("--universe", fl_universe, "Comma-separated statements to rank even without mutants");

    bool grouped = false;
    std::string exclude, sft_out;
    auto* sft = app.add_subcommand("export-sft", "Write coupled mutants as fine-tuning instances");
    add_config_options(sft, sft_o);
    sft->add_flag("--grouped", grouped, "One instance per chunk with every coupled pair");
    sft->add_option("--exclude-projects", exclude, "Comma-separated projects to leave out");
    sft->add_option("-o,--output", sft_out, "Output JSONL (default: <out>/sft.jsonl)");
    sft->add_option("--matrices", eval_matrices, "Directory of precomputed matrices");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Validate, execute and write every metric table");
    add_config_options(report, rep_o);
    report->add_option("--matrices", eval_matrices, "Directory of precomputed matrices");
    report->add_option("--report-dir", report_dir, "Report directory (default: <out>/report)");
    for (auto* c : {metrics, tcp, mbfl}) c->add_option("--matrices", eval_matrices, "Directory of precomputed matrices");

    std::string check_path;
    auto* check = app.add_subcommand("syntax-check", "Parse a single-method Java file; exit 1 on syntax errors");
    check->add_option("file", check_path, "Source file")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*check) {
            try {
                parse_method(text::read_file(check_path));
                return 0;
            } catch (const SyntaxError& e) {
                std::cerr << check_path << ": " << e.what() << "\n";
                return 1;
            }
        }
        if (*ingest) return cmd_ingest(corpus_path, check_only);
        if (*rag_build) return cmd_rag_build(rag_opt);
        if (*rag_query) {
            if (rag_opt.text.empty() && rag_opt.file.empty()) throw Error("rag query needs --text or --file");
            return cmd_rag_query(rag_opt);
        }
        if (*chunk) return cmd_chunk(chunk_file, chunk_start, chunk_whole);
        if (*generate) return cmd_generate(gen_o, dry_run);
        if (*mock) return cmd_mock_script(ms_prompts, ms_responses, ms_out);
        if (*validate) return cmd_validate(val_o);
        if (*execute) return cmd_execute(exe_o);
        if (*metrics) {
            if (!met_o.config.empty()) {
                std::cout << evaluate(met_o, eval_matrices).files.at("table3_effectiveness.tsv");
                return 0;
            }
            if (met_matrices.empty() || met_revealing.empty()) throw Error("metrics needs --config or --matrix and --revealing");
            return cmd_metrics_files(met_matrices, met_revealing, threshold);
        }
        if (*tcp) {
            if (!tcp_o.config.empty()) {
                std::cout << evaluate(tcp_o, eval_matrices).files.at("table4_tcp.tsv");
                return 0;
            }
            if (tcp_matrix.empty() || tcp_detection.empty()) throw Error("tcp needs --config or --matrix and --detection");
            return cmd_tcp_files(tcp_matrix, tcp_detection, tcp_strategy, tcp_o.omega.value_or(0.5));
        }
        if (*mbfl) {
            if (!fl_o.config.empty()) {
                std::cout << evaluate(fl_o, eval_matrices).files.at("table5_mbfl.tsv");
                return 0;
            }
            if (fl_matrix.empty() || fl_original.empty() || fl_statements.empty() || fl_faulty.empty())
                throw Error("mbfl needs --config or --matrix, --original, --statements and --faulty");
            return cmd_mbfl_files(fl_matrix, fl_original, fl_statements, fl_faulty, fl_universe);
        }
        if (*sft) return cmd_export_sft(sft_o, eval_matrices, grouped, exclude, sft_out);
        if (*report) return cmd_report(rep_o, eval_matrices, report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
