#include "ragmut/pipeline.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

using namespace ragmut;
namespace fs = std::filesystem;

namespace {

struct Dir {
    fs::path path;
    Dir() {
        path = fs::temp_directory_path() /
               ("ragmut_cli_" + std::to_string(getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~Dir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = (path / name).string();
        text::write_file(p, content);
        return p;
    }
};

ProcessResult cli(const std::string& args) {
    return run_shell(shell_quote(RAGMUT_CLI) + " " + args, std::chrono::seconds(30));
}

} // namespace

TEST(Cli, ChunkReportsPartition) {
    Dir d;
    const auto f = d.file("M.java", "int f(int a) {\n    if (a > 0) {\n        a++;\n    }\n    return a;\n}\n");
    const auto r = cli("chunk " + shell_quote(f));
    ASSERT_TRUE(r.ok()) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    std::set<int> seen;
    for (const auto& c : j["chunks"])
        for (const auto& range : c["ranges"])
            for (int l = range[0].get<int>(); l <= range[1].get<int>(); ++l) EXPECT_TRUE(seen.insert(l).second);
    EXPECT_EQ(seen.size(), 6u);
    EXPECT_EQ(j["chunks"][0]["kind"], "control_flow");
}

TEST(Cli, IngestCheckFailsOnBadRecord) {
    Dir d;
    const auto good = "{\"id\":\"a\",\"pre_fix_code\":\"x = 1;\\n\",\"post_fix_code\":\"x = 2;\\n\"}\n";
    EXPECT_EQ(cli("ingest --check " + shell_quote(d.file("ok.jsonl", good))).exit_code, 0);
    const auto r = cli("ingest --check " + shell_quote(d.file("bad.jsonl", std::string(good) + "{\"id\":\"b\"}\n")));
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("missing field"), std::string::npos);
}

TEST(Cli, MetricsFromMatrixFiles) {
    Dir d;
    const auto m = d.file("bug1.matrix", "MUTANTS m1 m2\nTESTS t1 t2\n10\n00\n");
    const auto rev = d.file("rev.txt", "bug1 t1\n");
    const auto r = cli("metrics --matrix " + shell_quote(m) + " --revealing " + shell_quote(rev));
    ASSERT_TRUE(r.ok()) << r.err;
    EXPECT_NE(r.out.find("bug1\t2\t50.00%\t50.00%\t0.5000\t100.00%"), std::string::npos) << r.out;
}

TEST(Cli, TcpHandCase) {
    Dir d;
    // t2 kills both mutants, t0 only m0: GRK picks t2, then nothing new, resets.
    const auto m = d.file("k.matrix", "MUTANTS m0 m1\nTESTS t0 t1 t2\n101\n001\n");
    const auto det = d.file("faults.txt", "t0\n");
    const auto r = cli("tcp --matrix " + shell_quote(m) + " --detection " + shell_quote(det) + " --strategy grk");
    ASSERT_TRUE(r.ok()) << r.err;
    // Order t2, t0, t1: fault found at position 2 of 3 -> 1 - 2/3 + 1/6 = 0.5
    EXPECT_NE(r.out.find("grk\t0.5000\tt2,t0,t1"), std::string::npos) << r.out;
}

TEST(Cli, MbflRanksFaultFirst) {
    Dir d;
    const auto m = d.file("b.matrix", "MUTANTS a b\nTESTS t0 t1\n10\n01\n");
    const auto orig = d.file("orig.txt", "t0 FAIL\nt1 PASS\n");
    const auto stmts = d.file("stmts.txt", "a 3\nb 7\n");
    const auto r = cli("mbfl --matrix " + shell_quote(m) + " --original " + shell_quote(orig) + " --statements " +
                       shell_quote(stmts) + " --faulty 3 --universe 1,3,7");
    ASSERT_TRUE(r.ok()) << r.err;
    EXPECT_NE(r.out.find("MUSE\t1\t1\t1\t1\t1.00\t1.00"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("Metallaxis\t1\t1\t1\t1\t1.00\t1.00"), std::string::npos) << r.out;
}

TEST(Cli, ErrorsExitTwo) {
    EXPECT_EQ(cli("generate -c /nonexistent/config.json").exit_code, 2);
    EXPECT_EQ(cli("tcp --matrix x").exit_code, 2);
    EXPECT_NE(cli("no-such-command").exit_code, 0);
}

TEST(Cli, SyntaxCheck) {
    Dir d;
    EXPECT_EQ(cli("syntax-check " + shell_quote(d.file("A.java", "int f() {\n    return 1;\n}\n"))).exit_code, 0);
    EXPECT_EQ(cli("syntax-check " + shell_quote(d.file("B.java", "int f() {\n    return 1\n}\n"))).exit_code, 1);
}
