#include "rejectsched/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace rejectsched::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("rejectsched_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name, const std::string& text = {}) {
        const auto p = (dir_ / name).string();
        if (!text.empty()) std::ofstream(p) << text;
        return p;
    }
    static std::string slurp(const std::string& p) { return read_file(p); }

    fs::path dir_;
};

const char* kTwoJobs =
    R"({"model":"flow","machines":1,"jobs":[{"id":0,"release":0,"proc":[1]},{"id":1,"release":0,"proc":[2]}]})";

TEST_F(CliTest, RunTwoJobsThenVerify) {
    const auto in = file("two.json", kTwoJobs);
    const auto run_out = file("run.json");
    ASSERT_EQ(call({"run", in, "--engine", "flow", "--eps", "0.5", "--out", run_out}).code, 0);
    const auto doc = parse_json(slurp(run_out));
    EXPECT_DOUBLE_EQ(doc["summary"]["total_flow"].get<double>(), 4.0);
    const auto v = call({"verify", run_out});
    EXPECT_EQ(v.code, 0) << v.err;
    EXPECT_TRUE(parse_json(v.out)["certified"].get<bool>());
}

TEST_F(CliTest, VerifyCatchesEditedDuals) {
    const auto in = file("two.json", kTwoJobs);
    auto doc = parse_json(call({"run", in}).out);
    doc["duals"]["lambda"][0]["lambda"] = 50.0;
    const auto bad = file("bad.json", doc.dump());
    const auto v = call({"verify", bad});
    EXPECT_EQ(v.code, 1);
    EXPECT_FALSE(parse_json(v.out)["violations"].empty());
}

TEST_F(CliTest, TraceCsv) {
    const auto in = file("two.json", kTwoJobs);
    const auto csv = file("trace.csv");
    ASSERT_EQ(call({"run", in, "--csv", csv, "--out", file("run.json")}).code, 0);
    EXPECT_EQ(slurp(csv), "job,machine,start,speed,end,outcome\n0,0,0.0,1.0,1.0,completed\n1,0,1.0,1.0,3.0,completed\n");
}

TEST_F(CliTest, UsageErrors) {
    const auto in = file("two.json", kTwoJobs);
    EXPECT_EQ(call({}).code, 2);
    EXPECT_EQ(call({"run"}).code, 2);
    EXPECT_EQ(call({"run", in, "--frobnicate"}).code, 2);
    EXPECT_EQ(call({"run", in, "--engine", "energy"}).code, 2);
    EXPECT_EQ(call({"run", in, "--engine", "quantum"}).code, 2);
    EXPECT_EQ(call({"run", file("missing.json")}).code, 2);
    EXPECT_EQ(call({"run", file("junk.json", "{not json")}).code, 2);
    EXPECT_EQ(call({"run", in, "--eps", "0.3"}).code, 2);  // 1/eps must be an integer
    EXPECT_EQ(call({"verify", in}).code, 2);
    EXPECT_EQ(call({"adversary", "lb9"}).code, 2);
    EXPECT_EQ(call({"--help"}).code, 0);
}

TEST_F(CliTest, GenerateIsSeeded) {
    const auto a = call({"generate", "--n", "5", "--m", "2", "--seed", "7"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, call({"generate", "--n", "5", "--m", "2", "--seed", "7"}).out);
    EXPECT_NE(a.out, call({"generate", "--n", "5", "--m", "2", "--seed", "8"}).out);
    const auto inst = parse_instance(a.out);
    EXPECT_EQ(inst.size(), 5u);
    EXPECT_EQ(inst.machines, 2u);
}

TEST_F(CliTest, FlowEnergyRoundTrip) {
    const auto in = file("fe.json");
    ASSERT_EQ(call({"generate", "--model", "flow_energy", "--n", "12", "--alpha", "3", "--w-hi", "4", "--out", in}).code,
              0);
    const auto out = file("run.json");
    ASSERT_EQ(call({"run", in, "--engine", "flow_energy", "--eps", "0.5", "--out", out}).code, 0);
    EXPECT_EQ(parse_json(slurp(out))["alpha"], 3.0);
    EXPECT_EQ(call({"verify", out}).code, 0);
}

TEST_F(CliTest, EnergyRoundTrip) {
    const auto in = file("e.json");
    ASSERT_EQ(call({"generate", "--model", "energy_deadline", "--n", "4", "--m", "2", "--out", in}).code, 0);
    const auto out = file("run.json");
    ASSERT_EQ(call({"run", in, "--engine", "energy", "--out", out}).code, 0);
    EXPECT_EQ(call({"verify", out}).code, 0);

    auto doc = parse_json(slurp(out));
    doc["trace"]["records"][0]["start"] = 1000.0;
    EXPECT_EQ(call({"verify", file("edited.json", doc.dump())}).code, 1);
}

TEST_F(CliTest, MisalignedGridWarns) {
    const auto in = file("e.json", R"({"model":"energy_deadline","machines":1,"alpha":2,
        "jobs":[{"id":0,"release":0,"proc":[1],"deadline":2}]})");
    const auto grid = file("grid.json", R"({"speeds":[1,3],"time_step":0.5})");
    const auto r = call({"run", in, "--engine", "energy", "--grid", grid});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("compatible time_step"), std::string::npos) << r.err;
}

TEST_F(CliTest, RatioRow) {
    const auto in = file("two.json", kTwoJobs);
    const auto r = call({"ratio", in, "--eps", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    // lambda = (2 + 1)/3 + (4 + 2)/3; beta integrates to 2/9 * (1 + 3).
    const double lb = 3.0 - 8.0 / 9.0;
    EXPECT_EQ(r.out, std::string(kCsvHeader) + "two,flow,0.5,,2,1,4.0," + num(lb) + ",4.0,1.0," + num(4.0 / lb) + ",0.0,\n");
    const auto timed = call({"ratio", in, "--timing", "--id", "x"});
    EXPECT_NE(timed.out.substr(timed.out.size() - 2), ",\n");
    EXPECT_EQ(call({"ratio", in, "--max-brute", "1"}).out.find(",4.0,1.0,"), std::string::npos);
}

TEST_F(CliTest, RatioWithInfeasibleDuals) {
    const auto in = file("gap.json", R"({"model":"flow","machines":2,"jobs":[
        {"id":0,"release":0,"proc":[1.5,100]},{"id":1,"release":0.1,"proc":[3,100]},
        {"id":2,"release":1.4,"proc":[1.9,2.5]}]})");
    const auto r = call({"ratio", in, "--eps", "0.5"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("gap,flow,0.5,,3,2,"), std::string::npos);
    std::vector<std::string> cells;
    std::istringstream row(r.out.substr(r.out.find('\n') + 1));
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    ASSERT_GE(cells.size(), 8u);
    EXPECT_EQ(cells[7], "");  // dual_lb
    EXPECT_NE(cells[8], "");  // opt
    EXPECT_EQ(call({"run", in, "--eps", "0.5", "--out", file("run.json")}).code, 0);
    EXPECT_EQ(call({"verify", file("run.json")}).code, 1);
}

TEST_F(CliTest, SweepIsDeterministicAcrossThreadCounts) {
    const std::vector<std::string> args{"sweep", "--engine", "flow", "--eps", "1,0.5", "--count", "6", "--n", "6",
                                        "--m", "2"};
    ::setenv("REJECTSCHED_THREADS", "1", 1);
    const auto one = call(args);
    ::setenv("REJECTSCHED_THREADS", "4", 1);
    const auto four = call(args);
    ::unsetenv("REJECTSCHED_THREADS");
    ASSERT_EQ(one.code, 0) << one.err;
    EXPECT_EQ(one.out, four.out);
    EXPECT_EQ(std::count(one.out.begin(), one.out.end(), '\n'), 13);

    ::setenv("REJECTSCHED_THREADS", "zero", 1);
    EXPECT_EQ(call(args).code, 2);
    ::unsetenv("REJECTSCHED_THREADS");
}

TEST_F(CliTest, SweepEngines) {
    for (const char* e : {"flow_energy", "energy"}) {
        const auto r = call({"sweep", "--engine", e, "--alpha", "2,3", "--count", "3", "--n", "4"});
        ASSERT_EQ(r.code, 0) << e << r.err;
        EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7) << e;
    }
}

TEST_F(CliTest, Lb1SweepMatchesTranscripts) {
    const auto r = call({"sweep", "--adversary", "lb1", "--L", "4,16", "--eps", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream rows(r.out);
    std::string line;
    std::getline(rows, line);
    for (double L : {4.0, 16.0}) {
        std::getline(rows, line);
        const auto t = oracle::lb1_adversary(0.5, L, oracle::flow_engine(0.5));
        EXPECT_NE(line.find(',' + num(t.adversary_cost) + ',' + num(t.ratio) + ','), std::string::npos) << line;
    }
}

TEST_F(CliTest, AdversaryTranscripts) {
    const auto a = call({"adversary", "lb2", "--alpha", "3"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, oracle::to_json(oracle::lb2_adversary(3)).dump(2) + "\n");
    const auto b = call({"adversary", "lb1", "--eps", "1", "--L", "2"});
    EXPECT_EQ(parse_json(b.out)["adversary"], "lb1");
}

}  // namespace
}  // namespace rejectsched::cli
