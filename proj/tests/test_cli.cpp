#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hbtm/cli.hpp"
#include "hbtm/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "hbtm");
    std::ostringstream out;
    std::ostringstream err;
    const int code = hbtm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("help exits zero and unknown flags are usage errors") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({}).code == 2);
    const Run bad = run({"fit", "--nope"});
    CHECK(bad.code == 2);
    CHECK(nlohmann::json::parse(bad.err)["error"] == "usage_error");
}

TEST_CASE("generate, fit, analyze and export through the command line") {
    TempDir d("hbtm_cli_pipeline");
    REQUIRE(run({"generate", "--K", "2", "--M", "12", "--N", "30", "--seed", "5", "--out-prefix", d / "syn"}).code == 0);
    CHECK(fs::exists(d / "syn.jsonl"));
    CHECK(fs::exists(d / "syn.schema.json"));
    const auto truth = hbtm::read_json_file(d / "syn.truth.json");
    CHECK(truth["assignments"].size() == 12);

    const Run f = run({"fit", "--corpus", d / "syn.jsonl", "-K", "2", "--sweeps", "30", "--burn-in", "10", "--stride",
                       "5", "--seed", "3", "--audit", "--out", d / "model.json"});
    REQUIRE(f.code == 0);
    const auto model = hbtm::read_json_file(d / "model.json");
    CHECK(model["diagnostics"]["audit_failures"] == 0);
    CHECK(model["trace_ids"].size() == 12);
    CHECK(model["config"]["K"] == 2);

    {
        std::ofstream g(d / "grades.csv");
        g << "trace_id,SA,SFE,FE\n";
        for (int m = 1; m <= 12; ++m) g << "trace_" << m << "," << (m % 5) << ",," << 5 * m << "\n";
    }
    REQUIRE(run({"analyze", "--model", d / "model.json", "--grades", d / "grades.csv", "--out", d / "report.json"})
                .code == 0);
    const auto report = hbtm::read_json_file(d / "report.json");
    CHECK(report["joined_traces"] == 12);
    CHECK(report["table_ii"].contains("FE"));

    REQUIRE(run({"export-trait", "--model", d / "model.json", "--trait", "2", "--out", d / "t2.csv"}).code == 0);
    const std::string csv = slurp(d / "t2.csv");
    CHECK(csv.rfind("kind,event_label,bin_index,probability\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 15 + 15 * 12);

    const Run bad_trait = run({"export-trait", "--model", d / "model.json", "--trait", "3", "--out", d / "t3.csv"});
    CHECK(bad_trait.code == 1);
    CHECK(nlohmann::json::parse(bad_trait.err)["error"] == "input_error");
}

TEST_CASE("fit reruns are byte-identical") {
    TempDir d("hbtm_cli_rerun");
    REQUIRE(run({"generate", "--K", "3", "--M", "8", "--N", "20", "--seed", "1", "--out-prefix", d / "c"}).code == 0);
    for (const char* name : {"a.json", "b.json"}) {
        REQUIRE(run({"fit", "--corpus", d / "c.jsonl", "-K", "3", "--sweeps", "20", "--burn-in", "5", "--stride", "3",
                     "--seed", "11", "--out", d / name})
                    .code == 0);
    }
    CHECK(slurp(d / "a.json") == slurp(d / "b.json"));
}

TEST_CASE("configuration files feed subcommand options and flags override them") {
    TempDir d("hbtm_cli_config");
    REQUIRE(run({"generate", "--K", "2", "--M", "4", "--N", "10", "--seed", "2", "--out-prefix", d / "c"}).code == 0);
    {
        std::ofstream cfg(d / "cfg.json");
        cfg << R"({"fit": {"K": 3, "sweeps": 12, "burn-in": 2, "stride": 2, "seed": 4}})";
    }
    REQUIRE(run({"--config", d / "cfg.json", "fit", "--corpus", d / "c.jsonl", "--out", d / "m.json"}).code == 0);
    CHECK(hbtm::read_json_file(d / "m.json")["config"]["K"] == 3);
    REQUIRE(run({"--config", d / "cfg.json", "fit", "--corpus", d / "c.jsonl", "-K", "4", "--out", d / "m.json"})
                .code == 0);
    CHECK(hbtm::read_json_file(d / "m.json")["config"]["K"] == 4);

    {
        std::ofstream cfg(d / "bad.json");
        cfg << R"({"fit": {"bogus": 1}})";
    }
    CHECK(run({"--config", d / "bad.json", "fit", "--corpus", d / "c.jsonl", "--out", d / "m.json"}).code == 2);
}

TEST_CASE("invalid numeric configurations are rejected") {
    TempDir d("hbtm_cli_invalid");
    REQUIRE(run({"generate", "--K", "2", "--M", "4", "--N", "10", "--out-prefix", d / "c"}).code == 0);
    const Run r = run({"fit", "--corpus", d / "c.jsonl", "--sweeps", "10", "--burn-in", "10", "--out", d / "m.json"});
    CHECK(r.code == 1);
    CHECK(nlohmann::json::parse(r.err)["error"] == "config_error");
    CHECK(run({"fit", "--corpus", d / "c.jsonl", "--alpha", "0", "--out", d / "m.json"}).code == 1);
    CHECK(run({"generate", "--M", "0", "--out-prefix", d / "z"}).code == 1);
    CHECK(run({"fit", "--corpus", d / "missing.jsonl", "--out", d / "m.json"}).code == 2);
}

TEST_CASE("ingest writes per-session corpora, rejects and a conserving summary") {
    TempDir d("hbtm_cli_ingest");
    {
        std::ofstream raw(d / "log.csv");
        raw << "session,student_Id,exercise,activity,start_time,end_time,idle_time,mouse_wheel,mouse_wheel_click,"
               "mouse_click_left,mouse_click_right,mouse_movement,keystroke\n"
               "1,1,Es_1_1,Study_Es_1_1,2.10.2014 11:21:11,2.10.2014 11:21:40,0,0,0,3,0,10,0\n"
               "1,2,Es_1_1,Deeds_Es_1_1,2.10.2014 11:21:11,2.10.2014 11:31:40,0,0,0,30,0,10,12\n"
               "1,2,Es_1_1,Aulaweb,2.10.2014 11:31:40,2.10.2014 11:31:40,0,0,0,0,0,0,0\n"
               "2,1,Es_2_1,TextEditor_Es_2_1,9.10.2014 11:21:11,9.10.2014 11:21:05,0,0,0,0,0,0,0\n"
               "2,1,Es_2_1,Other,9.10.2014 11:21:11,9.10.2014 11:22:05,0,0,0,0,1,0,1\n";
    }
    const Run r = run({"ingest", "--raw", d / "log.csv", "--out-dir", d / "out"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(d / "out/session_1.jsonl"));
    CHECK(fs::exists(d / "out/session_2.jsonl"));
    CHECK(fs::exists(d / "out/schema.json"));
    const auto summary = hbtm::read_json_file(d / "out/summary.json");
    CHECK(summary["rows_parsed"] == 5);
    CHECK(summary["tokens"] == 3);
    CHECK(summary["filtered"] == 1);
    CHECK(summary["rejected"] == 1);
    CHECK(summary["conservation_holds"] == true);
    const std::string rejects = slurp(d / "out/rejects.csv");
    CHECK(rejects.find("negative duration") != std::string::npos);

    const auto corpus = hbtm::load_corpus(d / "out/session_1.jsonl", d / "out/schema.json");
    REQUIRE(corpus.num_traces() == 2);
    CHECK(corpus.traces[0].trace_id == "1@1");
    CHECK(corpus.traces[1].tokens.size() == 1);
    CHECK(corpus.traces[1].tokens[0] == hbtm::Token{1, 5, 4});

    // Same inputs, same bytes.
    REQUIRE(run({"ingest", "--raw", d / "log.csv", "--out-dir", d / "again"}).code == 0);
    CHECK(slurp(d / "out/session_1.jsonl") == slurp(d / "again/session_1.jsonl"));
    CHECK(slurp(d / "out/summary.json").size() > 0);

    std::ofstream(d / "cols.json") << R"({"session": "sess"})";
    const Run missing = run({"ingest", "--raw", d / "log.csv", "--column-map", d / "cols.json", "--out-dir", d / "x"});
    CHECK(missing.code == 1);
    CHECK(nlohmann::json::parse(missing.err)["error"] == "config_error");
}
