#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "hbtm/generator.hpp"
#include "hbtm/io.hpp"
#include "hbtm/sampler.hpp"

using namespace hbtm;

TEST_CASE("corpus JSON lines round trip") {
    const Schema s = Schema::standard();
    const TrueParams p = sample_params(4, 2, s, Hyperparams{}, 1);
    const Corpus c = generate(p, s, {3, 1, 4, 1}, 2).corpus;
    std::ostringstream out;
    write_corpus_jsonl(out, c);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
    CHECK(first["trace_id"] == "trace_1");
    CHECK(first["tokens"].size() == 3);
    CHECK(first["tokens"][0].size() == 3);

    std::istringstream in(text);
    CHECK(read_corpus_jsonl(in, s) == c);
}

TEST_CASE("corpus reader rejects malformed lines and out-of-range tokens") {
    const Schema s = Schema::standard();
    std::istringstream bad_json("{\"trace_id\": \"a\", \"tokens\": [[0,0,0]\n");
    CHECK_THROWS_AS(read_corpus_jsonl(bad_json, s), InputError);
    std::istringstream bad_tok("{\"trace_id\": \"a\", \"tokens\": [[15,0,0]]}\n");
    CHECK_THROWS_AS(read_corpus_jsonl(bad_tok, s), InputError);
    std::istringstream short_tok("{\"trace_id\": \"a\", \"tokens\": [[1,0]]}\n");
    CHECK_THROWS_AS(read_corpus_jsonl(short_tok, s), InputError);
}

TEST_CASE("schema JSON round trip") {
    const Schema s = Schema::standard();
    const nlohmann::json j = schema_to_json(s);
    CHECK(j["event_labels"].size() == 15);
    CHECK(schema_from_json(j) == s);
    nlohmann::json broken = j;
    broken["time_bin_edges"] = {0, 5, 3};
    CHECK_THROWS_AS(schema_from_json(broken), InputError);
}

TEST_CASE("fitted model round trip") {
    const Schema s = Schema::standard();
    const TrueParams p = sample_params(5, 2, s, Hyperparams{}, 3);
    const Corpus c = generate(p, s, std::vector<std::size_t>(5, 10), 4).corpus;
    FitConfig cfg;
    cfg.num_traits = 2;
    cfg.sweeps = 12;
    cfg.burn_in = 4;
    cfg.sample_stride = 2;
    cfg.seed = 77;
    const FitResult r = fit(c, cfg);
    const FittedModel m = make_fitted_model(r, c);
    const nlohmann::json j = fitted_model_to_json(m);
    CHECK(j["format"] == "hbtm-model/1");
    CHECK(j["posterior"]["psi"]["shape"] == nlohmann::json({2, 15, 7}));
    const FittedModel back = fitted_model_from_json(j);
    CHECK(back.posterior == m.posterior);
    CHECK(back.trace_ids == m.trace_ids);
    CHECK(back.log_joint_trace == m.log_joint_trace);
    CHECK(back.config.seed == 77);
    CHECK(back.schema == s);
    CHECK(fitted_model_to_json(back).dump() == j.dump());

    nlohmann::json wrong = j;
    wrong["posterior"]["theta"]["shape"] = {4, 2};
    CHECK_THROWS(fitted_model_from_json(wrong));
}

TEST_CASE("true params round trip") {
    const TrueParams p = sample_params(3, 2, Schema::generic(4, 3, 2), Hyperparams{}, 8);
    CHECK(true_params_from_json(true_params_to_json(p)) == p);
}

TEST_CASE("fit config JSON") {
    FitConfig c;
    c.num_traits = 7;
    c.hyper.beta = 0.25;
    const FitConfig back = fit_config_from_json(fit_config_to_json(c));
    CHECK(back.num_traits == 7);
    CHECK(back.hyper.beta == 0.25);
    CHECK(back.sweeps == c.sweeps);
}

TEST_CASE("save and load corpus files") {
    const auto dir = std::filesystem::temp_directory_path() / "hbtm_io_test";
    std::filesystem::create_directories(dir);
    const Schema s = Schema::generic(3, 2, 2);
    const Corpus c{s, {{"a", {{0, 1, 1}, {2, 0, 0}}}, {"b", {{1, 1, 0}}}}};
    save_corpus(dir / "c.jsonl", dir / "c.schema.json", c);
    CHECK(load_corpus(dir / "c.jsonl", dir / "c.schema.json") == c);
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", dir / "c.schema.json"), InputError);
    std::filesystem::remove_all(dir);
}
