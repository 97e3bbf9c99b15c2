#include <doctest.h>

#include <cmath>

#include "hbtm/core.hpp"
#include "hbtm/model_state.hpp"
#include "hbtm/random.hpp"
#include "hbtm/sampler.hpp"

using namespace hbtm;

namespace {

Corpus small_corpus() {
    Corpus c;
    c.schema = Schema::standard();
    c.traces = {{"a", {{0, 0, 0}, {14, 6, 4}}}, {"b", {{3, 2, 1}}}};
    return c;
}

}  // namespace

TEST_CASE("standard schema has 15 events, 7 time bins, 5 interaction levels") {
    const Schema s = Schema::standard();
    CHECK(s.num_events() == 15);
    CHECK(s.num_time_bins() == 7);
    CHECK(s.num_interaction_levels() == 5);
    CHECK_NOTHROW(s.validate());
    CHECK(s.time_bin_edges.front() == 0.0);
    CHECK(s.time_bin_edges.back() == 14000.0);
    CHECK(s.interaction_bin_edges.back() == 4779.0);
}

TEST_CASE("schema validation rejects non-increasing edges and empty alphabets") {
    Schema s = Schema::standard();
    s.time_bin_edges[3] = s.time_bin_edges[2];
    CHECK_THROWS_AS(s.validate(), InputError);

    s = Schema::standard();
    s.interaction_bin_edges = {0.0};
    CHECK_THROWS_AS(s.validate(), InputError);

    s = Schema::standard();
    s.event_labels.clear();
    CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("validate_corpus") {
    SUBCASE("all-valid tokens give no violations") {
        CHECK(validate_corpus(small_corpus()).empty());
    }
    SUBCASE("event index equal to E is out of range") {
        Corpus c = small_corpus();
        c.traces[1].tokens[0].event = 15;
        const auto v = validate_corpus(c);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == Violation::Kind::EventOutOfRange);
        CHECK(v[0].trace_id == "b");
        CHECK(v[0].position == 0);
        CHECK(v[0].message.find("15") != std::string::npos);
    }
    SUBCASE("empty trace") {
        Corpus c = small_corpus();
        c.traces.push_back({"empty", {}});
        const auto v = validate_corpus(c);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == Violation::Kind::EmptyTrace);
        CHECK_FALSE(v[0].position.has_value());
        CHECK_THROWS_AS(require_valid(c), InputError);
    }
    SUBCASE("each bad field is reported separately") {
        Corpus c = small_corpus();
        c.traces[0].tokens[1] = {20, 7, 5};
        CHECK(validate_corpus(c).size() == 3);
    }
}

TEST_CASE("display index round trip for the 15 event numbers") {
    for (long long p = 1; p <= 15; ++p) {
        const std::size_t internal = from_display_index(p, 15, "event");
        CHECK(internal == static_cast<std::size_t>(p - 1));
        CHECK(to_display_index(internal) == static_cast<std::size_t>(p));
    }
    CHECK_THROWS_AS(from_display_index(0, 15, "event"), InputError);
    CHECK_THROWS_AS(from_display_index(16, 15, "event"), InputError);
}

TEST_CASE("hyperparameters must be positive") {
    CHECK_NOTHROW(Hyperparams{}.validate());
    CHECK_THROWS_AS((Hyperparams{0.0, 0.1, 0.1, 0.1}.validate()), ConfigError);
    CHECK_THROWS_AS((Hyperparams{1.0, 0.1, -1.0, 0.1}.validate()), ConfigError);
    CHECK_THROWS_AS((Hyperparams{1.0, 0.1, 0.1, std::nan("")}.validate()), ConfigError);
}

TEST_CASE("estimate_posterior: trace with no attached tokens has the uniform prior mean") {
    Schema s = Schema::standard();
    ModelState state(4, s, {0, 2});
    const Hyperparams h{1.0, 0.1, 0.1, 0.1};
    const Posterior p = estimate_posterior(state, h);
    for (std::size_t k = 0; k < 4; ++k) CHECK(p.theta(0, k) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("estimate_posterior: K=1 gives theta = 1 everywhere") {
    Corpus c = small_corpus();
    FitConfig cfg;
    cfg.num_traits = 1;
    const ModelState state = init_state(c, cfg);
    const Posterior p = estimate_posterior(state, cfg.hyper);
    for (std::size_t m = 0; m < c.num_traces(); ++m) CHECK(p.theta(m, 0) == 1.0);
}

TEST_CASE("estimate_posterior: N_mk = (3,1), alpha = 1 gives (4/6, 2/6)") {
    Schema s = Schema::generic(2, 1, 1);
    Corpus c{s, {{"m", {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {1, 0, 0}}}}};
    ModelState state(2, s, c.trace_lengths());
    state.attach(0, 0, c.traces[0].tokens[0], 0);
    state.attach(0, 1, c.traces[0].tokens[1], 0);
    state.attach(0, 2, c.traces[0].tokens[2], 0);
    state.attach(0, 3, c.traces[0].tokens[3], 1);
    const Posterior p = estimate_posterior(state, Hyperparams{1.0, 1.0, 1.0, 1.0});
    CHECK(p.theta(0, 0) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
    CHECK(p.theta(0, 1) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));

    // Cross-check: the mean of Dirichlet(3+1, 1+1) draws.
    double acc = 0.0;
    const int draws = 200000;
    for (int d = 0; d < draws; ++d) {
        CounterStream stream(stream_key(99, {static_cast<std::uint64_t>(d)}));
        const double g0 = std::exp(log_gamma_variate(stream, 4.0));
        const double g1 = std::exp(log_gamma_variate(stream, 2.0));
        acc += g0 / (g0 + g1);
    }
    CHECK(acc / draws == doctest::Approx(4.0 / 6.0).epsilon(0.005));
}

TEST_CASE("estimate_posterior is a pure function of the counts and rows are normalized") {
    Corpus c = small_corpus();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        FitConfig cfg;
        cfg.num_traits = 3;
        cfg.seed = seed;
        ModelState a = init_state(c, cfg);
        ModelState b = init_state(c, cfg);
        b.seed = 12345;  // bookkeeping only
        b.sweeps_done = 7;
        REQUIRE(a.same_counts(b));
        const Posterior pa = estimate_posterior(a, cfg.hyper);
        const Posterior pb = estimate_posterior(b, cfg.hyper);
        CHECK(pa == pb);
        CHECK(max_normalization_error(pa) <= 1e-12);
    }
}

TEST_CASE("estimate_posterior rejects inconsistent counts") {
    Corpus c = small_corpus();
    ModelState state(2, c.schema, c.trace_lengths());
    state.attach(0, 0, c.traces[0].tokens[0], 0);
    // Detaching with the wrong observation corrupts N_ke/N_ket/N_kei.
    state.detach(0, 0, Token{5, 1, 1});
    CHECK_THROWS_AS(estimate_posterior(state, Hyperparams{}), InternalError);
}
