#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "hbtm/generator.hpp"
#include "oracle.hpp"

using namespace hbtm;

namespace {

double row_sum(std::span<const double> r) { return std::accumulate(r.begin(), r.end(), 0.0); }

}  // namespace

TEST_CASE("sampled parameters are row-stochastic and reproducible") {
    const Schema s = Schema::standard();
    const Hyperparams h{1.0, 0.1, 0.1, 0.1};
    const TrueParams a = sample_params(20, 4, s, h, 17);
    const TrueParams b = sample_params(20, 4, s, h, 17);
    CHECK(a == b);
    CHECK(a.theta.rows() == 20);
    CHECK(a.phi.cols() == 15);
    CHECK(a.psi.dim2() == 7);
    CHECK(a.tau.dim2() == 5);
    for (std::size_t m = 0; m < 20; ++m) CHECK(row_sum(a.theta.row(m)) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(row_sum(a.phi.row(k)) == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t e = 0; e < 15; ++e) {
            CHECK(row_sum(a.psi.slice(k, e)) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(row_sum(a.tau.slice(k, e)) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK_FALSE(a == sample_params(20, 4, s, h, 18));
}

TEST_CASE("huge concentration gives near-uniform rows") {
    const Schema s = Schema::standard();
    const Hyperparams h{1e6, 1e6, 1e6, 1e6};
    const TrueParams p = sample_params(5, 3, s, h, 2);
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t e = 0; e < 15; ++e) {
            CHECK(std::abs(p.phi(k, e) - 1.0 / 15.0) < 1e-2);
            for (std::size_t t = 0; t < 7; ++t) CHECK(std::abs(p.psi(k, e, t) - 1.0 / 7.0) < 1e-2);
        }
    }
    for (std::size_t m = 0; m < 5; ++m)
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(p.theta(m, k) - 1.0 / 3.0) < 1e-2);
}

TEST_CASE("generated corpora have the requested shape and valid tokens") {
    const Schema s = Schema::standard();
    const Hyperparams h{1.0, 0.1, 0.1, 0.1};
    const TrueParams p = sample_params(4, 3, s, h, 1);
    const LabeledCorpus lc = generate(p, s, {5, 1, 9, 3}, 8);
    REQUIRE(lc.corpus.num_traces() == 4);
    CHECK(lc.corpus.traces[0].trace_id == "trace_1");
    CHECK(lc.corpus.traces[3].trace_id == "trace_4");
    CHECK(lc.corpus.trace_lengths() == std::vector<std::size_t>{5, 1, 9, 3});
    CHECK(validate_corpus(lc.corpus).empty());
    for (std::size_t m = 0; m < 4; ++m) {
        REQUIRE(lc.assignments[m].size() == lc.corpus.traces[m].tokens.size());
        for (auto z : lc.assignments[m]) CHECK(z < 3);
    }
    const LabeledCorpus again = generate(p, s, {5, 1, 9, 3}, 8);
    CHECK(again.corpus == lc.corpus);
    CHECK(again.assignments == lc.assignments);
}

TEST_CASE("empirical token frequencies follow the generating parameters") {
    // One trace, one trait: the event marginal is phi[0] and the time-bin
    // marginal for each event is psi[0][e].
    const Schema s = Schema::generic(3, 2, 2);
    TrueParams p{Matrix(1, 1), Matrix(1, 3), Tensor3(1, 3, 2), Tensor3(1, 3, 2)};
    p.theta(0, 0) = 1.0;
    const double phi[3] = {0.2, 0.5, 0.3};
    for (std::size_t e = 0; e < 3; ++e) {
        p.phi(0, e) = phi[e];
        p.psi(0, e, 0) = 0.25;
        p.psi(0, e, 1) = 0.75;
        p.tau(0, e, 0) = 0.6;
        p.tau(0, e, 1) = 0.4;
    }
    const std::size_t n = 100000;
    const LabeledCorpus lc = generate(p, s, {n}, 4);
    std::vector<double> ev(3, 0.0);
    double t1 = 0.0;
    double i0 = 0.0;
    for (const auto& tok : lc.corpus.traces[0].tokens) {
        ev[tok.event] += 1.0;
        t1 += tok.time_bin == 1 ? 1.0 : 0.0;
        i0 += tok.interaction_level == 0 ? 1.0 : 0.0;
    }
    for (std::size_t e = 0; e < 3; ++e) CHECK(std::abs(ev[e] / n - phi[e]) < 0.01);
    CHECK(std::abs(t1 / n - 0.75) < 0.01);
    CHECK(std::abs(i0 / n - 0.6) < 0.01);
}

TEST_CASE("joint log likelihood agrees with the straight-line product") {
    const Schema s = Schema::standard();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Hyperparams h{0.5 + 0.1 * static_cast<double>(seed % 5), 0.3, 0.4, 0.5};
        const TrueParams p = sample_params(6, 3, s, h, seed);
        const LabeledCorpus lc = generate(p, s, std::vector<std::size_t>(6, 15), seed + 1000);
        const double lib = joint_log_likelihood(p, lc, h);
        const double ref = oracle::straight_line_joint(p, lc, h);
        CAPTURE(seed);
        CHECK(std::isfinite(lib));
        CHECK(std::abs(lib - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("joint log likelihood is invariant to relabeling traits") {
    const Schema s = Schema::standard();
    const Hyperparams h{1.0, 0.3, 0.3, 0.3};
    const TrueParams p = sample_params(5, 3, s, h, 77);
    const LabeledCorpus lc = generate(p, s, std::vector<std::size_t>(5, 20), 78);
    const double base = joint_log_likelihood(p, lc, h);

    const std::vector<std::uint32_t> perm{2, 0, 1};
    TrueParams q = p;
    LabeledCorpus relabeled = lc;
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t m = 0; m < 5; ++m) q.theta(m, perm[k]) = p.theta(m, k);
        for (std::size_t e = 0; e < 15; ++e) {
            q.phi(perm[k], e) = p.phi(k, e);
            for (std::size_t t = 0; t < 7; ++t) q.psi(perm[k], e, t) = p.psi(k, e, t);
            for (std::size_t i = 0; i < 5; ++i) q.tau(perm[k], e, i) = p.tau(k, e, i);
        }
    }
    for (auto& row : relabeled.assignments)
        for (auto& z : row) z = perm[z];
    CHECK(joint_log_likelihood(q, relabeled, h) == base);
}

TEST_CASE("zero-probability tokens give minus infinity") {
    const Schema s = Schema::generic(2, 1, 1);
    TrueParams p{Matrix(1, 1), Matrix(1, 2), Tensor3(1, 2, 1), Tensor3(1, 2, 1)};
    p.theta(0, 0) = 1.0;
    p.phi(0, 0) = 1.0;
    p.phi(0, 1) = 0.0;
    p.psi(0, 0, 0) = p.psi(0, 1, 0) = 1.0;
    p.tau(0, 0, 0) = p.tau(0, 1, 0) = 1.0;
    LabeledCorpus lc{Corpus{s, {{"a", {{1, 0, 0}}}}}, {{0}}};
    const double v = joint_log_likelihood(p, lc, Hyperparams{1.0, 1.0, 1.0, 1.0});
    CHECK(v == -std::numeric_limits<double>::infinity());
}

TEST_CASE("log dirichlet density") {
    const std::vector<double> x{0.2, 0.3, 0.5};
    // a = 1: density is Gamma(3) = 2 everywhere.
    CHECK(log_dirichlet_density(x, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    // a = 2: Gamma(6)/1 * 0.2*0.3*0.5 = 120 * 0.03
    CHECK(log_dirichlet_density(x, 2.0) == doctest::Approx(std::log(3.6)).epsilon(1e-13));
    const std::vector<double> edge{0.0, 1.0};
    CHECK(log_dirichlet_density(edge, 2.0) == -std::numeric_limits<double>::infinity());
    CHECK(log_dirichlet_density(edge, 0.5) == std::numeric_limits<double>::infinity());
    CHECK(log_dirichlet_density(edge, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("K = 1 parameters have an all-ones theta column") {
    const TrueParams p = sample_params(7, 1, Schema::standard(), Hyperparams{}, 3);
    for (std::size_t m = 0; m < 7; ++m) CHECK(p.theta(m, 0) == 1.0);
}

TEST_CASE("degenerate categoricals are respected") {
    const Schema s = Schema::standard();
    TrueParams p = sample_params(3, 2, s, Hyperparams{}, 5);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t e = 0; e < 15; ++e) p.phi(k, e) = e == 8 ? 1.0 : 0.0;
    p.theta(1, 0) = 1.0;
    p.theta(1, 1) = 0.0;
    const LabeledCorpus lc = generate(p, s, {50, 50, 50}, 6);
    for (const auto& tr : lc.corpus.traces)
        for (const auto& tok : tr.tokens) CHECK(tok.event == 8);
    for (auto z : lc.assignments[1]) CHECK(z == 0);
}

TEST_CASE("event frequencies over 100k tokens match the mixture marginal") {
    const Schema s = Schema::standard();
    const TrueParams p = sample_params(1, 3, s, Hyperparams{1.0, 0.5, 0.5, 0.5}, 31);
    const LabeledCorpus lc = generate(p, s, {100000}, 32);
    std::vector<double> freq(15, 0.0);
    for (const auto& tok : lc.corpus.traces[0].tokens) freq[tok.event] += 1e-5;
    for (std::size_t e = 0; e < 15; ++e) {
        double marginal = 0.0;
        for (std::size_t k = 0; k < 3; ++k) marginal += p.theta(0, k) * p.phi(k, e);
        CHECK(std::abs(freq[e] - marginal) < 0.01);
    }
}

TEST_CASE("uniform single-token joint") {
    const Schema s = Schema::standard();
    TrueParams p{Matrix(1, 1), Matrix(1, 15), Tensor3(1, 15, 7), Tensor3(1, 15, 5)};
    p.theta(0, 0) = 1.0;
    for (std::size_t e = 0; e < 15; ++e) {
        p.phi(0, e) = 1.0 / 15.0;
        for (std::size_t t = 0; t < 7; ++t) p.psi(0, e, t) = 1.0 / 7.0;
        for (std::size_t i = 0; i < 5; ++i) p.tau(0, e, i) = 1.0 / 5.0;
    }
    const LabeledCorpus lc{Corpus{s, {{"x", {{3, 1, 2}}}}}, {{0}}};
    // Dirichlet(1) densities: Gamma(15) for phi, Gamma(7)^15 for psi, Gamma(5)^15 for tau, Gamma(1) for theta.
    const double prior = std::lgamma(15.0) + 15.0 * (std::lgamma(7.0) + std::lgamma(5.0));
    const double v = joint_log_likelihood(p, lc, Hyperparams{1.0, 1.0, 1.0, 1.0});
    CHECK(v == doctest::Approx(prior - std::log(525.0)).epsilon(1e-13));
}

TEST_CASE("generating parameters score above a decoy on their own data") {
    const Schema s = Schema::standard();
    const Hyperparams h{1.0, 0.1, 0.1, 0.1};
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TrueParams truth = sample_params(20, 3, s, h, 500 + seed);
        TrueParams decoy = sample_params(20, 3, s, h, 900 + seed);
        decoy.theta = truth.theta;  // keep the comparison on the trait distributions
        const LabeledCorpus lc = generate(truth, s, std::vector<std::size_t>(20, 100), 700 + seed);
        // Data term only: total minus the prior densities evaluated on an empty corpus.
        LabeledCorpus empty = lc;
        for (auto& tr : empty.corpus.traces) tr.tokens.clear();
        for (auto& row : empty.assignments) row.clear();
        const double lt = joint_log_likelihood(truth, lc, h) - joint_log_likelihood(truth, empty, h);
        const double ld = joint_log_likelihood(decoy, lc, h) - joint_log_likelihood(decoy, empty, h);
        wins += lt > ld ? 1 : 0;
    }
    CHECK(wins == 20);
}
