#include <doctest.h>

#include <cmath>
#include <vector>

#include "hbtm/random.hpp"

using namespace hbtm;

TEST_CASE("counter streams are reproducible and key-sensitive") {
    CounterStream a(stream_key(1, {2, 3}));
    CounterStream b(stream_key(1, {2, 3}));
    CounterStream c(stream_key(1, {3, 2}));
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
    }
}

TEST_CASE("uniforms stay inside the open unit interval with the right mean") {
    CounterStream s(stream_key(7, {}));
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("gamma variates match shape mean and variance") {
    for (double shape : {0.1, 0.5, 1.0, 3.0, 40.0}) {
        CounterStream s(stream_key(11, {static_cast<std::uint64_t>(shape * 10)}));
        const int n = 200000;
        double sum = 0.0;
        double sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = std::exp(log_gamma_variate(s, shape));
            sum += g;
            sum2 += g * g;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        CAPTURE(shape);
        CHECK(mean == doctest::Approx(shape).epsilon(0.03));
        CHECK(var == doctest::Approx(shape).epsilon(0.08));
    }
}

TEST_CASE("dirichlet draws are on the simplex") {
    CounterStream s(stream_key(5, {}));
    for (int i = 0; i < 1000; ++i) {
        const auto x = sample_dirichlet(s, 15, 0.1);
        double total = 0.0;
        for (double v : x) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("categorical draws follow unnormalized weights") {
    const std::vector<double> w{2.0, 0.0, 6.0};
    CHECK(sample_categorical(w, 1e-9) == 0);
    CHECK(sample_categorical(w, 0.2499) == 0);
    CHECK(sample_categorical(w, 0.2501) == 2);
    CHECK(sample_categorical(w, 1.0 - 1e-16) == 2);

    CounterStream s(stream_key(3, {}));
    std::vector<int> hits(3, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++hits[sample_categorical(w, s.next_uniform())];
    CHECK(hits[1] == 0);
    CHECK(hits[0] / double(n) == doctest::Approx(0.25).epsilon(0.03));
}
