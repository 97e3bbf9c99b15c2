#include "hbtm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hbtm/core.hpp"

namespace hbtm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterStream::next_u64() noexcept {
    state_ += kGolden;
    return mix64(state_);
}

double CounterStream::next_uniform() noexcept {
    // (x + 0.5) / 2^53 never hits 0 or 1.
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double CounterStream::next_normal() noexcept {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) noexcept {
    std::uint64_t h = mix64(seed + kGolden);
    for (std::uint64_t c : coords) {
        h = mix64(h ^ mix64(c + kGolden));
    }
    return h;
}

double log_gamma_variate(CounterStream& stream, double shape) {
    if (!(shape > 0.0)) {
        throw InputError("gamma shape must be positive");
    }
    // Marsaglia & Tsang; shapes below one are boosted to shape + 1 and
    // corrected by U^(1/shape).
    double log_boost = 0.0;
    if (shape < 1.0) {
        log_boost = std::log(stream.next_uniform()) / shape;
        shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = stream.next_normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = stream.next_uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x || std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return std::log(d * v) + log_boost;
        }
    }
}

std::vector<double> sample_dirichlet(CounterStream& stream, std::size_t dim, double concentration) {
    std::vector<double> out(dim);
    if (dim == 0) {
        return out;
    }
    double top = -std::numeric_limits<double>::infinity();
    for (auto& v : out) {
        v = log_gamma_variate(stream, concentration);
        top = std::max(top, v);
    }
    double total = 0.0;
    for (auto& v : out) {
        v = std::exp(v - top);
        total += v;
    }
    for (auto& v : out) {
        v /= total;
    }
    return out;
}

std::size_t sample_categorical(std::span<const double> weights, double u) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    const double target = u * total;
    double running = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] > 0.0) {
            last_positive = k;
        }
        running += weights[k];
        if (running > target) {
            return k;
        }
    }
    return last_positive;
}

}  // namespace hbtm
