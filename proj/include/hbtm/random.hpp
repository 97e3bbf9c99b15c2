#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace hbtm {

/// Counter-based random stream.  A stream is identified by a 64-bit key
/// (usually derived from a seed and the coordinates of the draw) and yields
/// SplitMix64 outputs of key + i * golden-gamma for i = 0, 1, ...  Two
/// streams with different keys are independent for practical purposes, and
/// draws never depend on the order in which streams are consumed.
class CounterStream {
  public:
    explicit CounterStream(std::uint64_t key) noexcept : state_(key) {}

    std::uint64_t next_u64() noexcept;

    /// Uniform in the open interval (0, 1), 53-bit resolution.
    double next_uniform() noexcept;

    /// Standard normal via Box-Muller (one value per call, the partner is discarded).
    double next_normal() noexcept;

  private:
    std::uint64_t state_;
};

/// Hashes a seed and a list of coordinates into a stream key.
std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) noexcept;

/// Logarithm of a Gamma(shape, 1) variate.  Working in log space keeps very
/// small shapes (e.g. 0.01) from underflowing to exactly zero.
double log_gamma_variate(CounterStream& stream, double shape);

/// Draw from a symmetric Dirichlet of the given dimension and concentration.
/// Every entry is strictly positive unless it underflows double precision.
std::vector<double> sample_dirichlet(CounterStream& stream, std::size_t dim, double concentration);

/// Index drawn from unnormalized nonnegative weights using one uniform u in
/// (0, 1): the first k whose running sum exceeds u * total.  Returns the last
/// positive-weight index if rounding lets the scan run off the end.
std::size_t sample_categorical(std::span<const double> weights, double u);

}  // namespace hbtm
