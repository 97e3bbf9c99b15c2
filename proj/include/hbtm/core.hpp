#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbtm {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid configuration: bad hyperparameters, impossible sweep schedule, missing column.
class ConfigError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "config_error"; }
};

/// Malformed or out-of-contract input data.
class InputError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "input_error"; }
};

/// Broken internal invariant (inconsistent counts, corrupted sampler state).
class InternalError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "internal_error"; }
};

// ---------------------------------------------------------------------------
// Dense row-major storage
// ---------------------------------------------------------------------------

template <typename T>
class Array2 {
  public:
    Array2() = default;
    Array2(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool operator==(const Array2&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
class Array3 {
  public:
    Array3() = default;
    Array3(std::size_t d0, std::size_t d1, std::size_t d2, T fill = T{})
        : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

    std::size_t dim0() const noexcept { return d0_; }
    std::size_t dim1() const noexcept { return d1_; }
    std::size_t dim2() const noexcept { return d2_; }

    T& operator()(std::size_t a, std::size_t b, std::size_t c) { return data_[(a * d1_ + b) * d2_ + c]; }
    const T& operator()(std::size_t a, std::size_t b, std::size_t c) const {
        return data_[(a * d1_ + b) * d2_ + c];
    }

    /// The innermost axis at (a, b).
    std::span<T> slice(std::size_t a, std::size_t b) { return {data_.data() + (a * d1_ + b) * d2_, d2_}; }
    std::span<const T> slice(std::size_t a, std::size_t b) const {
        return {data_.data() + (a * d1_ + b) * d2_, d2_};
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool operator==(const Array3&) const = default;

  private:
    std::size_t d0_ = 0;
    std::size_t d1_ = 0;
    std::size_t d2_ = 0;
    std::vector<T> data_;
};

using Matrix = Array2<double>;
using Tensor3 = Array3<double>;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// The three observation alphabets: event types, duration bins and
/// interaction-intensity levels.  Bins are described by their edges, so an
/// alphabet of T bins carries T+1 strictly increasing edges.
struct Schema {
    std::vector<std::string> event_labels;
    std::vector<double> time_bin_edges;
    std::vector<double> interaction_bin_edges;

    std::size_t num_events() const noexcept { return event_labels.size(); }
    std::size_t num_time_bins() const noexcept { return time_bin_edges.empty() ? 0 : time_bin_edges.size() - 1; }
    std::size_t num_interaction_levels() const noexcept {
        return interaction_bin_edges.empty() ? 0 : interaction_bin_edges.size() - 1;
    }

    /// Throws InputError when an alphabet is empty or edges are not strictly increasing.
    void validate() const;

    /// 15 aggregated event types, 7 duration bins (seconds), 5 interaction levels.
    static Schema standard();

    /// Generic schema with placeholder labels and unit-spaced edges.
    static Schema generic(std::size_t events, std::size_t time_bins, std::size_t levels);

    bool operator==(const Schema&) const = default;
};

struct Token {
    std::uint32_t event = 0;
    std::uint32_t time_bin = 0;
    std::uint32_t interaction_level = 0;

    bool operator==(const Token&) const = default;
};

struct Trace {
    std::string trace_id;
    std::vector<Token> tokens;

    bool operator==(const Trace&) const = default;
};

struct Corpus {
    Schema schema;
    std::vector<Trace> traces;

    std::size_t num_traces() const noexcept { return traces.size(); }
    std::size_t num_tokens() const noexcept;
    std::vector<std::size_t> trace_lengths() const;

    bool operator==(const Corpus&) const = default;
};

/// Symmetric Dirichlet concentrations for the trait mixture (alpha), the
/// per-trait event distribution (beta), and the per-(trait, event) duration
/// (gamma) and interaction (delta) distributions.
struct Hyperparams {
    double alpha = 1.0;
    double beta = 0.1;
    double gamma = 0.1;
    double delta = 0.1;

    void validate() const;

    bool operator==(const Hyperparams&) const = default;
};

struct Posterior {
    Matrix theta;  // M x K
    Matrix phi;    // K x E
    Tensor3 psi;   // K x E x T
    Tensor3 tau;   // K x E x I

    std::size_t num_traits() const noexcept { return phi.rows(); }

    bool operator==(const Posterior&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    enum class Kind { EmptyTrace, EventOutOfRange, TimeBinOutOfRange, InteractionLevelOutOfRange };

    Kind kind;
    std::string trace_id;
    std::optional<std::size_t> position;
    std::string message;
};

/// Reports every empty trace and every out-of-range token index.  An empty
/// result means the corpus is admissible for fitting.
std::vector<Violation> validate_corpus(const Corpus& corpus);

/// Throws InputError carrying the first violation, if any.
void require_valid(const Corpus& corpus);

/// 1-based labels used in reports and on the command line.
constexpr std::size_t to_display_index(std::size_t internal) noexcept { return internal + 1; }

/// Inverse of to_display_index; throws InputError for 0 or values past `count`.
std::size_t from_display_index(long long display, std::size_t count, const char* what);

/// Largest absolute deviation of any distribution in `posterior` from unit sum.
double max_normalization_error(const Posterior& posterior);

}  // namespace hbtm
