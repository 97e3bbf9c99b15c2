#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hbtm/core.hpp"

namespace hbtm {

/// Per-token trait assignments plus the count tables a collapsed sampler
/// maintains.  Counts always describe the attached tokens only: a token that
/// has been detached (for resampling) contributes nothing until re-attached.
///
/// Invariants, checked by audit():
///   sum_k trace_trait(m, k)  == trace_total(m) (over attached tokens)
///   sum_e trait_event(k, e)  == trait_total(k)
///   sum_t trait_event_time(k, e, t)  == trait_event(k, e)
///   sum_i trait_event_level(k, e, i) == trait_event(k, e)
class ModelState {
  public:
    using Count = std::int32_t;

    ModelState() = default;

    /// Empty tables for traces of the given lengths; every token starts
    /// detached with assignment 0.
    ModelState(std::size_t num_traits, const Schema& schema, const std::vector<std::size_t>& trace_lengths);

    std::size_t num_traits() const noexcept { return num_traits_; }
    std::size_t num_events() const noexcept { return num_events_; }
    std::size_t num_time_bins() const noexcept { return num_time_bins_; }
    std::size_t num_levels() const noexcept { return num_levels_; }
    std::size_t num_traces() const noexcept { return assignments_.size(); }

    std::uint32_t assignment(std::size_t m, std::size_t n) const { return assignments_[m][n]; }
    const std::vector<std::vector<std::uint32_t>>& assignments() const noexcept { return assignments_; }

    Count trace_trait(std::size_t m, std::size_t k) const { return trace_trait_(m, k); }
    Count trait_event(std::size_t k, std::size_t e) const { return trait_event_(k, e); }
    Count trait_event_time(std::size_t k, std::size_t e, std::size_t t) const { return trait_event_time_(k, e, t); }
    Count trait_event_level(std::size_t k, std::size_t e, std::size_t i) const { return trait_event_level_(k, e, i); }
    Count trace_total(std::size_t m) const { return trace_total_[m]; }
    Count trait_total(std::size_t k) const { return trait_total_[k]; }

    const Array2<Count>& trace_trait_table() const noexcept { return trace_trait_; }
    const Array2<Count>& trait_event_table() const noexcept { return trait_event_; }
    const Array3<Count>& trait_event_time_table() const noexcept { return trait_event_time_; }
    const Array3<Count>& trait_event_level_table() const noexcept { return trait_event_level_; }

    /// Adds token (m, n) with observation `tok` to the tables under trait k.
    void attach(std::size_t m, std::size_t n, const Token& tok, std::uint32_t k);

    /// Removes token (m, n) from the tables.  Its assignment is kept so that
    /// the caller can read the old trait.
    void detach(std::size_t m, std::size_t n, const Token& tok);

    /// The token currently detached, if exactly one is; resampling requires it.
    std::optional<std::pair<std::size_t, std::size_t>> detached_token() const noexcept { return detached_; }

    /// Recounts every table from the assignments and the corpus and reports
    /// each mismatch.  Empty means consistent.  Requires no detached token.
    std::vector<std::string> audit(const Corpus& corpus) const;

    /// Cheap structural check of the sum relations among the tables alone.
    std::vector<std::string> check_marginals() const;

    std::uint64_t seed = 0;
    std::size_t sweeps_done = 0;

    /// Collapsed log joint maintained incrementally by the sampler
    /// (Neumaier-compensated sum: value + compensation).
    double tracked_log_joint = 0.0;
    double tracked_log_joint_compensation = 0.0;

    double tracked_value() const noexcept { return tracked_log_joint + tracked_log_joint_compensation; }
    void add_to_tracked(double delta) noexcept;

    /// Equality of assignments and count tables (not of bookkeeping fields).
    bool same_counts(const ModelState& other) const;

  private:
    std::size_t num_traits_ = 0;
    std::size_t num_events_ = 0;
    std::size_t num_time_bins_ = 0;
    std::size_t num_levels_ = 0;

    std::vector<std::vector<std::uint32_t>> assignments_;
    std::vector<std::vector<std::uint8_t>> attached_;
    std::optional<std::pair<std::size_t, std::size_t>> detached_;
    std::size_t detached_count_ = 0;

    Array2<Count> trace_trait_;
    Array2<Count> trait_event_;
    Array3<Count> trait_event_time_;
    Array3<Count> trait_event_level_;
    std::vector<Count> trace_total_;
    std::vector<Count> trait_total_;
};

/// Dirichlet posterior means of the count tables:
///   theta[m][k]  = (N_mk + alpha) / (N_m + K alpha)
///   phi[k][e]    = (N_ke + beta)  / (N_k + E beta)
///   psi[k][e][t] = (N_ket + gamma) / (N_ke + T gamma)
///   tau[k][e][i] = (N_kei + delta) / (N_ke + I delta)
/// Throws InternalError if the tables violate their sum relations.
Posterior estimate_posterior(const ModelState& state, const Hyperparams& hyper);

}  // namespace hbtm
