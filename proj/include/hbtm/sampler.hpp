#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hbtm/core.hpp"
#include "hbtm/model_state.hpp"

namespace hbtm {

struct FitConfig {
    std::size_t num_traits = 5;
    std::size_t sweeps = 2000;
    std::size_t burn_in = 1000;
    std::size_t sample_stride = 10;
    std::uint64_t seed = 0;
    Hyperparams hyper;
    /// Recount tables and recompute the log joint from scratch after every sweep.
    bool audit_every_sweep = false;

    /// Throws ConfigError on K < 1, burn_in >= sweeps, stride < 1, or a
    /// schedule that retains no sample.
    void validate() const;

    /// Number of post-burn-in snapshots the schedule keeps.
    std::size_t retained_samples() const noexcept;
};

struct FitDiagnostics {
    std::size_t retained_samples = 0;
    std::size_t audits_run = 0;
    std::size_t audit_failures = 0;
    /// Largest |tracked - recomputed| collapsed log joint seen by an audit.
    double max_log_joint_drift = 0.0;
};

struct FitResult {
    FitConfig config;
    Posterior posterior;
    ModelState final_state;
    std::vector<double> log_joint_trace;
    FitDiagnostics diagnostics;
};

/// Uniform random initial assignments drawn from config.seed, with the
/// tracked log joint set from a full computation.
ModelState init_state(const Corpus& corpus, const FitConfig& config);

/// Unnormalized full conditional of token (m, n) over the K traits.  The
/// token must be the only one detached from the tables; otherwise
/// InternalError is thrown.
///
///   w[k] = (N_mk + alpha) * (N_ke + beta) / (N_k + E beta)
///                         * (N_ket + gamma) / (N_ke + T gamma)
///                         * (N_kei + delta) / (N_ke + I delta)
void conditional_weights(const ModelState& state, std::size_t m, std::size_t n, const Token& token,
                         const Hyperparams& hyper, std::span<double> weights);

/// One systematic scan over all tokens in (m, n) order.
void gibbs_sweep(ModelState& state, const Corpus& corpus, const Hyperparams& hyper);

/// Log of p(z, e, t, i) with theta, phi, psi and tau integrated out: a sum of
/// Dirichlet-multinomial terms, computed from scratch.
double collapsed_log_joint(const ModelState& state, const Hyperparams& hyper);

FitResult fit(const Corpus& corpus, const FitConfig& config);

}  // namespace hbtm
