#pragma once

#include <cstdint>
#include <vector>

#include "hbtm/core.hpp"

namespace hbtm {

/// Ground-truth categorical parameters of the generative model.
struct TrueParams {
    Matrix theta;  // M x K
    Matrix phi;    // K x E
    Tensor3 psi;   // K x E x T
    Tensor3 tau;   // K x E x I

    std::size_t num_traits() const noexcept { return phi.rows(); }

    bool operator==(const TrueParams&) const = default;
};

/// A corpus together with the trait that generated each token.
struct LabeledCorpus {
    Corpus corpus;
    std::vector<std::vector<std::uint32_t>> assignments;
};

/// Draws every parameter row from its symmetric Dirichlet prior.  Each row
/// has its own counter-based stream, so the result depends only on the seed.
TrueParams sample_params(std::size_t num_traces, std::size_t num_traits, const Schema& schema,
                         const Hyperparams& hyper, std::uint64_t seed);

/// Generates tokens_per_trace[m] tokens for trace m: z ~ theta[m],
/// e ~ phi[z], then t ~ psi[z][e] and i ~ tau[z][e] independently.
/// Trace ids are "trace_<m+1>".
LabeledCorpus generate(const TrueParams& params, const Schema& schema, const std::vector<std::size_t>& tokens_per_trace,
                       std::uint64_t seed);

/// log p(phi, theta, psi, tau, z, e, t, i): log Dirichlet densities of all
/// parameter rows plus the per-token categorical log probabilities.
/// Returns -infinity as soon as any token has zero probability; returns
/// +infinity if a prior density is unbounded at a boundary point.
double joint_log_likelihood(const TrueParams& params, const LabeledCorpus& labeled, const Hyperparams& hyper);

/// Log density of a symmetric Dirichlet(a) at point x.
double log_dirichlet_density(std::span<const double> x, double a);

}  // namespace hbtm
