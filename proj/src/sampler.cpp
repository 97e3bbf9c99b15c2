#include "hbtm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hbtm/random.hpp"

namespace hbtm {

namespace {

constexpr std::uint64_t kInitTag = 0x494E4954;   // "INIT"
constexpr std::uint64_t kSweepTag = 0x53575045;  // "SWPE"

/// log of the Dirichlet-multinomial marginal of one count vector under a
/// symmetric Dirichlet(a) prior.
template <typename Range>
double dirichlet_multinomial_log(const Range& counts, double a) {
    const double dim = static_cast<double>(std::size(counts));
    double total = 0.0;
    double acc = 0.0;
    const double lg_a = std::lgamma(a);
    for (auto c : counts) {
        total += c;
        acc += std::lgamma(c + a) - lg_a;
    }
    return acc + std::lgamma(dim * a) - std::lgamma(total + dim * a);
}

void accumulate(std::vector<double>& into, const std::vector<double>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) {
        into[i] += from[i];
    }
}

}  // namespace

void FitConfig::validate() const {
    if (num_traits < 1) {
        throw ConfigError("K must be at least 1");
    }
    if (sample_stride < 1) {
        throw ConfigError("sample_stride must be at least 1");
    }
    if (burn_in >= sweeps) {
        std::ostringstream msg;
        msg << "burn_in (" << burn_in << ") must be smaller than sweeps (" << sweeps << ")";
        throw ConfigError(msg.str());
    }
    if (retained_samples() == 0) {
        throw ConfigError("schedule retains no posterior samples (sweeps - burn_in < sample_stride)");
    }
    hyper.validate();
}

std::size_t FitConfig::retained_samples() const noexcept {
    if (sample_stride == 0 || burn_in >= sweeps) {
        return 0;
    }
    return (sweeps - burn_in) / sample_stride;
}

double collapsed_log_joint(const ModelState& state, const Hyperparams& hyper) {
    const std::size_t K = state.num_traits();
    const std::size_t E = state.num_events();
    double total = 0.0;
    for (std::size_t m = 0; m < state.num_traces(); ++m) {
        total += dirichlet_multinomial_log(state.trace_trait_table().row(m), hyper.alpha);
    }
    for (std::size_t k = 0; k < K; ++k) {
        total += dirichlet_multinomial_log(state.trait_event_table().row(k), hyper.beta);
        for (std::size_t e = 0; e < E; ++e) {
            total += dirichlet_multinomial_log(state.trait_event_time_table().slice(k, e), hyper.gamma);
            total += dirichlet_multinomial_log(state.trait_event_level_table().slice(k, e), hyper.delta);
        }
    }
    return total;
}

ModelState init_state(const Corpus& corpus, const FitConfig& config) {
    if (config.num_traits < 1) {
        throw ConfigError("K must be at least 1");
    }
    require_valid(corpus);
    ModelState state(config.num_traits, corpus.schema, corpus.trace_lengths());
    state.seed = config.seed;
    const double K = static_cast<double>(config.num_traits);
    for (std::size_t m = 0; m < corpus.traces.size(); ++m) {
        const auto& tokens = corpus.traces[m].tokens;
        for (std::size_t n = 0; n < tokens.size(); ++n) {
            CounterStream stream(stream_key(config.seed, {kInitTag, m, n}));
            const auto k = std::min(static_cast<std::uint32_t>(stream.next_uniform() * K),
                                    static_cast<std::uint32_t>(config.num_traits - 1));
            state.attach(m, n, tokens[n], k);
        }
    }
    state.tracked_log_joint = collapsed_log_joint(state, config.hyper);
    state.tracked_log_joint_compensation = 0.0;
    return state;
}

void conditional_weights(const ModelState& state, std::size_t m, std::size_t n, const Token& token,
                         const Hyperparams& hyper, std::span<double> weights) {
    const auto detached = state.detached_token();
    if (!detached || detached->first != m || detached->second != n) {
        throw InternalError("conditional_weights called on a token that is not the single detached token");
    }
    const std::size_t K = state.num_traits();
    if (weights.size() != K) {
        throw InternalError("weight buffer size differs from K");
    }
    const double e_beta = static_cast<double>(state.num_events()) * hyper.beta;
    const double t_gamma = static_cast<double>(state.num_time_bins()) * hyper.gamma;
    const double i_delta = static_cast<double>(state.num_levels()) * hyper.delta;
    for (std::size_t k = 0; k < K; ++k) {
        const double n_ke = state.trait_event(k, token.event);
        weights[k] = (state.trace_trait(m, k) + hyper.alpha) * (n_ke + hyper.beta) / (state.trait_total(k) + e_beta) *
                     (state.trait_event_time(k, token.event, token.time_bin) + hyper.gamma) / (n_ke + t_gamma) *
                     (state.trait_event_level(k, token.event, token.interaction_level) + hyper.delta) /
                     (n_ke + i_delta);
    }
}

void gibbs_sweep(ModelState& state, const Corpus& corpus, const Hyperparams& hyper) {
    const std::size_t K = state.num_traits();
    const std::uint64_t sweep_index = state.sweeps_done;
    std::vector<double> weights(K);
    for (std::size_t m = 0; m < corpus.traces.size(); ++m) {
        const auto& tokens = corpus.traces[m].tokens;
        for (std::size_t n = 0; n < tokens.size(); ++n) {
            const Token& tok = tokens[n];
            CounterStream stream(stream_key(state.seed, {kSweepTag, sweep_index, m, n}));
            const double u = stream.next_uniform();
            if (K == 1) {
                continue;
            }
            const std::uint32_t old_k = state.assignment(m, n);
            state.detach(m, n, tok);
            conditional_weights(state, m, n, tok, hyper, weights);
            const auto new_k = static_cast<std::uint32_t>(sample_categorical(weights, u));
            state.attach(m, n, tok, new_k);
            if (new_k != old_k) {
                // Moving a token changes the collapsed joint by the ratio of
                // its conditional weights; the trace-length term cancels.
                state.add_to_tracked(std::log(weights[new_k]) - std::log(weights[old_k]));
            }
        }
    }
    ++state.sweeps_done;
}

FitResult fit(const Corpus& corpus, const FitConfig& config) {
    config.validate();
    require_valid(corpus);

    FitResult result;
    result.config = config;
    result.final_state = init_state(corpus, config);
    ModelState& state = result.final_state;
    result.log_joint_trace.reserve(config.sweeps);

    Posterior sum;
    std::size_t retained = 0;
    for (std::size_t s = 1; s <= config.sweeps; ++s) {
        gibbs_sweep(state, corpus, config.hyper);
        result.log_joint_trace.push_back(state.tracked_value());

        if (config.audit_every_sweep) {
            ++result.diagnostics.audits_run;
            const auto problems = state.audit(corpus);
            const double drift = std::abs(collapsed_log_joint(state, config.hyper) - state.tracked_value());
            result.diagnostics.max_log_joint_drift = std::max(result.diagnostics.max_log_joint_drift, drift);
            if (!problems.empty() || drift > 1e-6) {
                ++result.diagnostics.audit_failures;
            }
        }

        if (s > config.burn_in && (s - config.burn_in) % config.sample_stride == 0) {
            Posterior snap = estimate_posterior(state, config.hyper);
            if (retained == 0) {
                sum = std::move(snap);
            } else {
                accumulate(sum.theta.data(), snap.theta.data());
                accumulate(sum.phi.data(), snap.phi.data());
                accumulate(sum.psi.data(), snap.psi.data());
                accumulate(sum.tau.data(), snap.tau.data());
            }
            ++retained;
        }
    }

    const double scale = 1.0 / static_cast<double>(retained);
    for (auto* v : {&sum.theta.data(), &sum.phi.data(), &sum.psi.data(), &sum.tau.data()}) {
        for (double& x : *v) {
            x *= scale;
        }
    }
    result.posterior = std::move(sum);
    result.diagnostics.retained_samples = retained;
    return result;
}

}  // namespace hbtm
