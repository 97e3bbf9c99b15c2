#include "hbtm/model_state.hpp"

#include <cmath>
#include <sstream>

namespace hbtm {

ModelState::ModelState(std::size_t num_traits, const Schema& schema, const std::vector<std::size_t>& trace_lengths)
    : num_traits_(num_traits),
      num_events_(schema.num_events()),
      num_time_bins_(schema.num_time_bins()),
      num_levels_(schema.num_interaction_levels()),
      trace_trait_(trace_lengths.size(), num_traits, 0),
      trait_event_(num_traits, num_events_, 0),
      trait_event_time_(num_traits, num_events_, num_time_bins_, 0),
      trait_event_level_(num_traits, num_events_, num_levels_, 0),
      trace_total_(trace_lengths.size(), 0),
      trait_total_(num_traits, 0) {
    if (num_traits == 0) {
        throw ConfigError("number of traits must be at least 1");
    }
    assignments_.reserve(trace_lengths.size());
    attached_.reserve(trace_lengths.size());
    for (std::size_t len : trace_lengths) {
        assignments_.emplace_back(len, 0U);
        attached_.emplace_back(len, std::uint8_t{0});
        detached_count_ += len;
    }
}

void ModelState::attach(std::size_t m, std::size_t n, const Token& tok, std::uint32_t k) {
    if (attached_[m][n]) {
        throw InternalError("token attached twice");
    }
    assignments_[m][n] = k;
    attached_[m][n] = 1;
    ++trace_trait_(m, k);
    ++trace_total_[m];
    ++trait_event_(k, tok.event);
    ++trait_total_[k];
    ++trait_event_time_(k, tok.event, tok.time_bin);
    ++trait_event_level_(k, tok.event, tok.interaction_level);
    --detached_count_;
    detached_.reset();
    if (detached_count_ == 1) {
        // Only reached while a state is being filled; sweeps go 0 -> 1 -> 0.
        for (std::size_t mm = 0; mm < attached_.size() && !detached_; ++mm) {
            for (std::size_t nn = 0; nn < attached_[mm].size(); ++nn) {
                if (!attached_[mm][nn]) {
                    detached_ = std::make_pair(mm, nn);
                    break;
                }
            }
        }
    }
}

void ModelState::detach(std::size_t m, std::size_t n, const Token& tok) {
    if (!attached_[m][n]) {
        throw InternalError("token detached twice");
    }
    const std::uint32_t k = assignments_[m][n];
    attached_[m][n] = 0;
    --trace_trait_(m, k);
    --trace_total_[m];
    --trait_event_(k, tok.event);
    --trait_total_[k];
    --trait_event_time_(k, tok.event, tok.time_bin);
    --trait_event_level_(k, tok.event, tok.interaction_level);
    ++detached_count_;
    if (detached_count_ == 1) {
        detached_ = std::make_pair(m, n);
    } else {
        detached_.reset();
    }
}

void ModelState::add_to_tracked(double delta) noexcept {
    const double sum = tracked_log_joint + delta;
    if (std::abs(tracked_log_joint) >= std::abs(delta)) {
        tracked_log_joint_compensation += (tracked_log_joint - sum) + delta;
    } else {
        tracked_log_joint_compensation += (delta - sum) + tracked_log_joint;
    }
    tracked_log_joint = sum;
}

bool ModelState::same_counts(const ModelState& other) const {
    return assignments_ == other.assignments_ && attached_ == other.attached_ && trace_trait_ == other.trace_trait_ &&
           trait_event_ == other.trait_event_ && trait_event_time_ == other.trait_event_time_ &&
           trait_event_level_ == other.trait_event_level_ && trace_total_ == other.trace_total_ &&
           trait_total_ == other.trait_total_;
}

std::vector<std::string> ModelState::check_marginals() const {
    std::vector<std::string> problems;
    const auto fail = [&](const std::string& what) { problems.push_back(what); };

    long long grand_traces = 0;
    for (std::size_t m = 0; m < num_traces(); ++m) {
        long long s = 0;
        for (std::size_t k = 0; k < num_traits_; ++k) {
            if (trace_trait_(m, k) < 0) fail("negative trace-trait count at m=" + std::to_string(m));
            s += trace_trait_(m, k);
        }
        if (s != trace_total_[m]) fail("trace " + std::to_string(m) + ": sum_k N_mk != N_m");
        grand_traces += trace_total_[m];
    }
    long long grand_traits = 0;
    for (std::size_t k = 0; k < num_traits_; ++k) {
        long long s = 0;
        for (std::size_t e = 0; e < num_events_; ++e) {
            const Count ke = trait_event_(k, e);
            if (ke < 0) fail("negative trait-event count");
            s += ke;
            long long st = 0;
            for (std::size_t t = 0; t < num_time_bins_; ++t) {
                if (trait_event_time_(k, e, t) < 0) fail("negative trait-event-time count");
                st += trait_event_time_(k, e, t);
            }
            long long si = 0;
            for (std::size_t i = 0; i < num_levels_; ++i) {
                if (trait_event_level_(k, e, i) < 0) fail("negative trait-event-level count");
                si += trait_event_level_(k, e, i);
            }
            if (st != ke) fail("trait " + std::to_string(k) + " event " + std::to_string(e) + ": sum_t N_ket != N_ke");
            if (si != ke) fail("trait " + std::to_string(k) + " event " + std::to_string(e) + ": sum_i N_kei != N_ke");
        }
        if (s != trait_total_[k]) fail("trait " + std::to_string(k) + ": sum_e N_ke != N_k");
        grand_traits += trait_total_[k];
    }
    if (grand_traces != grand_traits) fail("grand totals differ between trace and trait tables");
    return problems;
}

std::vector<std::string> ModelState::audit(const Corpus& corpus) const {
    std::vector<std::string> problems = check_marginals();
    if (corpus.traces.size() != num_traces()) {
        problems.push_back("trace count differs from corpus");
        return problems;
    }
    if (detached_count_ != 0) {
        problems.push_back(std::to_string(detached_count_) + " token(s) detached");
    }

    ModelState fresh(num_traits_, corpus.schema, corpus.trace_lengths());
    for (std::size_t m = 0; m < num_traces(); ++m) {
        if (assignments_[m].size() != corpus.traces[m].tokens.size()) {
            problems.push_back("trace " + std::to_string(m) + " length differs from corpus");
            return problems;
        }
        for (std::size_t n = 0; n < assignments_[m].size(); ++n) {
            if (assignments_[m][n] >= num_traits_) {
                problems.push_back("assignment out of range at m=" + std::to_string(m) + " n=" + std::to_string(n));
                return problems;
            }
            if (attached_[m][n]) {
                fresh.attach(m, n, corpus.traces[m].tokens[n], assignments_[m][n]);
            }
        }
    }
    if (fresh.trace_trait_ != trace_trait_) problems.push_back("N_mk differs from recount");
    if (fresh.trait_event_ != trait_event_) problems.push_back("N_ke differs from recount");
    if (fresh.trait_event_time_ != trait_event_time_) problems.push_back("N_ket differs from recount");
    if (fresh.trait_event_level_ != trait_event_level_) problems.push_back("N_kei differs from recount");
    if (fresh.trace_total_ != trace_total_) problems.push_back("N_m differs from recount");
    if (fresh.trait_total_ != trait_total_) problems.push_back("N_k differs from recount");
    return problems;
}

Posterior estimate_posterior(const ModelState& state, const Hyperparams& hyper) {
    if (const auto problems = state.check_marginals(); !problems.empty()) {
        throw InternalError("inconsistent counts: " + problems.front());
    }
    const std::size_t M = state.num_traces();
    const std::size_t K = state.num_traits();
    const std::size_t E = state.num_events();
    const std::size_t T = state.num_time_bins();
    const std::size_t I = state.num_levels();
    const double dK = static_cast<double>(K);
    const double dE = static_cast<double>(E);
    const double dT = static_cast<double>(T);
    const double dI = static_cast<double>(I);

    Posterior post{Matrix(M, K), Matrix(K, E), Tensor3(K, E, T), Tensor3(K, E, I)};
    for (std::size_t m = 0; m < M; ++m) {
        const double denom = state.trace_total(m) + dK * hyper.alpha;
        for (std::size_t k = 0; k < K; ++k) {
            post.theta(m, k) = (state.trace_trait(m, k) + hyper.alpha) / denom;
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        const double denom = state.trait_total(k) + dE * hyper.beta;
        for (std::size_t e = 0; e < E; ++e) {
            const double n_ke = state.trait_event(k, e);
            post.phi(k, e) = (n_ke + hyper.beta) / denom;
            const double time_denom = n_ke + dT * hyper.gamma;
            for (std::size_t t = 0; t < T; ++t) {
                post.psi(k, e, t) = (state.trait_event_time(k, e, t) + hyper.gamma) / time_denom;
            }
            const double level_denom = n_ke + dI * hyper.delta;
            for (std::size_t i = 0; i < I; ++i) {
                post.tau(k, e, i) = (state.trait_event_level(k, e, i) + hyper.delta) / level_denom;
            }
        }
    }
    return post;
}

}  // namespace hbtm
