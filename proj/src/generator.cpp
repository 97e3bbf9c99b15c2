#include "hbtm/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hbtm/random.hpp"

namespace hbtm {

namespace {

enum : std::uint64_t {
    kThetaTag = 1,
    kPhiTag = 2,
    kPsiTag = 3,
    kTauTag = 4,
    kTokenTag = 5,
};

enum : std::uint64_t {
    kTraitSlot = 0,
    kEventSlot = 1,
    kTimeSlot = 2,
    kLevelSlot = 3,
};

void fill_row(std::span<double> row, std::uint64_t key, double concentration) {
    CounterStream stream(key);
    const auto draw = sample_dirichlet(stream, row.size(), concentration);
    std::copy(draw.begin(), draw.end(), row.begin());
}

std::size_t draw(std::uint64_t seed, std::size_t m, std::size_t n, std::uint64_t slot, std::span<const double> probs) {
    CounterStream stream(stream_key(seed, {kTokenTag, m, n, slot}));
    return sample_categorical(probs, stream.next_uniform());
}

double sorted_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) {
        total += v;
    }
    return total;
}

}  // namespace

TrueParams sample_params(std::size_t num_traces, std::size_t num_traits, const Schema& schema,
                         const Hyperparams& hyper, std::uint64_t seed) {
    if (num_traits < 1) {
        throw ConfigError("K must be at least 1");
    }
    hyper.validate();
    schema.validate();
    const std::size_t E = schema.num_events();
    const std::size_t T = schema.num_time_bins();
    const std::size_t I = schema.num_interaction_levels();

    TrueParams p{Matrix(num_traces, num_traits), Matrix(num_traits, E), Tensor3(num_traits, E, T),
                 Tensor3(num_traits, E, I)};
    for (std::size_t m = 0; m < num_traces; ++m) {
        fill_row(p.theta.row(m), stream_key(seed, {kThetaTag, m}), hyper.alpha);
    }
    for (std::size_t k = 0; k < num_traits; ++k) {
        fill_row(p.phi.row(k), stream_key(seed, {kPhiTag, k}), hyper.beta);
        for (std::size_t e = 0; e < E; ++e) {
            fill_row(p.psi.slice(k, e), stream_key(seed, {kPsiTag, k, e}), hyper.gamma);
            fill_row(p.tau.slice(k, e), stream_key(seed, {kTauTag, k, e}), hyper.delta);
        }
    }
    return p;
}

LabeledCorpus generate(const TrueParams& params, const Schema& schema, const std::vector<std::size_t>& tokens_per_trace,
                       std::uint64_t seed) {
    schema.validate();
    if (tokens_per_trace.size() != params.theta.rows()) {
        throw InputError("tokens_per_trace length differs from the number of theta rows");
    }
    if (params.phi.cols() != schema.num_events() || params.psi.dim2() != schema.num_time_bins() ||
        params.tau.dim2() != schema.num_interaction_levels()) {
        throw InputError("parameter shapes do not match the schema");
    }

    LabeledCorpus out;
    out.corpus.schema = schema;
    out.corpus.traces.resize(tokens_per_trace.size());
    out.assignments.resize(tokens_per_trace.size());
    for (std::size_t m = 0; m < tokens_per_trace.size(); ++m) {
        if (tokens_per_trace[m] == 0) {
            throw InputError("every trace needs at least one token");
        }
        Trace& trace = out.corpus.traces[m];
        trace.trace_id = "trace_" + std::to_string(m + 1);
        trace.tokens.resize(tokens_per_trace[m]);
        out.assignments[m].resize(tokens_per_trace[m]);
        for (std::size_t n = 0; n < tokens_per_trace[m]; ++n) {
            const std::size_t z = draw(seed, m, n, kTraitSlot, params.theta.row(m));
            const std::size_t e = draw(seed, m, n, kEventSlot, params.phi.row(z));
            const std::size_t t = draw(seed, m, n, kTimeSlot, params.psi.slice(z, e));
            const std::size_t i = draw(seed, m, n, kLevelSlot, params.tau.slice(z, e));
            out.assignments[m][n] = static_cast<std::uint32_t>(z);
            trace.tokens[n] = Token{static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(t),
                                    static_cast<std::uint32_t>(i)};
        }
    }
    return out;
}

double log_dirichlet_density(std::span<const double> x, double a) {
    const double dim = static_cast<double>(x.size());
    const double norm = std::lgamma(dim * a) - dim * std::lgamma(a);
    if (a == 1.0) {
        return norm;
    }
    std::vector<double> logs;
    logs.reserve(x.size());
    for (double v : x) {
        if (v <= 0.0) {
            return a > 1.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        }
        logs.push_back(std::log(v));
    }
    return norm + (a - 1.0) * sorted_sum(logs);
}

double joint_log_likelihood(const TrueParams& params, const LabeledCorpus& labeled, const Hyperparams& hyper) {
    const Corpus& corpus = labeled.corpus;
    if (labeled.assignments.size() != corpus.traces.size() || params.theta.rows() != corpus.traces.size()) {
        throw InputError("assignments, theta and corpus disagree on the number of traces");
    }
    const std::size_t K = params.num_traits();

    double data = 0.0;
    for (std::size_t m = 0; m < corpus.traces.size(); ++m) {
        const auto& tokens = corpus.traces[m].tokens;
        if (labeled.assignments[m].size() != tokens.size()) {
            throw InputError("assignments shape differs from corpus");
        }
        for (std::size_t n = 0; n < tokens.size(); ++n) {
            const std::uint32_t z = labeled.assignments[m][n];
            const Token& tok = tokens[n];
            if (z >= K) {
                throw InputError("assignment out of range");
            }
            const double factors[] = {params.theta(m, z), params.phi(z, tok.event),
                                      params.psi(z, tok.event, tok.time_bin),
                                      params.tau(z, tok.event, tok.interaction_level)};
            for (double f : factors) {
                if (!(f > 0.0)) {
                    return -std::numeric_limits<double>::infinity();
                }
                data += std::log(f);
            }
        }
    }

    // Per-row terms are summed in sorted order so that relabeling traits
    // (which permutes rows and theta columns) gives bit-identical results.
    std::vector<double> terms;
    for (std::size_t m = 0; m < params.theta.rows(); ++m) {
        terms.push_back(log_dirichlet_density(params.theta.row(m), hyper.alpha));
    }
    std::vector<double> trait_terms;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> rows{log_dirichlet_density(params.phi.row(k), hyper.beta)};
        for (std::size_t e = 0; e < params.psi.dim1(); ++e) {
            rows.push_back(log_dirichlet_density(params.psi.slice(k, e), hyper.gamma));
            rows.push_back(log_dirichlet_density(params.tau.slice(k, e), hyper.delta));
        }
        trait_terms.push_back(sorted_sum(rows));
    }
    const double prior = sorted_sum(terms) + sorted_sum(trait_terms);
    return prior + data;
}

}  // namespace hbtm
