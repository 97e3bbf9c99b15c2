#include "hbtm/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace hbtm {

namespace {

void check_edges(const std::vector<double>& edges, const char* what) {
    if (edges.size() < 2) {
        throw InputError(std::string(what) + " needs at least two edges");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!std::isfinite(edges[i])) {
            throw InputError(std::string(what) + " contains a non-finite edge");
        }
        if (i > 0 && !(edges[i] > edges[i - 1])) {
            std::ostringstream msg;
            msg << what << " must be strictly increasing (edge " << i << ")";
            throw InputError(msg.str());
        }
    }
}

double sum_error(std::span<const double> row) {
    double total = 0.0;
    for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) {
            return 1.0;
        }
        total += v;
    }
    return std::abs(total - 1.0);
}

}  // namespace

void Schema::validate() const {
    if (event_labels.empty()) {
        throw InputError("schema has no event types");
    }
    check_edges(time_bin_edges, "time_bin_edges");
    check_edges(interaction_bin_edges, "interaction_bin_edges");
}

Schema Schema::standard() {
    Schema s;
    s.event_labels = {
        "Study_Es_#",       "Deeds_Es_#",  "Deeds_Es",        "Deeds",   "TextEditor_Es_#",
        "TextEditor_Es",    "TextEditor",  "Diagram",         "Properties", "Study_Materials",
        "FSM_Es_#",         "FSM_Related", "Aulaweb",         "Blank",   "Other",
    };
    s.time_bin_edges = {0.0, 9.0, 15.0, 30.0, 60.0, 600.0, 1200.0, 14000.0};
    s.interaction_bin_edges = {0.0, 2.0, 3.0, 6.0, 16.0, 4779.0};
    return s;
}

Schema Schema::generic(std::size_t events, std::size_t time_bins, std::size_t levels) {
    if (events == 15 && time_bins == 7 && levels == 5) {
        return standard();
    }
    Schema s;
    for (std::size_t e = 0; e < events; ++e) {
        s.event_labels.push_back("event_" + std::to_string(e + 1));
    }
    for (std::size_t t = 0; t <= time_bins; ++t) {
        s.time_bin_edges.push_back(static_cast<double>(t));
    }
    for (std::size_t i = 0; i <= levels; ++i) {
        s.interaction_bin_edges.push_back(static_cast<double>(i));
    }
    return s;
}

std::size_t Corpus::num_tokens() const noexcept {
    std::size_t n = 0;
    for (const auto& trace : traces) {
        n += trace.tokens.size();
    }
    return n;
}

std::vector<std::size_t> Corpus::trace_lengths() const {
    std::vector<std::size_t> lengths;
    lengths.reserve(traces.size());
    for (const auto& trace : traces) {
        lengths.push_back(trace.tokens.size());
    }
    return lengths;
}

void Hyperparams::validate() const {
    const auto check = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string("hyperparameter ") + name + " must be positive and finite");
        }
    };
    check(alpha, "alpha");
    check(beta, "beta");
    check(gamma, "gamma");
    check(delta, "delta");
}

std::vector<Violation> validate_corpus(const Corpus& corpus) {
    std::vector<Violation> out;
    const std::size_t E = corpus.schema.num_events();
    const std::size_t T = corpus.schema.num_time_bins();
    const std::size_t I = corpus.schema.num_interaction_levels();

    for (const auto& trace : corpus.traces) {
        if (trace.tokens.empty()) {
            out.push_back({Violation::Kind::EmptyTrace, trace.trace_id, std::nullopt, "trace has no tokens"});
            continue;
        }
        for (std::size_t n = 0; n < trace.tokens.size(); ++n) {
            const Token& tok = trace.tokens[n];
            const auto report = [&](Violation::Kind kind, const char* field, std::uint32_t value, std::size_t bound) {
                std::ostringstream msg;
                msg << field << "=" << value << " not in [0," << bound << ")";
                out.push_back({kind, trace.trace_id, n, msg.str()});
            };
            if (tok.event >= E) report(Violation::Kind::EventOutOfRange, "event", tok.event, E);
            if (tok.time_bin >= T) report(Violation::Kind::TimeBinOutOfRange, "time_bin", tok.time_bin, T);
            if (tok.interaction_level >= I) {
                report(Violation::Kind::InteractionLevelOutOfRange, "interaction_level", tok.interaction_level, I);
            }
        }
    }
    return out;
}

void require_valid(const Corpus& corpus) {
    corpus.schema.validate();
    if (corpus.traces.empty()) {
        throw InputError("corpus has no traces");
    }
    const auto violations = validate_corpus(corpus);
    if (!violations.empty()) {
        const auto& v = violations.front();
        std::ostringstream msg;
        msg << "invalid corpus: trace '" << v.trace_id << "'";
        if (v.position) msg << " token " << *v.position;
        msg << ": " << v.message;
        if (violations.size() > 1) msg << " (+" << violations.size() - 1 << " more)";
        throw InputError(msg.str());
    }
}

std::size_t from_display_index(long long display, std::size_t count, const char* what) {
    if (display < 1 || static_cast<unsigned long long>(display) > count) {
        std::ostringstream msg;
        msg << what << " " << display << " out of range 1.." << count;
        throw InputError(msg.str());
    }
    return static_cast<std::size_t>(display - 1);
}

double max_normalization_error(const Posterior& posterior) {
    double worst = 0.0;
    for (std::size_t m = 0; m < posterior.theta.rows(); ++m) {
        worst = std::max(worst, sum_error(posterior.theta.row(m)));
    }
    for (std::size_t k = 0; k < posterior.phi.rows(); ++k) {
        worst = std::max(worst, sum_error(posterior.phi.row(k)));
        for (std::size_t e = 0; e < posterior.psi.dim1(); ++e) {
            worst = std::max(worst, sum_error(posterior.psi.slice(k, e)));
            worst = std::max(worst, sum_error(posterior.tau.slice(k, e)));
        }
    }
    return worst;
}

}  // namespace hbtm
