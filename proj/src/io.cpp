#include "hbtm/io.hpp"

#include <fstream>
#include <sstream>

namespace hbtm {

namespace {

template <typename T>
T require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw InputError(std::string("missing JSON field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw InputError(std::string("bad JSON field '") + key + "': " + ex.what());
    }
}

std::vector<double> require_data(const json& j, std::size_t expected) {
    auto data = require<std::vector<double>>(j, "data");
    if (data.size() != expected) {
        throw InputError("array data length does not match its shape");
    }
    return data;
}

}  // namespace

json schema_to_json(const Schema& schema) {
    return json{{"event_labels", schema.event_labels},
                {"time_bin_edges", schema.time_bin_edges},
                {"interaction_bin_edges", schema.interaction_bin_edges}};
}

Schema schema_from_json(const json& j) {
    Schema s;
    s.event_labels = require<std::vector<std::string>>(j, "event_labels");
    s.time_bin_edges = require<std::vector<double>>(j, "time_bin_edges");
    s.interaction_bin_edges = require<std::vector<double>>(j, "interaction_bin_edges");
    s.validate();
    return s;
}

void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
    for (const auto& trace : corpus.traces) {
        json tokens = json::array();
        for (const auto& tok : trace.tokens) {
            tokens.push_back({tok.event, tok.time_bin, tok.interaction_level});
        }
        out << json{{"trace_id", trace.trace_id}, {"tokens", std::move(tokens)}}.dump() << '\n';
    }
}

Corpus read_corpus_jsonl(std::istream& in, const Schema& schema) {
    Corpus corpus;
    corpus.schema = schema;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json j = json::parse(line);
            Trace trace;
            trace.trace_id = require<std::string>(j, "trace_id");
            for (const auto& tok : require<json>(j, "tokens")) {
                if (!tok.is_array() || tok.size() != 3) {
                    throw InputError("token must be a 3-element array");
                }
                const auto e = tok[0].get<long long>();
                const auto t = tok[1].get<long long>();
                const auto i = tok[2].get<long long>();
                if (e < 0 || t < 0 || i < 0) {
                    throw InputError("token indices must be nonnegative");
                }
                if (static_cast<std::size_t>(e) >= schema.num_events() ||
                    static_cast<std::size_t>(t) >= schema.num_time_bins() ||
                    static_cast<std::size_t>(i) >= schema.num_interaction_levels()) {
                    throw InputError("token [" + std::to_string(e) + "," + std::to_string(t) + "," +
                                     std::to_string(i) + "] outside the schema");
                }
                trace.tokens.push_back(
                    Token{static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(i)});
            }
            corpus.traces.push_back(std::move(trace));
        } catch (const json::exception& ex) {
            throw InputError("corpus line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const InputError& ex) {
            throw InputError("corpus line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return corpus;
}

void save_corpus(const std::filesystem::path& jsonl, const std::filesystem::path& schema_file, const Corpus& corpus) {
    std::ofstream out(jsonl, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + jsonl.string());
    }
    write_corpus_jsonl(out, corpus);
    write_json_file(schema_file, schema_to_json(corpus.schema));
}

Corpus load_corpus(const std::filesystem::path& jsonl, const std::filesystem::path& schema_file) {
    const Schema schema = schema_from_json(read_json_file(schema_file));
    std::ifstream in(jsonl, std::ios::binary);
    if (!in) {
        throw InputError("cannot read " + jsonl.string());
    }
    return read_corpus_jsonl(in, schema);
}

json matrix_to_json(const Matrix& m) {
    return json{{"shape", {m.rows(), m.cols()}}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
    const auto shape = require<std::vector<std::size_t>>(j, "shape");
    if (shape.size() != 2) {
        throw InputError("matrix shape must have two entries");
    }
    Matrix m(shape[0], shape[1]);
    m.data() = require_data(j, shape[0] * shape[1]);
    return m;
}

json tensor_to_json(const Tensor3& t) {
    return json{{"shape", {t.dim0(), t.dim1(), t.dim2()}}, {"data", t.data()}};
}

Tensor3 tensor_from_json(const json& j) {
    const auto shape = require<std::vector<std::size_t>>(j, "shape");
    if (shape.size() != 3) {
        throw InputError("tensor shape must have three entries");
    }
    Tensor3 t(shape[0], shape[1], shape[2]);
    t.data() = require_data(j, shape[0] * shape[1] * shape[2]);
    return t;
}

json hyper_to_json(const Hyperparams& h) {
    return json{{"alpha", h.alpha}, {"beta", h.beta}, {"gamma", h.gamma}, {"delta", h.delta}};
}

Hyperparams hyper_from_json(const json& j) {
    Hyperparams h{require<double>(j, "alpha"), require<double>(j, "beta"), require<double>(j, "gamma"),
                  require<double>(j, "delta")};
    h.validate();
    return h;
}

json fit_config_to_json(const FitConfig& c) {
    return json{{"K", c.num_traits},
                {"sweeps", c.sweeps},
                {"burn_in", c.burn_in},
                {"sample_stride", c.sample_stride},
                {"seed", c.seed},
                {"hyper", hyper_to_json(c.hyper)},
                {"audit_every_sweep", c.audit_every_sweep}};
}

FitConfig fit_config_from_json(const json& j) {
    FitConfig c;
    c.num_traits = require<std::size_t>(j, "K");
    c.sweeps = require<std::size_t>(j, "sweeps");
    c.burn_in = require<std::size_t>(j, "burn_in");
    c.sample_stride = require<std::size_t>(j, "sample_stride");
    c.seed = require<std::uint64_t>(j, "seed");
    c.hyper = hyper_from_json(require<json>(j, "hyper"));
    c.audit_every_sweep = j.value("audit_every_sweep", false);
    return c;
}

json fitted_model_to_json(const FittedModel& model) {
    return json{
        {"format", "hbtm-model/1"},
        {"config", fit_config_to_json(model.config)},
        {"schema", schema_to_json(model.schema)},
        {"trace_ids", model.trace_ids},
        {"posterior",
         {{"theta", matrix_to_json(model.posterior.theta)},
          {"phi", matrix_to_json(model.posterior.phi)},
          {"psi", tensor_to_json(model.posterior.psi)},
          {"tau", tensor_to_json(model.posterior.tau)}}},
        {"log_joint_trace", model.log_joint_trace},
        {"diagnostics",
         {{"retained_samples", model.diagnostics.retained_samples},
          {"audits_run", model.diagnostics.audits_run},
          {"audit_failures", model.diagnostics.audit_failures},
          {"max_log_joint_drift", model.diagnostics.max_log_joint_drift}}},
    };
}

FittedModel fitted_model_from_json(const json& j) {
    FittedModel model;
    model.config = fit_config_from_json(require<json>(j, "config"));
    model.schema = schema_from_json(require<json>(j, "schema"));
    model.trace_ids = require<std::vector<std::string>>(j, "trace_ids");
    const json post = require<json>(j, "posterior");
    model.posterior.theta = matrix_from_json(require<json>(post, "theta"));
    model.posterior.phi = matrix_from_json(require<json>(post, "phi"));
    model.posterior.psi = tensor_from_json(require<json>(post, "psi"));
    model.posterior.tau = tensor_from_json(require<json>(post, "tau"));
    model.log_joint_trace = require<std::vector<double>>(j, "log_joint_trace");
    if (j.contains("diagnostics")) {
        const json& d = j.at("diagnostics");
        model.diagnostics.retained_samples = d.value("retained_samples", std::size_t{0});
        model.diagnostics.audits_run = d.value("audits_run", std::size_t{0});
        model.diagnostics.audit_failures = d.value("audit_failures", std::size_t{0});
        model.diagnostics.max_log_joint_drift = d.value("max_log_joint_drift", 0.0);
    }

    const std::size_t K = model.posterior.phi.rows();
    if (model.posterior.theta.rows() != model.trace_ids.size() || model.posterior.theta.cols() != K ||
        model.posterior.phi.cols() != model.schema.num_events() || model.posterior.psi.dim0() != K ||
        model.posterior.psi.dim2() != model.schema.num_time_bins() || model.posterior.tau.dim0() != K ||
        model.posterior.tau.dim2() != model.schema.num_interaction_levels()) {
        throw InputError("model file tensors have inconsistent shapes");
    }
    return model;
}

FittedModel make_fitted_model(const FitResult& result, const Corpus& corpus) {
    FittedModel model;
    model.config = result.config;
    model.schema = corpus.schema;
    for (const auto& trace : corpus.traces) {
        model.trace_ids.push_back(trace.trace_id);
    }
    model.posterior = result.posterior;
    model.log_joint_trace = result.log_joint_trace;
    model.diagnostics = result.diagnostics;
    return model;
}

json true_params_to_json(const TrueParams& params) {
    return json{{"theta", matrix_to_json(params.theta)},
                {"phi", matrix_to_json(params.phi)},
                {"psi", tensor_to_json(params.psi)},
                {"tau", tensor_to_json(params.tau)}};
}

TrueParams true_params_from_json(const json& j) {
    return TrueParams{matrix_from_json(require<json>(j, "theta")), matrix_from_json(require<json>(j, "phi")),
                      tensor_from_json(require<json>(j, "psi")), tensor_from_json(require<json>(j, "tau"))};
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& ex) {
        throw InputError(path.string() + ": " + ex.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace hbtm
