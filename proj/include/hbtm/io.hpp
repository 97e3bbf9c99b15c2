#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbtm/core.hpp"
#include "hbtm/generator.hpp"
#include "hbtm/sampler.hpp"

namespace hbtm {

using nlohmann::json;

// Schema header file: {"event_labels": [...], "time_bin_edges": [...], "interaction_bin_edges": [...]}
json schema_to_json(const Schema& schema);
Schema schema_from_json(const json& j);

/// One trace per line: {"trace_id": "...", "tokens": [[e, t, i], ...]}, 0-based.
void write_corpus_jsonl(std::ostream& out, const Corpus& corpus);
Corpus read_corpus_jsonl(std::istream& in, const Schema& schema);

void save_corpus(const std::filesystem::path& jsonl, const std::filesystem::path& schema_file, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& jsonl, const std::filesystem::path& schema_file);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
json tensor_to_json(const Tensor3& t);
Tensor3 tensor_from_json(const json& j);

json hyper_to_json(const Hyperparams& h);
Hyperparams hyper_from_json(const json& j);

json fit_config_to_json(const FitConfig& c);
FitConfig fit_config_from_json(const json& j);

/// What a fitted model file carries: enough to analyze, export and re-run.
struct FittedModel {
    FitConfig config;
    Schema schema;
    std::vector<std::string> trace_ids;
    Posterior posterior;
    std::vector<double> log_joint_trace;
    FitDiagnostics diagnostics;
};

json fitted_model_to_json(const FittedModel& model);
FittedModel fitted_model_from_json(const json& j);

FittedModel make_fitted_model(const FitResult& result, const Corpus& corpus);

json true_params_to_json(const TrueParams& params);
TrueParams true_params_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; deterministic for equal values.
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace hbtm
