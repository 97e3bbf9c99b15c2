#include "hbtm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hbtm/analysis.hpp"
#include "hbtm/core.hpp"
#include "hbtm/csv.hpp"
#include "hbtm/generator.hpp"
#include "hbtm/ingest.hpp"
#include "hbtm/io.hpp"
#include "hbtm/sampler.hpp"

namespace hbtm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Reads CLI11 configuration from JSON.  Objects nest by subcommand, e.g.
/// {"fit": {"K": 10, "seed": 3}}; arrays become repeated values.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        return to_json(app, default_also).dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::exception& ex) {
            throw CLI::ConfigError(std::string("config file is not valid JSON: ") + ex.what());
        }
        if (!j.is_object()) {
            throw CLI::ConfigError("config file must hold a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

  private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                flatten(value, nested, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }

    static json to_json(const CLI::App* app, bool default_also) {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& results = opt->results();
                j[name] = results.size() == 1 ? json(results.front()) : json(results);
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            j[sub->get_name()] = to_json(sub, default_also);
        }
        return j;
    }
};

struct HyperOpts {
    Hyperparams hyper;

    void add_to(CLI::App& app) {
        app.add_option("--alpha", hyper.alpha, "Dirichlet concentration over traits")->capture_default_str();
        app.add_option("--beta", hyper.beta, "Dirichlet concentration over events")->capture_default_str();
        app.add_option("--gamma", hyper.gamma, "Dirichlet concentration over time bins")->capture_default_str();
        app.add_option("--delta", hyper.delta, "Dirichlet concentration over interaction levels")
            ->capture_default_str();
    }
};

// -- ingest -------------------------------------------------------------------

struct IngestArgs {
    std::vector<std::string> raw;
    std::string column_map;
    std::string activity_map;
    std::string schema;
    ingest::FilterConfig filter;
    std::string out_dir;
};

std::string session_file_stem(const std::string& session) {
    std::string s;
    for (char c : session) {
        s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    }
    return "session_" + s;
}

void cmd_ingest(const IngestArgs& a, std::ostream& out) {
    const ingest::ColumnMap columns =
        a.column_map.empty() ? ingest::ColumnMap{} : ingest::ColumnMap::from_json(read_json_file(a.column_map));
    const ingest::ActivityMapping mapping = a.activity_map.empty()
                                                ? ingest::ActivityMapping::standard()
                                                : ingest::ActivityMapping::from_json(read_json_file(a.activity_map));
    const Schema schema = a.schema.empty() ? Schema::standard() : schema_from_json(read_json_file(a.schema));
    a.filter.validate();
    mapping.validate(schema.num_events());

    std::vector<ingest::RawEvent> events;
    std::vector<ingest::Reject> rejects;
    std::size_t rows = 0;
    for (const auto& path : a.raw) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot read " + path);
        auto parsed = ingest::parse_raw_log(in, columns, path);
        rows += parsed.rows_read;
        std::move(parsed.events.begin(), parsed.events.end(), std::back_inserter(events));
        std::move(parsed.rejects.begin(), parsed.rejects.end(), std::back_inserter(rejects));
    }
    const auto result = ingest::build_corpora(events, mapping, schema, a.filter);

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_json_file(dir / "schema.json", schema_to_json(schema));
    json files = json::array();
    for (const auto& sc : result.sessions) {
        const fs::path file = dir / (session_file_stem(sc.session) + ".jsonl");
        std::ofstream jsonl(file, std::ios::binary);
        if (!jsonl) throw InputError("cannot write " + file.string());
        write_corpus_jsonl(jsonl, sc.corpus);
        files.push_back({{"session", sc.session}, {"file", file.filename().string()}});
    }
    {
        std::ofstream rej(dir / "rejects.csv", std::ios::binary);
        rej << "source,row,reason\n";
        for (const auto& r : rejects) {
            rej << csv::escape(r.source) << ',' << r.row << ',' << csv::escape(r.reason) << '\n';
        }
    }
    json summary = ingest::summarize(result, rejects, rows, schema);
    summary["corpus_files"] = files;
    summary["config"] = {{"raw", a.raw},
                         {"column_map", columns.to_json()},
                         {"activity_map", mapping.to_json()},
                         {"schema", schema_to_json(schema)},
                         {"min_duration_s", a.filter.min_duration_s},
                         {"max_duration_s", a.filter.max_duration_s}};
    write_json_file(dir / "summary.json", summary);
    out << "ingested " << rows << " rows into " << result.sessions.size() << " session corpora (" << result.tokens
        << " tokens, " << result.filtered.size() << " filtered, " << rejects.size() << " rejected)\n";
}

// -- fit ------------------------------------------------------------------------

struct FitArgs {
    std::string corpus;
    std::string schema;
    FitConfig config;
    HyperOpts hyper;
    std::string out;
};

fs::path default_schema_for(const fs::path& corpus) {
    fs::path sibling = corpus;
    sibling.replace_extension(".schema.json");
    if (fs::exists(sibling)) return sibling;
    return corpus.parent_path() / "schema.json";
}

void cmd_fit(FitArgs a, std::ostream& out) {
    a.config.hyper = a.hyper.hyper;
    a.config.validate();
    const fs::path schema_path = a.schema.empty() ? default_schema_for(a.corpus) : fs::path(a.schema);
    const Corpus corpus = load_corpus(a.corpus, schema_path);
    const FitResult result = fit(corpus, a.config);
    json model = fitted_model_to_json(make_fitted_model(result, corpus));
    model["inputs"] = {{"corpus", a.corpus}, {"schema", schema_path.string()}};
    write_json_file(a.out, model);
    out << "fitted K=" << a.config.num_traits << " on " << corpus.num_traces() << " traces / " << corpus.num_tokens()
        << " tokens; final log joint " << result.log_joint_trace.back() << "\n";
}

// -- generate -------------------------------------------------------------------

struct GenerateArgs {
    std::size_t K = 5;
    std::size_t E = 15;
    std::size_t T = 7;
    std::size_t I = 5;
    std::size_t M = 100;
    std::size_t N = 50;
    std::uint64_t seed = 0;
    HyperOpts hyper;
    std::string out_prefix;
};

void cmd_generate(const GenerateArgs& a, std::ostream& out) {
    if (a.M < 1) throw ConfigError("M must be at least 1");
    if (a.N < 1) throw ConfigError("N must be at least 1");
    if (a.K < 1 || a.E < 1 || a.T < 1 || a.I < 1) throw ConfigError("K, E, T and I must be at least 1");
    const Schema schema = Schema::generic(a.E, a.T, a.I);
    const TrueParams params = sample_params(a.M, a.K, schema, a.hyper.hyper, a.seed);
    const LabeledCorpus labeled = generate(params, schema, std::vector<std::size_t>(a.M, a.N), a.seed);

    const fs::path prefix(a.out_prefix);
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    const fs::path corpus_file = prefix.string() + ".jsonl";
    const fs::path schema_file = prefix.string() + ".schema.json";
    save_corpus(corpus_file, schema_file, labeled.corpus);
    json truth = {
        {"config",
         {{"K", a.K}, {"E", a.E}, {"T", a.T}, {"I", a.I}, {"M", a.M}, {"N", a.N}, {"seed", a.seed},
          {"hyper", hyper_to_json(a.hyper.hyper)}}},
        {"params", true_params_to_json(params)},
        {"assignments", labeled.assignments},
        {"log_joint", joint_log_likelihood(params, labeled, a.hyper.hyper)},
    };
    write_json_file(prefix.string() + ".truth.json", truth);
    out << "generated " << a.M << " traces x " << a.N << " tokens -> " << corpus_file.string() << "\n";
}

// -- analyze / export-trait -----------------------------------------------------

struct AnalyzeArgs {
    std::string model;
    std::string grades;
    double threshold = 0.05;
    std::uint64_t seed = 0;
    std::string out;
};

void cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
    if (!(a.threshold > 0.0 && a.threshold <= 1.0)) throw ConfigError("threshold must be in (0, 1]");
    const FittedModel model = fitted_model_from_json(read_json_file(a.model));
    std::ifstream grades_in(a.grades, std::ios::binary);
    if (!grades_in) throw InputError("cannot read " + a.grades);
    const auto grades = analysis::parse_grade_table(grades_in);
    analysis::AnalysisOptions options;
    options.threshold = a.threshold;
    options.seed = a.seed;
    const auto report = analysis::run_analysis(model.trace_ids, model.posterior.theta, grades, options);
    json j = analysis::report_to_json(report);
    j["config"] = {{"model", a.model}, {"grades", a.grades}, {"threshold", a.threshold}, {"seed", a.seed},
                   {"K", model.config.num_traits}};
    write_json_file(a.out, j);
    out << "analyzed " << report.joined_traces << " graded traces; table_i " << j["table_i"].dump() << "\n";
}

struct ExportArgs {
    std::string model;
    long long trait = 1;
    std::string out;
};

void cmd_export_trait(const ExportArgs& a, std::ostream& out) {
    const FittedModel model = fitted_model_from_json(read_json_file(a.model));
    const std::size_t k = from_display_index(a.trait, model.posterior.num_traits(), "trait");
    const auto rows = analysis::export_trait(model.posterior, model.schema, k);
    std::ofstream csv_out(a.out, std::ios::binary);
    if (!csv_out) throw InputError("cannot write " + a.out);
    analysis::write_profile_csv(csv_out, rows);
    write_json_file(a.out + ".meta.json", {{"model", a.model}, {"trait", a.trait}, {"rows", rows.size()}});
    out << "exported trait " << a.trait << " (" << rows.size() << " rows) -> " << a.out << "\n";
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hidden behavior traits: ingest event logs, fit, generate and analyze"};
    app.name(args.empty() ? "hbtm" : fs::path(args.front()).filename().string());
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file with option values, nested by subcommand");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest_cmd = app.add_subcommand("ingest", "Turn raw activity CSVs into per-session corpora");
    ingest_cmd->add_option("--raw", ingest_args.raw, "Raw log CSV file(s)")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--column-map", ingest_args.column_map, "Column map JSON")->check(CLI::ExistingFile);
    ingest_cmd->add_option("--activity-map", ingest_args.activity_map, "Activity mapping JSON")
        ->check(CLI::ExistingFile);
    ingest_cmd->add_option("--schema", ingest_args.schema, "Schema JSON (defaults to the 15/7/5 schema)")
        ->check(CLI::ExistingFile);
    ingest_cmd->add_option("--min-duration", ingest_args.filter.min_duration_s, "Drop events shorter than this (s)")
        ->capture_default_str();
    ingest_cmd->add_option("--max-duration", ingest_args.filter.max_duration_s, "Drop events longer than this (s)")
        ->capture_default_str();
    ingest_cmd->add_option("--out-dir", ingest_args.out_dir, "Output directory")->required();

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the model to a corpus by collapsed Gibbs sampling");
    fit_cmd->add_option("--corpus", fit_args.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--schema", fit_args.schema, "Schema JSON (default: beside the corpus)")
        ->check(CLI::ExistingFile);
    fit_cmd->add_option("-K,--K", fit_args.config.num_traits, "Number of traits")->capture_default_str();
    fit_cmd->add_option("--sweeps", fit_args.config.sweeps, "Total Gibbs sweeps")->capture_default_str();
    fit_cmd->add_option("--burn-in", fit_args.config.burn_in, "Sweeps discarded before sampling")
        ->capture_default_str();
    fit_cmd->add_option("--stride", fit_args.config.sample_stride, "Thinning interval")->capture_default_str();
    fit_cmd->add_option("--seed", fit_args.config.seed, "Random seed")->capture_default_str();
    fit_cmd->add_flag("--audit", fit_args.config.audit_every_sweep, "Audit counts and log joint after every sweep");
    fit_args.hyper.add_to(*fit_cmd);
    fit_cmd->add_option("--out", fit_args.out, "Model JSON output")->required();

    GenerateArgs gen_args;
    auto* gen_cmd = app.add_subcommand("generate", "Sample a synthetic corpus from the generative model");
    gen_cmd->add_option("--K", gen_args.K, "Number of traits")->capture_default_str();
    gen_cmd->add_option("--E", gen_args.E, "Number of event types")->capture_default_str();
    gen_cmd->add_option("--T", gen_args.T, "Number of time bins")->capture_default_str();
    gen_cmd->add_option("--I", gen_args.I, "Number of interaction levels")->capture_default_str();
    gen_cmd->add_option("--M", gen_args.M, "Number of traces")->capture_default_str();
    gen_cmd->add_option("--N", gen_args.N, "Tokens per trace")->capture_default_str();
    gen_cmd->add_option("--seed", gen_args.seed, "Random seed")->capture_default_str();
    gen_args.hyper.add_to(*gen_cmd);
    gen_cmd->add_option("--out-prefix", gen_args.out_prefix, "Output path prefix")->required();

    AnalyzeArgs an_args;
    auto* an_cmd = app.add_subcommand("analyze", "Cluster traces and test trait/grade associations");
    an_cmd->add_option("--model", an_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
    an_cmd->add_option("--grades", an_args.grades, "Grade CSV (trace_id,SA,SFE,FE)")
        ->required()
        ->check(CLI::ExistingFile);
    an_cmd->add_option("--threshold", an_args.threshold, "Significance threshold")->capture_default_str();
    an_cmd->add_option("--seed", an_args.seed, "k-means seed")->capture_default_str();
    an_cmd->add_option("--out", an_args.out, "Report JSON output")->required();

    ExportArgs ex_args;
    auto* ex_cmd = app.add_subcommand("export-trait", "Write one trait's distributions as plot-ready CSV");
    ex_cmd->add_option("--model", ex_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
    ex_cmd->add_option("--trait", ex_args.trait, "Trait number (1-based)")->required();
    ex_cmd->add_option("--out", ex_args.out, "Profile CSV output")->required();

    try {
        std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
        std::reverse(rest.begin(), rest.end());
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& ex) {
        print_error(err, "usage_error", ex.what());
        return 2;
    }

    try {
        if (ingest_cmd->parsed()) {
            cmd_ingest(ingest_args, out);
        } else if (fit_cmd->parsed()) {
            cmd_fit(fit_args, out);
        } else if (gen_cmd->parsed()) {
            cmd_generate(gen_args, out);
        } else if (an_cmd->parsed()) {
            cmd_analyze(an_args, out);
        } else if (ex_cmd->parsed()) {
            cmd_export_trait(ex_args, out);
        }
    } catch (const Error& ex) {
        print_error(err, ex.kind(), ex.what());
        return 1;
    } catch (const std::exception& ex) {
        print_error(err, "error", ex.what());
        return 1;
    }
    return 0;
}

}  // namespace hbtm::cli
