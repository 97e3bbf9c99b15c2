#include "hbtm/analysis.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "hbtm/csv.hpp"

namespace hbtm::analysis {

using nlohmann::json;

namespace {

std::optional<double> parse_double(const std::string& text) {
    const std::string t = csv::trim(text);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw InputError("unparseable number '" + t + "'");
    }
    return v;
}

json nullable(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

const char* grade_name(GradeType g) noexcept {
    switch (g) {
        case GradeType::SA: return "SA";
        case GradeType::SFE: return "SFE";
        case GradeType::FE: return "FE";
    }
    return "?";
}

std::optional<double> GradeTable::get(const std::string& trace_id, GradeType g) const {
    const auto it = rows.find(trace_id);
    if (it == rows.end()) return std::nullopt;
    return it->second[static_cast<std::size_t>(g)];
}

GradeTable parse_grade_table(std::istream& in) {
    std::vector<std::string> fields;
    if (!csv::read_record(in, fields)) {
        throw InputError("grade table is empty");
    }
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < fields.size(); ++i) col[csv::trim(fields[i])] = i;
    for (const char* name : {"trace_id", "SA", "SFE", "FE"}) {
        if (!col.contains(name)) throw InputError(std::string("grade table lacks column ") + name);
    }
    GradeTable table;
    std::size_t row = 0;
    while (csv::read_record(in, fields)) {
        ++row;
        if (fields.size() == 1 && csv::trim(fields[0]).empty()) continue;
        const auto where = [&] { return "grade table row " + std::to_string(row) + ": "; };
        const auto field = [&](const char* name) -> std::string {
            const std::size_t c = col.at(name);
            return c < fields.size() ? fields[c] : std::string();
        };
        const std::string id = csv::trim(field("trace_id"));
        if (id.empty()) throw InputError(where() + "empty trace_id");
        std::array<std::optional<double>, 3> scores;
        try {
            scores[0] = parse_double(field("SA"));
            scores[1] = parse_double(field("SFE"));
            scores[2] = parse_double(field("FE"));
        } catch (const InputError& ex) {
            throw InputError(where() + ex.what());
        }
        if (scores[0] && (*scores[0] < 0.0 || *scores[0] > 5.0)) throw InputError(where() + "SA outside [0,5]");
        if (scores[2] && (*scores[2] < 0.0 || *scores[2] > 100.0)) throw InputError(where() + "FE outside [0,100]");
        if (!table.rows.emplace(id, scores).second) throw InputError(where() + "duplicate trace_id " + id);
    }
    return table;
}

AnalysisReport run_analysis(const std::vector<std::string>& trace_ids, const Matrix& theta, const GradeTable& grades,
                            const AnalysisOptions& options) {
    if (trace_ids.size() != theta.rows()) {
        throw InputError("trace id count differs from theta rows");
    }
    std::vector<std::size_t> joined;
    for (std::size_t m = 0; m < trace_ids.size(); ++m) {
        if (grades.rows.contains(trace_ids[m])) joined.push_back(m);
    }
    if (joined.empty()) {
        throw InputError("empty join: no trace id of the model appears in the grade table");
    }

    AnalysisReport report;
    report.threshold = options.threshold;
    report.seed = options.seed;
    report.trace_ids = trace_ids;
    report.joined_traces = joined.size();

    const auto km = stats::kmeans(theta, options.clusters, options.seed, options.kmeans);
    report.cluster_labels = km.labels;
    report.centroids = km.centroids;
    report.wcss = km.wcss;
    report.cluster_sizes.assign(options.clusters, 0);
    for (std::size_t label : km.labels) ++report.cluster_sizes[label];

    const std::size_t K = theta.cols();
    for (GradeType g : kGradeTypes) {
        std::vector<double> group_a;
        std::vector<double> group_b;
        std::vector<std::size_t> rows;
        std::vector<double> scores;
        for (std::size_t m : joined) {
            const auto score = grades.get(trace_ids[m], g);
            if (!score) continue;
            rows.push_back(m);
            scores.push_back(*score);
            (km.labels[m] == 0 ? group_a : group_b).push_back(*score);
        }

        GradeTTest tt;
        tt.grade = g;
        if (options.clusters != 2) {
            tt.skipped_reason = "t-test needs exactly two clusters";
        } else if (group_a.size() < 2 || group_b.size() < 2) {
            tt.skipped_reason = "fewer than two scored members in a cluster";
        } else {
            tt.computed = true;
            tt.result = stats::welch_t_test(group_a, group_b);
            tt.significant = tt.result.p <= options.threshold;
        }
        report.ttests.push_back(tt);

        for (std::size_t k = 0; k < K; ++k) {
            TraitCorrelation tc;
            tc.trait = k;
            tc.grade = g;
            std::vector<double> weights;
            weights.reserve(rows.size());
            for (std::size_t m : rows) weights.push_back(theta(m, k));
            try {
                tc.result = stats::pearson(weights, scores);
                tc.defined = true;
                tc.significant = tc.result.p <= options.threshold;
                tc.sign = tc.result.r > 0.0 ? '+' : (tc.result.r < 0.0 ? '-' : '0');
            } catch (const InputError& ex) {
                tc.undefined_reason = ex.what();
                tc.result.n = rows.size();
            }
            report.correlations.push_back(std::move(tc));
        }
    }
    return report;
}

json report_to_json(const AnalysisReport& report) {
    json clusters = json::array();
    for (std::size_t m = 0; m < report.trace_ids.size(); ++m) {
        clusters.push_back({{"trace_id", report.trace_ids[m]}, {"cluster", report.cluster_labels[m]}});
    }
    json centroids = json::array();
    for (std::size_t c = 0; c < report.centroids.rows(); ++c) {
        const auto row = report.centroids.row(c);
        centroids.push_back(std::vector<double>(row.begin(), row.end()));
    }

    json ttests = json::array();
    json table_i = json::object();
    for (const auto& tt : report.ttests) {
        json entry = {{"grade", grade_name(tt.grade)}, {"computed", tt.computed}};
        if (tt.computed) {
            entry["t"] = nullable(tt.result.t);
            entry["df"] = tt.result.df;
            entry["p"] = tt.result.p;
            entry["group_means"] = {tt.result.mean_a, tt.result.mean_b};
            entry["group_sizes"] = {tt.result.n_a, tt.result.n_b};
            entry["degenerate"] = tt.result.degenerate;
            entry["significant"] = tt.significant;
        } else {
            entry["skipped_reason"] = tt.skipped_reason;
            entry["significant"] = false;
        }
        table_i[grade_name(tt.grade)] = tt.significant;
        ttests.push_back(std::move(entry));
    }

    json correlations = json::array();
    json table_ii = json::object();
    for (GradeType g : kGradeTypes) {
        std::vector<std::string> positive;
        std::vector<std::string> negative;
        for (const auto& tc : report.correlations) {
            if (tc.grade != g || !tc.significant || tc.sign == '0') continue;
            const std::string label = "T" + std::to_string(to_display_index(tc.trait));
            (tc.sign == '+' ? positive : negative).push_back(label);
        }
        std::string cell;
        const auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
            return s;
        };
        if (!positive.empty()) cell += "(+)" + join(positive);
        if (!negative.empty()) cell += (cell.empty() ? "" : " ") + std::string("(-)") + join(negative);
        table_ii[grade_name(g)] = cell.empty() ? "-" : cell;
    }
    for (const auto& tc : report.correlations) {
        json entry = {{"trait", to_display_index(tc.trait)},
                      {"grade", grade_name(tc.grade)},
                      {"n", tc.result.n},
                      {"defined", tc.defined}};
        if (tc.defined) {
            entry["r"] = tc.result.r;
            entry["p"] = tc.result.p;
            entry["sign"] = std::string(1, tc.sign);
            entry["significant"] = tc.significant;
        } else {
            entry["undefined_reason"] = tc.undefined_reason;
            entry["significant"] = false;
        }
        correlations.push_back(std::move(entry));
    }

    return json{
        {"threshold", report.threshold},
        {"seed", report.seed},
        {"joined_traces", report.joined_traces},
        {"clustering",
         {{"k", report.cluster_sizes.size()},
          {"sizes", report.cluster_sizes},
          {"centroids", centroids},
          {"wcss", report.wcss},
          {"assignments", clusters}}},
        {"ttests", ttests},
        {"correlations", correlations},
        {"table_i", table_i},
        {"table_ii", table_ii},
    };
}

std::vector<ProfileRow> export_trait(const Posterior& posterior, const Schema& schema, std::size_t trait) {
    const std::size_t K = posterior.num_traits();
    if (trait >= K) {
        throw InputError("trait " + std::to_string(to_display_index(trait)) + " out of range 1.." + std::to_string(K));
    }
    const std::size_t E = posterior.phi.cols();
    if (E != schema.num_events()) {
        throw InputError("schema and posterior disagree on the number of events");
    }
    std::vector<ProfileRow> rows;
    for (std::size_t e = 0; e < E; ++e) {
        rows.push_back({"event", schema.event_labels[e], to_display_index(e), posterior.phi(trait, e)});
    }
    for (std::size_t e = 0; e < E; ++e) {
        const auto time_row = posterior.psi.slice(trait, e);
        for (std::size_t t = 0; t < time_row.size(); ++t) {
            rows.push_back({"time", schema.event_labels[e], to_display_index(t), time_row[t]});
        }
        const auto level_row = posterior.tau.slice(trait, e);
        for (std::size_t i = 0; i < level_row.size(); ++i) {
            rows.push_back({"interaction", schema.event_labels[e], to_display_index(i), level_row[i]});
        }
    }
    return rows;
}

void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows) {
    out << "kind,event_label,bin_index,probability\n";
    char buf[64];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.probability);
        out << row.kind << ',' << csv::escape(row.event_label) << ',' << row.bin_index << ',' << buf << '\n';
    }
}

std::vector<ProfileRow> parse_profile_csv(std::istream& in) {
    std::vector<std::string> fields;
    if (!csv::read_record(in, fields) || fields.size() != 4 || fields[0] != "kind") {
        throw InputError("profile CSV lacks the expected header");
    }
    std::vector<ProfileRow> rows;
    while (csv::read_record(in, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 4) throw InputError("profile CSV row has wrong field count");
        ProfileRow row;
        row.kind = fields[0];
        row.event_label = fields[1];
        row.bin_index = static_cast<std::size_t>(std::stoull(fields[2]));
        row.probability = parse_double(fields[3]).value_or(0.0);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace hbtm::analysis
