#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbtm/core.hpp"
#include "hbtm/stats.hpp"

namespace hbtm::analysis {

enum class GradeType { SA = 0, SFE = 1, FE = 2 };
inline constexpr std::array<GradeType, 3> kGradeTypes = {GradeType::SA, GradeType::SFE, GradeType::FE};

const char* grade_name(GradeType g) noexcept;

/// Scores per trace: session assessment (0-5), session-aligned final-exam
/// problem (unbounded), final exam total (0-100).  Blank cells are missing.
struct GradeTable {
    std::map<std::string, std::array<std::optional<double>, 3>> rows;

    std::optional<double> get(const std::string& trace_id, GradeType g) const;
};

/// CSV with header trace_id,SA,SFE,FE.  Throws InputError on duplicate ids,
/// unparseable or out-of-range scores.
GradeTable parse_grade_table(std::istream& in);

struct AnalysisOptions {
    double threshold = 0.05;
    std::uint64_t seed = 0;
    std::size_t clusters = 2;
    stats::KMeansOptions kmeans;
};

struct GradeTTest {
    GradeType grade;
    bool computed = false;
    std::string skipped_reason;
    stats::TTestResult result;
    bool significant = false;
};

struct TraitCorrelation {
    std::size_t trait = 0;  // 0-based
    GradeType grade;
    bool defined = false;
    std::string undefined_reason;
    stats::CorrelationResult result;
    bool significant = false;
    char sign = '0';  // '+', '-' or '0'
};

struct AnalysisReport {
    double threshold = 0.05;
    std::uint64_t seed = 0;
    std::vector<std::string> trace_ids;
    std::vector<std::size_t> cluster_labels;
    std::vector<std::size_t> cluster_sizes;
    Matrix centroids;
    double wcss = 0.0;
    std::size_t joined_traces = 0;
    std::vector<GradeTTest> ttests;
    std::vector<TraitCorrelation> correlations;
};

/// Clusters the trait mixtures (all traces) with k-means, then per grade
/// type runs Welch t-tests between clusters and per-trait Pearson
/// correlations over the traces that carry that grade.
/// Throws InputError when no trace id appears in the grade table.
AnalysisReport run_analysis(const std::vector<std::string>& trace_ids, const Matrix& theta, const GradeTable& grades,
                            const AnalysisOptions& options);

/// Report JSON, including the Table-I-style row (grade types whose t-test is
/// significant) and Table-II-style cells ("(+)T3", 1-based traits).
nlohmann::json report_to_json(const AnalysisReport& report);

// ---------------------------------------------------------------------------
// Trait profiles
// ---------------------------------------------------------------------------

struct ProfileRow {
    std::string kind;         // "event", "time" or "interaction"
    std::string event_label;  // label of the event the row belongs to
    std::size_t bin_index = 0;  // 1-based: event number for "event", bin number otherwise
    double probability = 0.0;

    bool operator==(const ProfileRow&) const = default;
};

/// phi[k] as E "event" rows, then for each event its T "time" rows and I
/// "interaction" rows.  Throws InputError if k >= K.
std::vector<ProfileRow> export_trait(const Posterior& posterior, const Schema& schema, std::size_t trait);

/// CSV with header kind,event_label,bin_index,probability; probabilities are
/// written with 17 significant digits so parsing restores them exactly.
void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows);
std::vector<ProfileRow> parse_profile_csv(std::istream& in);

}  // namespace hbtm::analysis
