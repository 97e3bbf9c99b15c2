#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbtm/core.hpp"

namespace hbtm::ingest {

/// One row of a raw activity log.  Timestamps are seconds since the Unix
/// epoch (UTC), fractional part preserved.
struct RawEvent {
    std::string session;
    std::string student_id;
    std::string activity;
    double start_time = 0.0;
    double end_time = 0.0;
    std::uint64_t mouse_clicks = 0;
    std::uint64_t keystrokes = 0;

    double duration() const noexcept { return end_time - start_time; }
};

/// Which CSV columns feed which RawEvent field.  Several columns may be
/// summed into mouse_clicks (left/right/wheel clicks) and keystrokes.
struct ColumnMap {
    std::string session = "session";
    std::string student_id = "student_Id";
    std::string activity = "activity";
    std::string start_time = "start_time";
    std::string end_time = "end_time";
    std::vector<std::string> mouse_clicks = {"mouse_wheel_click", "mouse_click_left", "mouse_click_right"};
    std::vector<std::string> keystrokes = {"keystroke"};
    /// strptime-style format, or "seconds" for numeric epoch seconds.
    std::string timestamp_format = "%d.%m.%Y %H:%M:%S";

    static ColumnMap from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct Reject {
    std::string source;
    std::size_t row = 0;  // 1-based data row, header excluded
    std::string reason;
};

struct ParseResult {
    std::vector<RawEvent> events;
    std::vector<Reject> rejects;
    std::size_t rows_read = 0;
};

/// Reads a CSV with a header row.  Rows that cannot be turned into a
/// RawEvent are reported in `rejects` with their row number.  A mapped column
/// missing from the header is a ConfigError naming the column.
ParseResult parse_raw_log(std::istream& csv, const ColumnMap& columns, const std::string& source = "<input>");

/// Parses a timestamp under `format` (see ColumnMap::timestamp_format).
std::optional<double> parse_timestamp(const std::string& text, const std::string& format);

struct ActivityRule {
    enum class Match { Exact, Prefix };
    Match match = Match::Exact;
    std::string pattern;
    std::size_t event_index = 0;
};

/// Ordered rules; the first match wins, unmatched labels get default_index.
struct ActivityMapping {
    std::vector<ActivityRule> rules;
    std::size_t default_index = 14;

    /// Throws ConfigError if any index is >= num_events.
    void validate(std::size_t num_events) const;

    /// Rules for the EPM activity labels, grouped into the 15 event types.
    static ActivityMapping standard();
    static ActivityMapping from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

std::size_t map_activity(const std::string& label, const ActivityMapping& mapping);

struct FilterConfig {
    double min_duration_s = 1.0;
    double max_duration_s = 14000.0;

    void validate() const;
};

/// Duration bin with left-open, right-closed bins (edge[t], edge[t+1]].
/// Returns nullopt (filtered) below min_duration_s, above max_duration_s, or
/// outside the bin edges.  Throws InputError for nonpositive durations.
std::optional<std::size_t> discretize_duration(double seconds, const Schema& schema, const FilterConfig& filter);

/// Interaction level with left-closed, right-open bins [edge[i], edge[i+1]);
/// counts at or above the top edge clamp to the last level.
std::size_t discretize_interaction(std::uint64_t total_count, const Schema& schema);

struct FilteredEvent {
    std::size_t event_index = 0;  // position in the raw event list
    std::string session;
    std::string trace_id;
    std::string reason;
};

struct SessionCorpus {
    std::string session;
    Corpus corpus;
};

struct IngestResult {
    std::vector<SessionCorpus> sessions;  // ordered by first appearance
    std::vector<FilteredEvent> filtered;
    std::vector<std::string> dropped_traces;  // traces emptied by filtering
    std::size_t tokens = 0;
};

/// Trace id for a student within a session: "<student>@<session>".
std::string make_trace_id(const std::string& student_id, const std::string& session);

/// Groups events by (session, student) and tokenizes them.  Token order
/// within a trace follows input order; traces and sessions are ordered by
/// first appearance.
IngestResult build_corpora(const std::vector<RawEvent>& raw, const ActivityMapping& mapping, const Schema& schema,
                           const FilterConfig& filter);

/// Counts per event type, duration bin and interaction level, plus
/// per-session trace/token totals and the row conservation identity.
nlohmann::json summarize(const IngestResult& result, const std::vector<Reject>& rejects, std::size_t rows_read,
                         const Schema& schema);

}  // namespace hbtm::ingest
