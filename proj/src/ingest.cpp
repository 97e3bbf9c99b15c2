#include "hbtm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <istream>
#include <locale>
#include <sstream>
#include <unordered_map>

#include "hbtm/csv.hpp"

namespace hbtm::ingest {

using nlohmann::json;

namespace {

std::vector<std::string> string_or_list(const json& j, const char* key, std::vector<std::string> fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (v.is_string()) {
        return {v.get<std::string>()};
    }
    if (v.is_array()) {
        return v.get<std::vector<std::string>>();
    }
    throw ConfigError(std::string("column map field '") + key + "' must be a string or list of strings");
}

std::optional<double> parse_number(std::string_view text) {
    const std::string t = csv::trim(text);
    double value = 0.0;
    const auto* first = t.data();
    const auto* last = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (t.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

/// Blank counts read as zero; anything else must be a nonnegative integer
/// (integral decimals such as "3.0" are accepted).
std::optional<std::uint64_t> parse_count(std::string_view text) {
    if (csv::trim(text).empty()) {
        return 0;
    }
    const auto v = parse_number(text);
    if (!v || *v < 0.0 || std::floor(*v) != *v || *v > 1e15) {
        return std::nullopt;
    }
    return static_cast<std::uint64_t>(*v);
}

}  // namespace

// ---------------------------------------------------------------------------
// Column map and parsing
// ---------------------------------------------------------------------------

ColumnMap ColumnMap::from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("column map must be a JSON object");
    }
    static const char* known[] = {"session",      "student_id", "activity",   "start_time",
                                  "end_time",     "mouse_clicks", "keystrokes", "timestamp_format"};
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known)) {
            throw ConfigError("unknown column map field '" + key + "'");
        }
    }
    ColumnMap c;
    c.session = j.value("session", c.session);
    c.student_id = j.value("student_id", c.student_id);
    c.activity = j.value("activity", c.activity);
    c.start_time = j.value("start_time", c.start_time);
    c.end_time = j.value("end_time", c.end_time);
    c.mouse_clicks = string_or_list(j, "mouse_clicks", c.mouse_clicks);
    c.keystrokes = string_or_list(j, "keystrokes", c.keystrokes);
    c.timestamp_format = j.value("timestamp_format", c.timestamp_format);
    return c;
}

json ColumnMap::to_json() const {
    return json{{"session", session},       {"student_id", student_id},     {"activity", activity},
                {"start_time", start_time}, {"end_time", end_time},         {"mouse_clicks", mouse_clicks},
                {"keystrokes", keystrokes}, {"timestamp_format", timestamp_format}};
}

std::optional<double> parse_timestamp(const std::string& text, const std::string& format) {
    const std::string t = csv::trim(text);
    if (format == "seconds") {
        return parse_number(t);
    }
    std::istringstream in(t);
    in.imbue(std::locale::classic());
    std::tm tm{};
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) {
        return std::nullopt;
    }
    double fraction = 0.0;
    if (in.peek() == '.') {
        std::string digits;
        in.get();
        while (std::isdigit(in.peek())) {
            digits.push_back(static_cast<char>(in.get()));
        }
        if (digits.empty()) {
            return std::nullopt;
        }
        fraction = std::stod("0." + digits);
    }
    in >> std::ws;
    if (!in.eof()) {
        return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                             day{static_cast<unsigned>(tm.tm_mday)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 86400.0 + tm.tm_hour * 3600.0 + tm.tm_min * 60.0 + tm.tm_sec + fraction;
}

ParseResult parse_raw_log(std::istream& csv_in, const ColumnMap& columns, const std::string& source) {
    ParseResult result;
    std::vector<std::string> header;
    if (!csv::read_record(csv_in, header)) {
        throw InputError(source + ": missing header row");
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        index.emplace(csv::trim(header[i]), i);
    }
    const auto column = [&](const std::string& name) {
        const auto it = index.find(name);
        if (it == index.end()) {
            throw ConfigError(source + ": mapped column '" + name + "' not found in header");
        }
        return it->second;
    };
    const std::size_t session_col = column(columns.session);
    const std::size_t student_col = column(columns.student_id);
    const std::size_t activity_col = column(columns.activity);
    const std::size_t start_col = column(columns.start_time);
    const std::size_t end_col = column(columns.end_time);
    std::vector<std::size_t> click_cols;
    for (const auto& name : columns.mouse_clicks) click_cols.push_back(column(name));
    std::vector<std::size_t> key_cols;
    for (const auto& name : columns.keystrokes) key_cols.push_back(column(name));

    std::vector<std::string> fields;
    while (csv::read_record(csv_in, fields)) {
        if (fields.size() == 1 && csv::trim(fields[0]).empty()) {
            continue;  // blank line
        }
        const std::size_t row = ++result.rows_read;
        const auto reject = [&](std::string reason) { result.rejects.push_back({source, row, std::move(reason)}); };
        if (fields.size() != header.size()) {
            reject("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
            continue;
        }
        RawEvent ev;
        ev.session = csv::trim(fields[session_col]);
        ev.student_id = csv::trim(fields[student_col]);
        ev.activity = csv::trim(fields[activity_col]);
        if (ev.session.empty() || ev.student_id.empty()) {
            reject("missing session or student id");
            continue;
        }
        const auto start = parse_timestamp(fields[start_col], columns.timestamp_format);
        const auto end = parse_timestamp(fields[end_col], columns.timestamp_format);
        if (!start || !end) {
            reject("unparseable timestamp");
            continue;
        }
        ev.start_time = *start;
        ev.end_time = *end;
        if (ev.end_time < ev.start_time) {
            reject("negative duration");
            continue;
        }
        bool counts_ok = true;
        for (std::size_t c : click_cols) {
            const auto v = parse_count(fields[c]);
            counts_ok = counts_ok && v.has_value();
            if (v) ev.mouse_clicks += *v;
        }
        for (std::size_t c : key_cols) {
            const auto v = parse_count(fields[c]);
            counts_ok = counts_ok && v.has_value();
            if (v) ev.keystrokes += *v;
        }
        if (!counts_ok) {
            reject("unparseable interaction count");
            continue;
        }
        result.events.push_back(std::move(ev));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Activity mapping
// ---------------------------------------------------------------------------

void ActivityMapping::validate(std::size_t num_events) const {
    if (default_index >= num_events) {
        throw ConfigError("activity mapping default index out of range");
    }
    for (const auto& rule : rules) {
        if (rule.event_index >= num_events) {
            throw ConfigError("activity rule '" + rule.pattern + "' maps to event index " +
                              std::to_string(rule.event_index) + " >= " + std::to_string(num_events));
        }
    }
}

ActivityMapping ActivityMapping::standard() {
    using M = ActivityRule::Match;
    ActivityMapping mapping;
    mapping.rules = {
        {M::Prefix, "Study_Es_", 0},
        {M::Prefix, "Deeds_Es_", 1},
        {M::Exact, "Deeds_Es", 2},
        {M::Exact, "Deeds", 3},
        {M::Prefix, "Deeds_", 3},
        {M::Prefix, "TextEditor_Es_", 4},
        {M::Exact, "TextEditor_Es", 5},
        {M::Exact, "TextEditor", 6},
        {M::Prefix, "TextEditor_", 6},
        {M::Prefix, "Diagram", 7},
        {M::Prefix, "Properties", 8},
        {M::Prefix, "Study_Materials", 9},
        {M::Prefix, "FSM_Es_", 10},
        {M::Prefix, "FSM_Related", 11},
        {M::Prefix, "Aulaweb", 12},
        {M::Exact, "Blank", 13},
        {M::Exact, "Other", 14},
    };
    mapping.default_index = 14;
    return mapping;
}

ActivityMapping ActivityMapping::from_json(const json& j) {
    ActivityMapping mapping;
    try {
        for (const auto& r : j.at("rules")) {
            ActivityRule rule;
            const auto kind = r.at("match").get<std::string>();
            if (kind == "exact") {
                rule.match = ActivityRule::Match::Exact;
            } else if (kind == "prefix") {
                rule.match = ActivityRule::Match::Prefix;
            } else {
                throw ConfigError("activity rule match must be 'exact' or 'prefix', got '" + kind + "'");
            }
            rule.pattern = r.at("pattern").get<std::string>();
            // Config files use the 1-based event numbering of the taxonomy.
            rule.event_index = from_display_index(r.at("event").get<long long>(), 1ULL << 20, "event");
            mapping.rules.push_back(std::move(rule));
        }
        mapping.default_index = from_display_index(j.at("default_event").get<long long>(), 1ULL << 20, "event");
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("activity mapping: ") + ex.what());
    }
    return mapping;
}

json ActivityMapping::to_json() const {
    json rules_json = json::array();
    for (const auto& r : rules) {
        rules_json.push_back({{"match", r.match == ActivityRule::Match::Exact ? "exact" : "prefix"},
                              {"pattern", r.pattern},
                              {"event", to_display_index(r.event_index)}});
    }
    return json{{"rules", rules_json}, {"default_event", to_display_index(default_index)}};
}

std::size_t map_activity(const std::string& label, const ActivityMapping& mapping) {
    for (const auto& rule : mapping.rules) {
        const bool hit = rule.match == ActivityRule::Match::Exact ? label == rule.pattern
                                                                   : label.starts_with(rule.pattern);
        if (hit) {
            return rule.event_index;
        }
    }
    return mapping.default_index;
}

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

void FilterConfig::validate() const {
    if (!(min_duration_s > 0.0) || !(max_duration_s > 0.0) || !std::isfinite(max_duration_s)) {
        throw ConfigError("duration filter bounds must be positive");
    }
    if (!(min_duration_s < max_duration_s)) {
        throw ConfigError("min_duration_s must be smaller than max_duration_s");
    }
}

std::optional<std::size_t> discretize_duration(double seconds, const Schema& schema, const FilterConfig& filter) {
    if (!(seconds > 0.0)) {
        throw InputError("duration must be positive");
    }
    if (seconds < filter.min_duration_s || seconds > filter.max_duration_s) {
        return std::nullopt;
    }
    const auto& edges = schema.time_bin_edges;
    for (std::size_t t = 0; t + 1 < edges.size(); ++t) {
        if (edges[t] < seconds && seconds <= edges[t + 1]) {
            return t;
        }
    }
    return std::nullopt;
}

std::size_t discretize_interaction(std::uint64_t total_count, const Schema& schema) {
    const auto& edges = schema.interaction_bin_edges;
    const double count = static_cast<double>(total_count);
    const std::size_t levels = schema.num_interaction_levels();
    for (std::size_t i = 0; i < levels; ++i) {
        if (count < edges[i + 1]) {
            return i;
        }
    }
    return levels - 1;
}

// ---------------------------------------------------------------------------
// Corpus construction
// ---------------------------------------------------------------------------

std::string make_trace_id(const std::string& student_id, const std::string& session) {
    return student_id + "@" + session;
}

IngestResult build_corpora(const std::vector<RawEvent>& raw, const ActivityMapping& mapping, const Schema& schema,
                           const FilterConfig& filter) {
    schema.validate();
    filter.validate();
    mapping.validate(schema.num_events());

    struct Group {
        std::string trace_id;
        Trace trace;
    };
    struct SessionGroups {
        std::string session;
        std::vector<Group> traces;
        std::unordered_map<std::string, std::size_t> by_trace;
    };
    std::vector<SessionGroups> sessions;
    std::unordered_map<std::string, std::size_t> session_index;

    IngestResult result;
    for (std::size_t idx = 0; idx < raw.size(); ++idx) {
        const RawEvent& ev = raw[idx];
        auto [sit, new_session] = session_index.emplace(ev.session, sessions.size());
        if (new_session) {
            sessions.push_back({ev.session, {}, {}});
        }
        SessionGroups& sg = sessions[sit->second];
        const std::string trace_id = make_trace_id(ev.student_id, ev.session);
        auto [tit, new_trace] = sg.by_trace.emplace(trace_id, sg.traces.size());
        if (new_trace) {
            sg.traces.push_back({trace_id, Trace{trace_id, {}}});
        }
        Trace& trace = sg.traces[tit->second].trace;

        const double seconds = ev.duration();
        std::string reason;
        std::optional<std::size_t> bin;
        if (!(seconds > 0.0)) {
            reason = "nonpositive duration";
        } else if (seconds < filter.min_duration_s) {
            reason = "shorter than min_duration_s";
        } else if (seconds > filter.max_duration_s) {
            reason = "longer than max_duration_s";
        } else {
            bin = discretize_duration(seconds, schema, filter);
            if (!bin) reason = "outside time bin edges";
        }
        if (!bin) {
            result.filtered.push_back({idx, ev.session, trace_id, reason});
            continue;
        }
        trace.tokens.push_back(Token{static_cast<std::uint32_t>(map_activity(ev.activity, mapping)),
                                     static_cast<std::uint32_t>(*bin),
                                     static_cast<std::uint32_t>(
                                         discretize_interaction(ev.mouse_clicks + ev.keystrokes, schema))});
        ++result.tokens;
    }

    for (auto& sg : sessions) {
        SessionCorpus sc;
        sc.session = sg.session;
        sc.corpus.schema = schema;
        for (auto& g : sg.traces) {
            if (g.trace.tokens.empty()) {
                result.dropped_traces.push_back(g.trace_id);
            } else {
                sc.corpus.traces.push_back(std::move(g.trace));
            }
        }
        if (!sc.corpus.traces.empty()) {
            result.sessions.push_back(std::move(sc));
        }
    }
    return result;
}

json summarize(const IngestResult& result, const std::vector<Reject>& rejects, std::size_t rows_read,
               const Schema& schema) {
    std::vector<std::size_t> per_event(schema.num_events(), 0);
    std::vector<std::size_t> per_time(schema.num_time_bins(), 0);
    std::vector<std::size_t> per_level(schema.num_interaction_levels(), 0);
    json sessions = json::array();
    for (const auto& sc : result.sessions) {
        for (const auto& trace : sc.corpus.traces) {
            for (const auto& tok : trace.tokens) {
                ++per_event[tok.event];
                ++per_time[tok.time_bin];
                ++per_level[tok.interaction_level];
            }
        }
        sessions.push_back(
            {{"session", sc.session}, {"traces", sc.corpus.num_traces()}, {"tokens", sc.corpus.num_tokens()}});
    }
    json event_counts = json::array();
    for (std::size_t e = 0; e < per_event.size(); ++e) {
        event_counts.push_back(
            {{"event", to_display_index(e)}, {"label", schema.event_labels[e]}, {"count", per_event[e]}});
    }
    std::map<std::string, std::size_t> filter_reasons;
    for (const auto& f : result.filtered) ++filter_reasons[f.reason];
    std::map<std::string, std::size_t> reject_reasons;
    for (const auto& r : rejects) ++reject_reasons[r.reason];

    return json{
        {"rows_parsed", rows_read},
        {"tokens", result.tokens},
        {"filtered", result.filtered.size()},
        {"rejected", rejects.size()},
        {"conservation_holds", rows_read == result.tokens + result.filtered.size() + rejects.size()},
        {"filtered_by_reason", filter_reasons},
        {"rejected_by_reason", reject_reasons},
        {"dropped_traces", result.dropped_traces},
        {"sessions", sessions},
        {"event_counts", event_counts},
        {"time_bin_counts", per_time},
        {"interaction_level_counts", per_level},
        {"num_events", schema.num_events()},
        {"num_time_bins", schema.num_time_bins()},
        {"num_interaction_levels", schema.num_interaction_levels()},
    };
}

}  // namespace hbtm::ingest
