#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/config.hpp"
#include "entrain/error.hpp"
#include "entrain/linguistics.hpp"

namespace entrain {

struct CsvRow {
    std::size_t line = 0;  // 1-based line where the row starts
    std::vector<std::string> fields;
};

/// RFC 4180: quoted fields may hold commas, doubled quotes and line breaks.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    row.line = 1;
    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(std::move(row));
        row = CsvRow{};
        row.line = line;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            ++line;
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) throw Error(Errc::MalformedRow, "unterminated quoted field starting near line " + std::to_string(row.line));
    if (field_started || !row.fields.empty()) end_row();
    return rows;
}

struct CorpusRecord {
    std::string game_id;
    int round = 0;
    Speaker speaker = Speaker::Director;
    std::int64_t timestamp_ms = 0;
    std::string text;
    std::string intended_target;

    Utterance utterance() const { return {text, speaker, timestamp_ms, round, intended_target}; }
    bool operator==(const CorpusRecord&) const = default;
};

struct CorpusLoad {
    std::vector<CorpusRecord> records;  // director rows, grouped by game id, ordered by time
    std::size_t matcher_rows = 0;
    std::vector<std::string> skipped;  // lenient mode: one message per malformed row
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline std::optional<Speaker> parse_role(const std::string& raw) {
    const auto r = lower(raw);
    if (r == "director" || r == "speaker" || r == "d") return Speaker::Director;
    if (r == "matcher" || r == "listener" || r == "m") return Speaker::Matcher;
    return std::nullopt;
}

inline std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace detail

inline CorpusLoad parse_corpus(std::string_view text, const ColumnMap& cols = {}, bool strict = false) {
    const auto rows = parse_csv(text);
    CorpusLoad out;
    if (rows.empty()) return out;
    const auto& header = rows.front().fields;
    auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(Errc::MissingColumn, "missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_game = column(cols.game_id), c_round = column(cols.round), c_role = column(cols.role),
                      c_time = column(cols.timestamp), c_text = column(cols.text), c_target = column(cols.target);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        auto bad = [&](const std::string& why) {
            const std::string msg = "row " + std::to_string(i) + " (line " + std::to_string(row.line) + "): " + why;
            if (strict) throw Error(Errc::MalformedRow, msg);
            out.skipped.push_back(msg);
        };
        if (row.fields.size() != header.size()) {
            bad("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.fields.size()));
            continue;
        }
        const auto role = detail::parse_role(row.fields[c_role]);
        if (!role) {
            bad("unknown role '" + row.fields[c_role] + "'");
            continue;
        }
        if (*role == Speaker::Matcher) {
            ++out.matcher_rows;
            continue;
        }
        const auto round = detail::parse_number(row.fields[c_round]);
        const auto time = detail::parse_number(row.fields[c_time]);
        if (!round || !time) {
            bad("round and time must be numeric");
            continue;
        }
        if (row.fields[c_target].empty()) {
            bad("director row without an intended target");
            continue;
        }
        out.records.push_back({row.fields[c_game], static_cast<int>(*round), Speaker::Director,
                               static_cast<std::int64_t>(std::llround(*time)), row.fields[c_text],
                               row.fields[c_target]});
    }
    std::stable_sort(out.records.begin(), out.records.end(), [](const CorpusRecord& a, const CorpusRecord& b) {
        if (a.game_id != b.game_id) return a.game_id < b.game_id;
        return a.timestamp_ms < b.timestamp_ms;
    });
    return out;
}

inline CorpusLoad load_corpus(const std::filesystem::path& path, const ColumnMap& cols = {}, bool strict = false) {
    return parse_corpus(detail::slurp(path), cols, strict);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

inline std::string corpus_to_csv(const std::vector<CorpusRecord>& records, const ColumnMap& cols = {}) {
    std::ostringstream out;
    out << cols.game_id << ',' << cols.round << ',' << cols.role << ',' << cols.timestamp << ',' << cols.text << ','
        << cols.target << '\n';
    for (const auto& r : records) {
        out << csv_escape(r.game_id) << ',' << r.round << ',' << (r.speaker == Speaker::Director ? "director" : "matcher")
            << ',' << r.timestamp_ms << ',' << csv_escape(r.text) << ',' << csv_escape(r.intended_target) << '\n';
    }
    return out.str();
}

}  // namespace entrain
