#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "strainsim/error.hpp"
#include "strainsim/model.hpp"

namespace strainsim {

inline std::string fmt_seconds(SimTime t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", seconds_from_ms(t));
    return buf;
}

inline std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// One event line: kind, time, tie-break seq, then kind-specific fields in a
// fixed order so serialized traces are byte-stable and diff cleanly.
struct TraceRecord {
    SimTime time = 0;
    std::uint64_t seq = 0;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;

    const std::string* find(std::string_view key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return &v;
        return nullptr;
    }

    const std::string& get(std::string_view key) const {
        if (const std::string* v = find(key)) return *v;
        throw Error("trace record '" + kind + "' missing field: " + std::string(key));
    }

    double get_double(std::string_view key) const { return std::stod(get(key)); }
    std::uint64_t get_u64(std::string_view key) const { return std::stoull(get(key)); }
};

// Totally ordered event log of one run; replayable and diffable. The header
// carries the run inputs (seed, scenario identity), never wall-clock data.
struct Trace {
    std::uint64_t seed = 0;
    std::string scenario_name;
    std::string scenario_hash;  // hex digest of the scenario inputs
    std::vector<TraceRecord> records;
};

inline std::string serialize_trace(const Trace& trace) {
    std::string out;
    out += "ev=run_header seed=" + std::to_string(trace.seed) + " scenario=" + trace.scenario_name +
           " scenario_hash=" + trace.scenario_hash + "\n";
    for (const auto& rec : trace.records) {
        out += "ev=" + rec.kind + " t=" + fmt_seconds(rec.time) + " seq=" + std::to_string(rec.seq);
        for (const auto& [k, v] : rec.fields) {
            out += ' ';
            out += k;
            out += '=';
            out += v;
        }
        out += '\n';
    }
    return out;
}

inline Trace parse_trace(std::istream& in) {
    Trace trace;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream words(line);
        std::string word;
        TraceRecord rec;
        while (words >> word) {
            auto eq = word.find('=');
            if (eq == std::string::npos) throw ParseError("malformed trace token: " + word, line_no);
            std::string key = word.substr(0, eq);
            std::string value = word.substr(eq + 1);
            if (key == "ev")
                rec.kind = value;
            else if (key == "t")
                rec.time = ms_from_seconds(std::stod(value));
            else if (key == "seq")
                rec.seq = std::stoull(value);
            else
                rec.fields.emplace_back(std::move(key), std::move(value));
        }
        if (rec.kind.empty()) throw ParseError("trace line missing ev=", line_no);
        if (rec.kind == "run_header") {
            trace.seed = rec.get_u64("seed");
            trace.scenario_name = rec.get("scenario");
            trace.scenario_hash = rec.get("scenario_hash");
            have_header = true;
            continue;
        }
        trace.records.push_back(std::move(rec));
    }
    if (!have_header) throw ParseError("trace has no run_header line", line_no);
    return trace;
}

}  // namespace strainsim
