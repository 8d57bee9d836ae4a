#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "strainsim/error.hpp"
#include "strainsim/mutation.hpp"
#include "strainsim/trace.hpp"

namespace strainsim {

struct TransferRow {
    SimTime time = 0;
    std::string sender, receiver;
    std::string sender_class, receiver_class;
    std::uint64_t size_bytes = 0;
    double duration_s = 0;
    std::string outcome;
};

// Everything derived from one trace: a flat key/value document plus the
// structured series the CSV emitters need.
struct Summary {
    std::vector<std::pair<std::string, std::string>> kv;
    std::vector<std::pair<SimTime, int>> infection_curve;  // step points
    std::vector<TransferRow> transfers;
    std::map<std::string, FitnessMetrics> per_strain;  // strain hex -> fitness

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : kv)
            if (k == key) return &v;
        return nullptr;
    }
};

inline Summary metrics(const Trace& trace) {
    Summary out;

    std::set<std::string> infected;
    int installs_updated = 0, installs_side_by_side = 0, installs_rejected = 0,
        installs_incompatible = 0;
    int delivered = 0, blocked = 0, out_of_time = 0, corrupted = 0;
    double transfer_delivered_sum_s = 0;
    int builds = 0;
    double build_sum_s = 0;
    std::uint64_t cache_hits = 0, cache_misses = 0;
    int escape_count = 0;
    std::optional<double> first_escape_s;
    int total_devices = 0;
    SimTime end_time = 0;
    std::vector<std::string> strain_hexes;

    for (const auto& rec : trace.records) {
        end_time = std::max(end_time, rec.time);
        if (rec.kind == "install") {
            const std::string& outcome = rec.get("outcome");
            if (outcome == "updated") ++installs_updated;
            else if (outcome == "side_by_side") ++installs_side_by_side;
            else if (outcome == "rejected") ++installs_rejected;
            else if (outcome == "incompatible") ++installs_incompatible;
            if (outcome == "updated" || outcome == "side_by_side") {
                if (infected.insert(rec.get("device")).second)
                    out.infection_curve.emplace_back(rec.time, static_cast<int>(infected.size()));
            }
        } else if (rec.kind == "transfer_result") {
            TransferRow row;
            row.time = rec.time;
            row.sender = rec.get("sender");
            row.receiver = rec.get("receiver");
            row.sender_class = rec.get("sender_class");
            row.receiver_class = rec.get("receiver_class");
            row.size_bytes = rec.get_u64("size_bytes");
            row.duration_s = rec.get_double("duration_s");
            row.outcome = rec.get("outcome");
            if (row.outcome == "delivered") {
                ++delivered;
                transfer_delivered_sum_s += row.duration_s;
            } else if (row.outcome == "blocked")
                ++blocked;
            else if (row.outcome == "out_of_time")
                ++out_of_time;
            else if (row.outcome == "corrupted_delivered")
                ++corrupted;
            out.transfers.push_back(std::move(row));
        } else if (rec.kind == "build_end") {
            ++builds;
            build_sum_s += rec.get_double("total_s");
        } else if (rec.kind == "escape") {
            ++escape_count;
            if (!first_escape_s) first_escape_s = seconds_from_ms(rec.time);
        } else if (rec.kind == "device_final") {
            ++total_devices;
            cache_hits += rec.get_u64("cache_hits");
            cache_misses += rec.get_u64("cache_misses");
        } else if (rec.kind == "lineage") {
            strain_hexes.push_back(rec.get("strain"));
        }
    }

    for (const auto& hex : strain_hexes)
        out.per_strain.emplace(hex, fitness(trace, ContentHash::from_hex(hex), FitnessScope::strain_only));

    auto put = [&](const std::string& k, const std::string& v) { out.kv.emplace_back(k, v); };
    put("end_time_s", fmt_seconds(end_time));
    put("total_devices", std::to_string(total_devices));
    put("final_infected", std::to_string(infected.size()));
    put("installs_updated", std::to_string(installs_updated));
    put("installs_side_by_side", std::to_string(installs_side_by_side));
    put("installs_rejected", std::to_string(installs_rejected));
    put("installs_incompatible", std::to_string(installs_incompatible));
    put("transfers_delivered", std::to_string(delivered));
    put("transfers_blocked", std::to_string(blocked));
    put("transfers_out_of_time", std::to_string(out_of_time));
    put("transfers_corrupted", std::to_string(corrupted));
    put("blocked_count", std::to_string(blocked));
    put("mean_transfer_s",
        delivered > 0 ? fmt_double(transfer_delivered_sum_s / delivered) : "none");
    put("builds_total", std::to_string(builds));
    put("mean_build_s", builds > 0 ? fmt_double(build_sum_s / builds) : "none");
    put("cache_hits", std::to_string(cache_hits));
    put("cache_misses", std::to_string(cache_misses));
    put("cache_hit_ratio", (cache_hits + cache_misses) > 0
                               ? fmt_double(static_cast<double>(cache_hits) /
                                            static_cast<double>(cache_hits + cache_misses))
                               : "none");
    put("strains_total", std::to_string(strain_hexes.size()));
    put("escape_count", std::to_string(escape_count));
    put("first_escape_s", first_escape_s ? fmt_double(*first_escape_s) : "none");
    return out;
}

inline std::string summary_text(const Summary& s) {
    std::string out;
    for (const auto& [k, v] : s.kv) out += k + " = " + v + "\n";
    for (const auto& [hex, fit] : s.per_strain) {
        out += "strain." + hex.substr(0, 16) + ".devices_reached = " +
               std::to_string(fit.devices_reached) + "\n";
        out += "strain." + hex.substr(0, 16) + ".escape_s = " +
               (fit.escape_time_s ? fmt_double(*fit.escape_time_s) : std::string("none")) + "\n";
        out += "strain." + hex.substr(0, 16) + ".survived_blacklist = " +
               (fit.survived_blacklist ? "1" : "0") + "\n";
    }
    return out;
}

inline std::string infection_csv(const Summary& s) {
    std::string out = "time_s,infected\n";
    for (const auto& [t, n] : s.infection_curve)
        out += fmt_seconds(t) + "," + std::to_string(n) + "\n";
    return out;
}

inline std::string transfers_csv(const Summary& s) {
    std::string out =
        "time_s,sender,receiver,sender_class,receiver_class,size_bytes,duration_s,outcome\n";
    for (const auto& row : s.transfers) {
        out += fmt_seconds(row.time) + "," + row.sender + "," + row.receiver + "," +
               row.sender_class + "," + row.receiver_class + "," + std::to_string(row.size_bytes) +
               "," + fmt_double(row.duration_s) + "," + row.outcome + "\n";
    }
    return out;
}

struct AggregateRow {
    std::string metric;
    double mean = 0, min = 0, max = 0, p50 = 0;
};

// Cross-seed aggregation over the numeric summary keys; mirrors averaging
// repeated measurements of the same scenario.
inline std::vector<AggregateRow> aggregate_summaries(const std::vector<Summary>& runs) {
    if (runs.empty()) throw Error("no summaries to aggregate");
    std::vector<AggregateRow> out;
    for (const auto& [key, first_value] : runs.front().kv) {
        std::vector<double> values;
        bool numeric = true;
        for (const auto& run : runs) {
            const std::string* v = run.find(key);
            if (!v || *v == "none") {
                numeric = false;
                break;
            }
            try {
                std::size_t used = 0;
                values.push_back(std::stod(*v, &used));
                if (used != v->size()) numeric = false;
            } catch (...) {
                numeric = false;
            }
            if (!numeric) break;
        }
        if (!numeric || values.empty()) continue;
        std::sort(values.begin(), values.end());
        AggregateRow row;
        row.metric = key;
        row.min = values.front();
        row.max = values.back();
        row.p50 = values[(values.size() - 1) / 2];
        double sum = 0;
        for (double v : values) sum += v;
        row.mean = sum / static_cast<double>(values.size());
        out.push_back(row);
    }
    return out;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "metric,mean,min,max,p50\n";
    for (const auto& r : rows)
        out += r.metric + "," + fmt_double(r.mean) + "," + fmt_double(r.min) + "," +
               fmt_double(r.max) + "," + fmt_double(r.p50) + "\n";
    return out;
}

}  // namespace strainsim
