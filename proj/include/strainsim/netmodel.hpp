#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "strainsim/error.hpp"
#include "strainsim/model.hpp"

namespace strainsim {

// A region bounds proximity: devices can only beam to co-located peers.
// internet_up gates uplinks (and escape detection), never beaming.
struct Region {
    std::string region_id;
    bool internet_up = true;
    std::set<std::string> members;
};

using ClassPair = std::pair<std::string, std::string>;  // sender, receiver
using MeasuredTable = std::map<ClassPair, double>;      // measured seconds per pair

// Directional bytes-per-second per (sender class, receiver class). The
// measured table is asymmetric and stays that way.
struct RateMatrix {
    std::map<ClassPair, double> rates_bps;
    double handshake_seconds = 0.0;

    double rate_for(const std::string& sender, const std::string& receiver) const {
        auto it = rates_bps.find({sender, receiver});
        if (it == rates_bps.end()) throw UnknownPair(sender, receiver);
        return it->second;
    }
};

inline double transfer_duration_seconds(const RateMatrix& m, const std::string& sender_class,
                                        const std::string& receiver_class,
                                        std::uint64_t size_bytes) {
    return m.handshake_seconds +
           static_cast<double>(size_bytes) / m.rate_for(sender_class, receiver_class);
}

inline SimTime transfer_duration_ms(const RateMatrix& m, const std::string& sender_class,
                                    const std::string& receiver_class, std::uint64_t size_bytes) {
    return ms_from_seconds(transfer_duration_seconds(m, sender_class, receiver_class, size_bytes));
}

// Invert measured wall times into rates: rate = size / (measured - handshake).
// Round-trips by construction: transfer_duration reproduces the table.
inline RateMatrix calibrate_rates(const MeasuredTable& measured_seconds, std::uint64_t size_bytes,
                                  double handshake_seconds) {
    if (size_bytes == 0 && !measured_seconds.empty())
        throw Error("calibrate_rates: measurement size_bytes must be > 0");
    RateMatrix m;
    m.handshake_seconds = handshake_seconds;
    for (const auto& [pair, seconds] : measured_seconds) {
        if (seconds <= handshake_seconds) throw NonPositiveRate(pair.first, pair.second);
        m.rates_bps[pair] = static_cast<double>(size_bytes) / (seconds - handshake_seconds);
    }
    return m;
}

// Fill a missing same-class cell with the geometric mean of that class's row
// mean and column mean. Off-diagonal holes are left alone: they are config
// errors, not imputable.
inline MeasuredTable impute_diagonal_geomean(MeasuredTable table,
                                             const std::set<std::string>& classes) {
    for (const auto& cls : classes) {
        if (table.count({cls, cls})) continue;
        double row_sum = 0, col_sum = 0;
        int row_n = 0, col_n = 0;
        for (const auto& [pair, seconds] : table) {
            if (pair.first == cls) {
                row_sum += seconds;
                ++row_n;
            }
            if (pair.second == cls) {
                col_sum += seconds;
                ++col_n;
            }
        }
        if (row_n == 0 || col_n == 0) continue;  // nothing to impute from
        table[{cls, cls}] = std::sqrt((row_sum / row_n) * (col_sum / col_n));
    }
    return table;
}

// One proximity meeting: the pair is together for duration_available and a
// transfer either fits in that window or fails whole.
struct Encounter {
    SimTime time = 0;
    std::string a;
    std::string b;
    SimTime duration_available = 0;
};

enum class TransferResult { Delivered, OutOfTime, Blocked, CorruptedDelivered };

inline const char* to_string(TransferResult r) {
    switch (r) {
        case TransferResult::Delivered: return "delivered";
        case TransferResult::OutOfTime: return "out_of_time";
        case TransferResult::Blocked: return "blocked";
        case TransferResult::CorruptedDelivered: return "corrupted_delivered";
    }
    return "?";
}

// Region membership and uplink state for one run.
class NetState {
  public:
    void add_region(Region r) { regions_.emplace(r.region_id, std::move(r)); }

    Region& region(const std::string& id) {
        auto it = regions_.find(id);
        if (it == regions_.end()) throw UnknownRegion(id);
        return it->second;
    }

    const Region& region(const std::string& id) const {
        auto it = regions_.find(id);
        if (it == regions_.end()) throw UnknownRegion(id);
        return it->second;
    }

    // Kill switches cut uplinks only; device-to-device beaming is untouched.
    void kill_switch(const std::string& region_id, bool up) { region(region_id).internet_up = up; }

    bool uplink_check(const std::string& region_id) const { return region(region_id).internet_up; }

    void move_device(const std::string& device, const std::string& from, const std::string& to) {
        region(from).members.erase(device);
        region(to).members.insert(device);
    }

    const std::map<std::string, Region>& regions() const { return regions_; }

  private:
    std::map<std::string, Region> regions_;
};

}  // namespace strainsim
