#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "strainsim/adversary.hpp"
#include "strainsim/error.hpp"
#include "strainsim/model.hpp"
#include "strainsim/mutation.hpp"
#include "strainsim/netmodel.hpp"

namespace strainsim {

// Scenario text format: [section ...] headers with key = value lines.
// Grammar and semantics are documented in docs/scenario_format.md; the two
// shipped fixtures under scenarios/ double as reference examples.

struct ScenarioIssue {
    int line = 0;
    std::string message;
};

struct ClassConfig {
    DeviceClass cls;
    int line = 0;
};

struct DeviceConfig {
    std::string id;
    std::string class_name;
    std::string region;
    int api_level = 1;
    std::string cpu_arch;
    int line = 0;
};

struct RegionConfig {
    std::string id;
    bool internet_up = true;
    std::optional<double> encounter_mean_interval_s;  // enables the generator
    double encounter_window_s = 600.0;
    int line = 0;
};

struct RateRow {
    std::string from, to;
    double seconds = 0;
    int line = 0;
};

struct RatesConfig {
    std::string csv_path;  // relative to the scenario file
    std::vector<RateRow> rows;
    std::uint64_t size_bytes = 0;
    double handshake_seconds = 0.0;
    enum class Impute { none, geometric_mean } impute = Impute::none;
    int line = 0;
};

struct ContentEntry {
    std::string name;
    std::uint64_t size = 0;
    std::vector<std::string> refs;  // sources only
    int line = 0;
};

struct StrainConfig {
    std::string origin;
    std::string package_name = "app.strain";
    std::string display_name = "strain";
    std::string icon_id = "icon0";
    std::string cert_id = "debug";
    bool cert_is_debug = true;
    int min_api = 1;
    std::vector<std::pair<std::string, std::string>> manifest;
    std::vector<ContentEntry> sources, resources, assets, libraries;
    std::set<std::string> traits;
    bool carries_build_tools = true;
    bool carries_libraries_source = false;
    bool prebuilt = true;  // origin starts with the package installed at t=0
    int line = 0;
};

struct MutationConfig {
    enum class Policy { none, every_k_transfers, on_block } policy = Policy::none;
    std::uint32_t k = 1;
    std::vector<MutationOp::Kind> ops = {MutationOp::Kind::RenameDisplay};
    int line = 0;
};

struct AdversaryScenarioConfig {
    AdversaryConfig base;
    std::optional<double> blacklist_initial_strain_at_s;
    std::vector<std::string> blacklist_certs;  // seeded at t=0
    int line = 0;
};

struct EncounterConfig {
    double time_s = 0;
    std::string from, to;
    double window_s = 0;
    int line = 0;
};

struct TimedDeviceCmd {
    double time_s = 0;
    std::string device;
    std::string arg;  // move: target region
    int line = 0;
};

struct KillSwitchConfig {
    double time_s = 0;
    std::string region;
    bool up = false;
    int line = 0;
};

struct Scenario {
    std::string name = "unnamed";
    std::optional<double> stop_time_s;
    std::uint64_t base_package_bytes = 0;
    int api_max_offset = 2;
    bool rebuild_on_receive = true;
    std::set<std::string> arch_set = {"arm64", "armv7", "x86"};

    std::map<std::string, ClassConfig> classes;
    std::map<std::string, DeviceConfig> devices;
    std::map<std::string, RegionConfig> regions;
    RatesConfig rates;
    StrainConfig strain;
    MutationConfig mutation;
    AdversaryScenarioConfig adversary;

    std::vector<EncounterConfig> encounters;
    std::vector<TimedDeviceCmd> moves;
    std::vector<KillSwitchConfig> kill_switches;
    std::vector<TimedDeviceCmd> compromises;
    std::vector<TimedDeviceCmd> builds;      // scripted rebuild of current genome
    std::vector<TimedDeviceCmd> uplink_probes;
    std::vector<TimedDeviceCmd> replays;     // device = target receiver

    std::string scenario_hash;  // hex over scenario text + rate csv
};

namespace detail {

inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '.' || c == '-';
        if (!ok) return false;
    }
    return true;
}

inline double parse_num(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError("trailing junk in number: " + s, line);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (...) {
        throw ParseError("expected a number, got: " + s, line);
    }
}

inline std::uint64_t parse_u64(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw ParseError("trailing junk in number: " + s, line);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (...) {
        throw ParseError("expected an unsigned integer, got: " + s, line);
    }
}

inline bool parse_bool(const std::string& s, int line) {
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ParseError("expected a boolean, got: " + s, line);
}

// "name size=123 refs=a,b" -> ContentEntry
inline ContentEntry parse_content_entry(const std::string& value, int line) {
    auto words = split_ws(value);
    if (words.empty()) throw ParseError("content entry needs a name", line);
    ContentEntry entry;
    entry.name = words[0];
    entry.line = line;
    for (std::size_t i = 1; i < words.size(); ++i) {
        auto eq = words[i].find('=');
        if (eq == std::string::npos) throw ParseError("expected attr=value: " + words[i], line);
        std::string key = words[i].substr(0, eq), val = words[i].substr(eq + 1);
        if (key == "size")
            entry.size = parse_u64(val, line);
        else if (key == "refs")
            entry.refs = split_on(val, ',');
        else
            throw ParseError("unknown content attribute: " + key, line);
    }
    return entry;
}

inline MutationOp::Kind parse_op_kind(const std::string& s, int line) {
    if (s == "rename_display") return MutationOp::Kind::RenameDisplay;
    if (s == "rename_package") return MutationOp::Kind::RenamePackage;
    if (s == "swap_icon") return MutationOp::Kind::SwapIcon;
    if (s == "add_trait") return MutationOp::Kind::AddTrait;
    throw ParseError("unsupported mutation op in scenario config: " + s, line);
}

inline BuildStage parse_stage(const std::string& s, int line) {
    for (BuildStage st : kAllStages)
        if (s == stage_name(st)) return st;
    throw ParseError("unknown build stage: " + s, line);
}

}  // namespace detail

inline Scenario parse_scenario(std::istream& in) {
    using namespace detail;
    Scenario sc;

    std::string section;            // section kind
    std::vector<std::string> args;  // section args
    std::string line;
    int line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no);
            auto words = split_ws(line.substr(1, line.size() - 2));
            if (words.empty()) throw ParseError("empty section header", line_no);
            section = words[0];
            args.assign(words.begin() + 1, words.end());

            if (section == "class") {
                if (args.size() != 1) throw ParseError("[class] needs exactly one name", line_no);
                auto [it, fresh] = sc.classes.emplace(args[0], ClassConfig{});
                if (!fresh) throw ParseError("duplicate class: " + args[0], line_no);
                it->second.cls.class_name = args[0];
                it->second.line = line_no;
            } else if (section == "device") {
                if (args.size() != 1) throw ParseError("[device] needs exactly one id", line_no);
                auto [it, fresh] = sc.devices.emplace(args[0], DeviceConfig{});
                if (!fresh) throw ParseError("duplicate device: " + args[0], line_no);
                it->second.id = args[0];
                it->second.line = line_no;
            } else if (section == "region") {
                if (args.size() != 1) throw ParseError("[region] needs exactly one id", line_no);
                auto [it, fresh] = sc.regions.emplace(args[0], RegionConfig{});
                if (!fresh) throw ParseError("duplicate region: " + args[0], line_no);
                it->second.id = args[0];
                it->second.line = line_no;
            } else if (section == "encounter") {
                sc.encounters.push_back({});
                sc.encounters.back().line = line_no;
            } else if (section == "move") {
                sc.moves.push_back({});
                sc.moves.back().line = line_no;
            } else if (section == "killswitch") {
                sc.kill_switches.push_back({});
                sc.kill_switches.back().line = line_no;
            } else if (section == "compromise") {
                sc.compromises.push_back({});
                sc.compromises.back().line = line_no;
            } else if (section == "build") {
                sc.builds.push_back({});
                sc.builds.back().line = line_no;
            } else if (section == "uplink_probe") {
                sc.uplink_probes.push_back({});
                sc.uplink_probes.back().line = line_no;
            } else if (section == "replay") {
                sc.replays.push_back({});
                sc.replays.back().line = line_no;
            } else if (section == "scenario" || section == "rates" || section == "strain" ||
                       section == "mutation" || section == "adversary") {
                if (section == "rates") sc.rates.line = line_no;
                if (section == "strain") sc.strain.line = line_no;
                if (section == "mutation") sc.mutation.line = line_no;
                if (section == "adversary") sc.adversary.line = line_no;
            } else {
                throw ParseError("unknown section: [" + section + "]", line_no);
            }
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ParseError("expected key = value", line_no);
        if (section.empty()) throw ParseError("key outside any section: " + key, line_no);

        if (section == "scenario") {
            if (key == "name")
                sc.name = value;
            else if (key == "stop_time")
                sc.stop_time_s = parse_num(value, line_no);
            else if (key == "base_package_bytes")
                sc.base_package_bytes = parse_u64(value, line_no);
            else if (key == "api_max_offset")
                sc.api_max_offset = static_cast<int>(parse_u64(value, line_no));
            else if (key == "rebuild_on_receive")
                sc.rebuild_on_receive = parse_bool(value, line_no);
            else if (key == "arch_set") {
                sc.arch_set.clear();
                for (auto& a : split_on(value, ',')) sc.arch_set.insert(a);
            } else
                throw ParseError("unknown [scenario] key: " + key, line_no);
        } else if (section == "class") {
            ClassConfig& cc = sc.classes.at(args[0]);
            if (key == "heat_per_build")
                cc.cls.thermal.heat_per_build = parse_num(value, line_no);
            else if (key == "cool_rate")
                cc.cls.thermal.cool_rate = parse_num(value, line_no);
            else if (key == "throttle_threshold")
                cc.cls.thermal.throttle_threshold = parse_num(value, line_no);
            else if (key == "throttle_factor")
                cc.cls.thermal.throttle_factor = parse_num(value, line_no);
            else
                cc.cls.base_stage_costs[parse_stage(key, line_no)] = parse_num(value, line_no);
        } else if (section == "device") {
            DeviceConfig& dc = sc.devices.at(args[0]);
            if (key == "class")
                dc.class_name = value;
            else if (key == "region")
                dc.region = value;
            else if (key == "api_level")
                dc.api_level = static_cast<int>(parse_u64(value, line_no));
            else if (key == "cpu_arch")
                dc.cpu_arch = value;
            else
                throw ParseError("unknown [device] key: " + key, line_no);
        } else if (section == "region") {
            RegionConfig& rc = sc.regions.at(args[0]);
            if (key == "internet") {
                if (value == "up")
                    rc.internet_up = true;
                else if (value == "down")
                    rc.internet_up = false;
                else
                    throw ParseError("internet must be up or down", line_no);
            } else if (key == "encounter_mean_interval")
                rc.encounter_mean_interval_s = parse_num(value, line_no);
            else if (key == "encounter_window")
                rc.encounter_window_s = parse_num(value, line_no);
            else
                throw ParseError("unknown [region] key: " + key, line_no);
        } else if (section == "rates") {
            if (key == "csv")
                sc.rates.csv_path = value;
            else if (key == "size_bytes")
                sc.rates.size_bytes = parse_u64(value, line_no);
            else if (key == "handshake_seconds")
                sc.rates.handshake_seconds = parse_num(value, line_no);
            else if (key == "impute_missing") {
                if (value == "none")
                    sc.rates.impute = RatesConfig::Impute::none;
                else if (value == "geometric_mean")
                    sc.rates.impute = RatesConfig::Impute::geometric_mean;
                else
                    throw ParseError("impute_missing must be none or geometric_mean", line_no);
            } else if (key == "rate") {
                auto words = split_ws(value);
                if (words.size() != 3) throw ParseError("rate = FROM TO SECONDS", line_no);
                sc.rates.rows.push_back({words[0], words[1], parse_num(words[2], line_no), line_no});
            } else
                throw ParseError("unknown [rates] key: " + key, line_no);
        } else if (section == "strain") {
            StrainConfig& st = sc.strain;
            if (key == "origin")
                st.origin = value;
            else if (key == "package_name")
                st.package_name = value;
            else if (key == "display_name")
                st.display_name = value;
            else if (key == "icon")
                st.icon_id = value;
            else if (key == "cert")
                st.cert_id = value;
            else if (key == "cert_is_debug")
                st.cert_is_debug = parse_bool(value, line_no);
            else if (key == "min_api")
                st.min_api = static_cast<int>(parse_u64(value, line_no));
            else if (key == "manifest") {
                auto words = split_ws(value);
                if (words.size() != 2) throw ParseError("manifest = KEY VALUE", line_no);
                st.manifest.emplace_back(words[0], words[1]);
            } else if (key == "source")
                st.sources.push_back(detail::parse_content_entry(value, line_no));
            else if (key == "resource")
                st.resources.push_back(detail::parse_content_entry(value, line_no));
            else if (key == "asset")
                st.assets.push_back(detail::parse_content_entry(value, line_no));
            else if (key == "library")
                st.libraries.push_back(detail::parse_content_entry(value, line_no));
            else if (key == "trait")
                st.traits.insert(value);
            else if (key == "carries_build_tools")
                st.carries_build_tools = parse_bool(value, line_no);
            else if (key == "carries_libraries_source")
                st.carries_libraries_source = parse_bool(value, line_no);
            else if (key == "prebuilt")
                st.prebuilt = parse_bool(value, line_no);
            else
                throw ParseError("unknown [strain] key: " + key, line_no);
        } else if (section == "mutation") {
            if (key == "policy") {
                if (value == "none")
                    sc.mutation.policy = MutationConfig::Policy::none;
                else if (value == "every_k_transfers")
                    sc.mutation.policy = MutationConfig::Policy::every_k_transfers;
                else if (value == "on_block")
                    sc.mutation.policy = MutationConfig::Policy::on_block;
                else
                    throw ParseError("unknown mutation policy: " + value, line_no);
            } else if (key == "k")
                sc.mutation.k = static_cast<std::uint32_t>(parse_u64(value, line_no));
            else if (key == "op") {
                sc.mutation.ops.clear();
                for (auto& o : split_on(value, ','))
                    sc.mutation.ops.push_back(detail::parse_op_kind(o, line_no));
            } else
                throw ParseError("unknown [mutation] key: " + key, line_no);
        } else if (section == "adversary") {
            AdversaryScenarioConfig& ad = sc.adversary;
            if (key == "monitor") {
                auto words = split_ws(value);
                if (words[0] == "internet_only")
                    ad.base.monitor = MonitorPolicy::internet_only;
                else if (words[0] == "all") {
                    ad.base.monitor = MonitorPolicy::all_links;
                    if (words.size() > 1) ad.base.observe_probability = parse_num(words[1], line_no);
                } else
                    throw ParseError("monitor must be internet_only or all [p]", line_no);
            } else if (key == "modify_probability")
                ad.base.modify_probability = parse_num(value, line_no);
            else if (key == "delay_probability")
                ad.base.delay_probability = parse_num(value, line_no);
            else if (key == "delay_extra_seconds")
                ad.base.delay_extra_seconds = parse_num(value, line_no);
            else if (key == "compromise_budget")
                ad.base.compromise_budget = static_cast<std::uint32_t>(parse_u64(value, line_no));
            else if (key == "blacklist_compromised_hashes")
                ad.base.blacklist_compromised_hashes = parse_bool(value, line_no);
            else if (key == "blacklist_compromised_certs")
                ad.base.blacklist_compromised_certs = parse_bool(value, line_no);
            else if (key == "blacklist_initial_strain_at")
                ad.blacklist_initial_strain_at_s = parse_num(value, line_no);
            else if (key == "blacklist_cert")
                ad.blacklist_certs.push_back(value);
            else
                throw ParseError("unknown [adversary] key: " + key, line_no);
        } else if (section == "encounter") {
            EncounterConfig& ec = sc.encounters.back();
            if (key == "time")
                ec.time_s = parse_num(value, line_no);
            else if (key == "from")
                ec.from = value;
            else if (key == "to")
                ec.to = value;
            else if (key == "window")
                ec.window_s = parse_num(value, line_no);
            else
                throw ParseError("unknown [encounter] key: " + key, line_no);
        } else if (section == "move") {
            TimedDeviceCmd& mv = sc.moves.back();
            if (key == "time")
                mv.time_s = parse_num(value, line_no);
            else if (key == "device")
                mv.device = value;
            else if (key == "region")
                mv.arg = value;
            else
                throw ParseError("unknown [move] key: " + key, line_no);
        } else if (section == "killswitch") {
            KillSwitchConfig& ks = sc.kill_switches.back();
            if (key == "time")
                ks.time_s = parse_num(value, line_no);
            else if (key == "region")
                ks.region = value;
            else if (key == "internet") {
                if (value != "up" && value != "down")
                    throw ParseError("internet must be up or down", line_no);
                ks.up = (value == "up");
            } else
                throw ParseError("unknown [killswitch] key: " + key, line_no);
        } else if (section == "compromise" || section == "build" || section == "uplink_probe" ||
                   section == "replay") {
            auto& list = section == "compromise" ? sc.compromises
                         : section == "build"    ? sc.builds
                         : section == "replay"   ? sc.replays
                                                 : sc.uplink_probes;
            TimedDeviceCmd& cmd = list.back();
            if (key == "time")
                cmd.time_s = parse_num(value, line_no);
            else if (key == "device" || key == "receiver")
                cmd.device = value;
            else
                throw ParseError("unknown [" + section + "] key: " + key, line_no);
        } else {
            throw ParseError("key in unexpected section: " + key, line_no);
        }
    }
    return sc;
}

// Measured-seconds table from inline rows plus optional imputation.
inline MeasuredTable measured_table(const Scenario& sc) {
    MeasuredTable table;
    for (const auto& row : sc.rates.rows) table[{row.from, row.to}] = row.seconds;
    if (sc.rates.impute == RatesConfig::Impute::geometric_mean) {
        std::set<std::string> classes;
        for (const auto& [name, cc] : sc.classes) classes.insert(name);
        table = impute_diagonal_geomean(std::move(table), classes);
    }
    return table;
}

inline RateMatrix build_rate_matrix(const Scenario& sc) {
    return calibrate_rates(measured_table(sc), sc.rates.size_bytes, sc.rates.handshake_seconds);
}

inline Genome make_initial_genome(const StrainConfig& st) {
    GenomeDraft draft;
    draft.package_name = st.package_name;
    draft.display_name = st.display_name;
    draft.icon_id = st.icon_id;
    draft.manifest = st.manifest;
    draft.manifest.emplace_back("min_api", std::to_string(st.min_api));
    for (const auto& e : st.sources)
        draft.sources.push_back({e.name, SourceUnit{synthetic_bytes("src:" + e.name, e.size), e.refs}});
    for (const auto& e : st.resources)
        draft.resources.push_back({e.name, synthetic_bytes("res:" + e.name, e.size)});
    for (const auto& e : st.assets)
        draft.assets.push_back({e.name, synthetic_bytes("asset:" + e.name, e.size)});
    for (const auto& e : st.libraries)
        draft.libraries.push_back({e.name, synthetic_bytes("lib:" + e.name, e.size)});
    draft.traits = st.traits;
    draft.carries_build_tools = st.carries_build_tools;
    draft.carries_libraries_source = st.carries_libraries_source;
    return make_genome(std::move(draft));
}

// Every resolution and constraint failure, with the offending line. An empty
// result means the scenario is runnable.
inline std::vector<ScenarioIssue> validate(const Scenario& sc) {
    using detail::valid_identifier;
    std::vector<ScenarioIssue> issues;
    auto bad = [&](int line, std::string msg) { issues.push_back({line, std::move(msg)}); };

    if (!valid_identifier(sc.name)) bad(0, "scenario name must be an identifier");

    for (const auto& [name, cc] : sc.classes) {
        if (!valid_identifier(name)) bad(cc.line, "bad class name: " + name);
        for (BuildStage st : kAllStages) {
            auto it = cc.cls.base_stage_costs.find(st);
            if (it == cc.cls.base_stage_costs.end())
                bad(cc.line, "class " + name + " missing stage cost: " + stage_name(st));
            else if (it->second <= 0)
                bad(cc.line, "class " + name + " stage cost must be > 0: " + stage_name(st));
        }
        const ThermalParams& t = cc.cls.thermal;
        if (t.heat_per_build <= 0) bad(cc.line, "class " + name + ": heat_per_build must be > 0");
        if (t.cool_rate <= 0) bad(cc.line, "class " + name + ": cool_rate must be > 0");
        if (t.throttle_threshold <= 0)
            bad(cc.line, "class " + name + ": throttle_threshold must be > 0");
        if (t.throttle_factor < 1.0) bad(cc.line, "class " + name + ": throttle_factor must be >= 1");
    }

    for (const auto& [id, rc] : sc.regions) {
        if (!valid_identifier(id)) bad(rc.line, "bad region id: " + id);
        if (rc.encounter_mean_interval_s && *rc.encounter_mean_interval_s <= 0)
            bad(rc.line, "region " + id + ": encounter_mean_interval must be > 0");
        if (rc.encounter_window_s <= 0) bad(rc.line, "region " + id + ": encounter_window must be > 0");
    }

    for (const auto& [id, dc] : sc.devices) {
        if (!valid_identifier(id)) bad(dc.line, "bad device id: " + id);
        if (!sc.classes.count(dc.class_name))
            bad(dc.line, "device " + id + " references unknown class: " + dc.class_name);
        if (!sc.regions.count(dc.region))
            bad(dc.line, "device " + id + " references unknown region: " + dc.region);
        if (dc.api_level < 1) bad(dc.line, "device " + id + ": api_level must be >= 1");
        if (!sc.arch_set.count(dc.cpu_arch))
            bad(dc.line, "device " + id + ": cpu_arch not in arch_set: " + dc.cpu_arch);
    }

    if (sc.devices.empty()) bad(0, "scenario has no devices");
    if (sc.strain.origin.empty())
        bad(sc.strain.line, "[strain] origin is required");
    else if (!sc.devices.count(sc.strain.origin))
        bad(sc.strain.line, "strain origin references unknown device: " + sc.strain.origin);
    if (!valid_identifier(sc.strain.package_name))
        bad(sc.strain.line, "bad package_name: " + sc.strain.package_name);
    if (sc.strain.min_api < 1) bad(sc.strain.line, "strain min_api must be >= 1");
    auto check_entries = [&](const std::vector<ContentEntry>& entries, const char* what) {
        std::set<std::string> seen;
        for (const auto& e : entries) {
            if (!valid_identifier(e.name)) bad(e.line, std::string("bad ") + what + " name: " + e.name);
            if (!seen.insert(e.name).second)
                bad(e.line, std::string("duplicate ") + what + " name: " + e.name);
        }
    };
    check_entries(sc.strain.sources, "source");
    check_entries(sc.strain.resources, "resource");
    check_entries(sc.strain.assets, "asset");
    check_entries(sc.strain.libraries, "library");
    {
        std::set<std::string> resource_names;
        for (const auto& e : sc.strain.resources) resource_names.insert(e.name);
        for (const auto& e : sc.strain.sources)
            for (const auto& ref : e.refs)
                if (!resource_names.count(ref))
                    bad(e.line, "source " + e.name + " references unknown resource: " + ref);
    }

    if (sc.rates.size_bytes == 0) bad(sc.rates.line, "[rates] size_bytes must be > 0");
    if (sc.rates.handshake_seconds < 0) bad(sc.rates.line, "handshake_seconds must be >= 0");
    MeasuredTable table;
    for (const auto& row : sc.rates.rows) {
        if (row.seconds <= sc.rates.handshake_seconds)
            bad(row.line, "measured seconds must exceed handshake for " + row.from + " -> " + row.to);
        if (!table.emplace(ClassPair{row.from, row.to}, row.seconds).second)
            bad(row.line, "duplicate rate row for " + row.from + " -> " + row.to);
    }
    table = measured_table(sc);

    auto class_of = [&](const std::string& dev) -> const std::string* {
        auto it = sc.devices.find(dev);
        return it == sc.devices.end() ? nullptr : &it->second.class_name;
    };
    auto require_pair = [&](const std::string& from, const std::string& to, int line) {
        const std::string* cf = class_of(from);
        const std::string* ct = class_of(to);
        if (cf && ct && !table.count({*cf, *ct}))
            bad(line, "rate table missing pair " + *cf + " -> " + *ct);
    };

    for (const auto& ec : sc.encounters) {
        if (!sc.devices.count(ec.from)) bad(ec.line, "encounter from unknown device: " + ec.from);
        if (!sc.devices.count(ec.to)) bad(ec.line, "encounter to unknown device: " + ec.to);
        if (ec.from == ec.to) bad(ec.line, "encounter endpoints must differ");
        if (ec.window_s <= 0) bad(ec.line, "encounter window must be > 0");
        if (ec.time_s < 0) bad(ec.line, "encounter time must be >= 0");
        if (!ec.from.empty() && !ec.to.empty()) require_pair(ec.from, ec.to, ec.line);
    }

    bool any_generator = false;
    for (const auto& [id, rc] : sc.regions) any_generator |= rc.encounter_mean_interval_s.has_value();
    if (any_generator) {
        if (!sc.stop_time_s)
            bad(0, "scenario uses encounter generators but sets no stop_time");
        std::set<std::string> used_classes;
        for (const auto& [id, dc] : sc.devices)
            if (sc.classes.count(dc.class_name)) used_classes.insert(dc.class_name);
        for (const auto& a : used_classes)
            for (const auto& b : used_classes)
                if (!table.count({a, b})) bad(sc.rates.line, "rate table missing pair " + a + " -> " + b);
    }
    if (sc.stop_time_s && *sc.stop_time_s <= 0) bad(0, "stop_time must be > 0");

    const AdversaryConfig& ad = sc.adversary.base;
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob_ok(ad.observe_probability)) bad(sc.adversary.line, "observe probability must be in [0,1]");
    if (!prob_ok(ad.modify_probability)) bad(sc.adversary.line, "modify_probability must be in [0,1]");
    if (!prob_ok(ad.delay_probability)) bad(sc.adversary.line, "delay_probability must be in [0,1]");
    if (ad.delay_extra_seconds < 0) bad(sc.adversary.line, "delay_extra_seconds must be >= 0");
    if (sc.adversary.blacklist_initial_strain_at_s && *sc.adversary.blacklist_initial_strain_at_s < 0)
        bad(sc.adversary.line, "blacklist_initial_strain_at must be >= 0");

    if (sc.mutation.policy == MutationConfig::Policy::every_k_transfers && sc.mutation.k < 1)
        bad(sc.mutation.line, "mutation k must be >= 1");

    for (const auto& mv : sc.moves) {
        if (!sc.devices.count(mv.device)) bad(mv.line, "move of unknown device: " + mv.device);
        if (!sc.regions.count(mv.arg)) bad(mv.line, "move to unknown region: " + mv.arg);
    }
    for (const auto& ks : sc.kill_switches)
        if (!sc.regions.count(ks.region)) bad(ks.line, "killswitch for unknown region: " + ks.region);
    for (const auto& cmd : sc.compromises)
        if (!sc.devices.count(cmd.device)) bad(cmd.line, "compromise of unknown device: " + cmd.device);
    for (const auto& cmd : sc.builds)
        if (!sc.devices.count(cmd.device)) bad(cmd.line, "build on unknown device: " + cmd.device);
    for (const auto& cmd : sc.uplink_probes)
        if (!sc.devices.count(cmd.device)) bad(cmd.line, "uplink_probe on unknown device: " + cmd.device);
    for (const auto& cmd : sc.replays)
        if (!sc.devices.count(cmd.device)) bad(cmd.line, "replay to unknown device: " + cmd.device);

    return issues;
}

// Loads a scenario plus its referenced rate CSV; the scenario hash covers
// both files so trace identity tracks every byte of input.
inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    const std::string text = buf.str();

    std::istringstream in(text);
    Scenario sc = parse_scenario(in);

    std::string csv_text;
    if (!sc.rates.csv_path.empty()) {
        std::string dir;
        if (auto slash = path.find_last_of('/'); slash != std::string::npos)
            dir = path.substr(0, slash + 1);
        const std::string csv_full = dir + sc.rates.csv_path;
        std::ifstream csv(csv_full, std::ios::binary);
        if (!csv) throw Error("cannot open rate table: " + csv_full);
        std::ostringstream csv_buf;
        csv_buf << csv.rdbuf();
        csv_text = csv_buf.str();

        std::istringstream rows(csv_text);
        std::string line;
        int line_no = 0;
        while (std::getline(rows, line)) {
            ++line_no;
            line = detail::trim(line);
            if (line.empty() || line[0] == '#') continue;
            auto cells = detail::split_on(line, ',');
            if (cells.size() != 3)
                throw ParseError("rate csv row needs: sender_class,receiver_class,seconds", line_no);
            if (line_no == 1 && cells[0] == "sender_class") continue;  // header row
            sc.rates.rows.push_back(
                {cells[0], cells[1], detail::parse_num(cells[2], line_no), line_no});
        }
    }

    CanonicalWriter w;
    w.tag("scenario_inputs");
    w.str(text);
    w.str(csv_text);
    sc.scenario_hash = w.finish().hex();
    return sc;
}

}  // namespace strainsim
