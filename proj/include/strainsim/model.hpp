#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "strainsim/error.hpp"
#include "strainsim/hash.hpp"

namespace strainsim {

// Simulation time in fixed-point milliseconds.
using SimTime = std::int64_t;

inline SimTime ms_from_seconds(double s) {
    return static_cast<SimTime>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5));
}
inline double seconds_from_ms(SimTime t) { return static_cast<double>(t) / 1000.0; }

struct PlatformSpec {
    int api_level = 1;
    std::string cpu_arch;

    bool operator==(const PlatformSpec&) const = default;
};

inline void write_canonical(CanonicalWriter& w, const PlatformSpec& p) {
    w.tag("platform");
    w.u64(static_cast<std::uint64_t>(p.api_level));
    w.str(p.cpu_arch);
}

struct Certificate {
    std::string cert_id;
    bool is_debug = false;

    bool operator==(const Certificate&) const = default;
};

// One compilable unit: opaque content plus the resource names it claims to
// reference (declared up front so reference checking needs no parsing).
struct SourceUnit {
    Bytes content;
    std::vector<std::string> resource_refs;

    bool operator==(const SourceUnit&) const = default;
};

inline void write_canonical(CanonicalWriter& w, const SourceUnit& u) {
    w.blob(u.content);
    write_canonical(w, u.resource_refs);
}

using StrainId = ContentHash;

// The app's self-description: everything needed to rebuild it anywhere.
// Embedded in every built package, which is what makes replication closed.
struct Genome {
    std::string package_name;
    std::string display_name;
    std::string icon_id;
    std::map<std::string, std::string> manifest;
    std::map<std::string, SourceUnit> sources;
    std::map<std::string, Bytes> resources;
    std::map<std::string, Bytes> assets;
    std::map<std::string, Bytes> libraries;
    std::set<std::string> traits;
    bool carries_build_tools = false;
    bool carries_libraries_source = false;
    std::uint32_t generation = 0;
    StrainId strain_id{};
    std::optional<StrainId> parent_strain;
};

// Strain identity is the hash of genome content; lineage fields excluded so
// the id is derivable before the node is linked into a tree.
inline StrainId derive_strain_id(const Genome& g) {
    CanonicalWriter w;
    w.tag("genome");
    w.str(g.package_name);
    w.str(g.display_name);
    w.str(g.icon_id);
    write_canonical(w, g.manifest);
    write_canonical(w, g.sources);
    write_canonical(w, g.resources);
    write_canonical(w, g.assets);
    write_canonical(w, g.libraries);
    write_canonical(w, g.traits);
    w.boolean(g.carries_build_tools);
    w.boolean(g.carries_libraries_source);
    w.u64(g.generation);
    return w.finish();
}

namespace detail {
template <class V>
std::map<std::string, V> unique_map(std::vector<std::pair<std::string, V>> entries) {
    std::map<std::string, V> out;
    for (auto& [name, value] : entries) {
        if (!out.emplace(name, std::move(value)).second) throw DuplicateResource(name);
    }
    return out;
}
}  // namespace detail

// Build inputs before dedup/validation; name clashes are rejected here, at
// construction, not discovered later in the pipeline.
struct GenomeDraft {
    std::string package_name;
    std::string display_name;
    std::string icon_id;
    std::vector<std::pair<std::string, std::string>> manifest;
    std::vector<std::pair<std::string, SourceUnit>> sources;
    std::vector<std::pair<std::string, Bytes>> resources;
    std::vector<std::pair<std::string, Bytes>> assets;
    std::vector<std::pair<std::string, Bytes>> libraries;
    std::set<std::string> traits;
    bool carries_build_tools = false;
    bool carries_libraries_source = false;
};

inline Genome make_genome(GenomeDraft draft) {
    if (draft.package_name.empty()) throw Error("genome package_name must be non-empty");
    Genome g;
    g.package_name = std::move(draft.package_name);
    g.display_name = std::move(draft.display_name);
    g.icon_id = std::move(draft.icon_id);
    g.manifest = detail::unique_map(std::move(draft.manifest));
    g.sources = detail::unique_map(std::move(draft.sources));
    g.resources = detail::unique_map(std::move(draft.resources));
    g.assets = detail::unique_map(std::move(draft.assets));
    g.libraries = detail::unique_map(std::move(draft.libraries));
    g.traits = std::move(draft.traits);
    g.carries_build_tools = draft.carries_build_tools;
    g.carries_libraries_source = draft.carries_libraries_source;
    g.generation = 0;
    g.strain_id = derive_strain_id(g);
    return g;
}

// Lowest API the genome claims to build for; manifest key, defaults to 1.
inline int genome_min_api(const Genome& g) {
    auto it = g.manifest.find("min_api");
    if (it == g.manifest.end()) return 1;
    return std::stoi(it->second);
}

// Raw content volume in bytes (manifest text, sources, resources, assets,
// libraries); the package size model counts this once compiled and once as
// the embedded genome copy.
inline std::uint64_t genome_content_bytes(const Genome& g) {
    std::uint64_t total = 0;
    for (const auto& [k, v] : g.manifest) total += k.size() + v.size();
    for (const auto& [k, v] : g.sources) total += v.content.size();
    for (const auto& [k, v] : g.resources) total += v.size();
    for (const auto& [k, v] : g.assets) total += v.size();
    for (const auto& [k, v] : g.libraries) total += v.size();
    return total;
}

struct SignedPackage {
    std::string package_name;
    ContentHash content_hash{};
    Certificate cert;
    PlatformSpec built_for;
    std::shared_ptr<const Genome> embedded_genome;  // null for stripped packages
    std::uint64_t size_bytes = 0;
    bool corrupted = false;  // set only by in-flight modification
    ContentHash signature{};
};

inline ContentHash package_signature(const ContentHash& content_hash, const std::string& cert_id) {
    CanonicalWriter w;
    w.tag("sig");
    write_canonical(w, content_hash);
    w.str(cert_id);
    return w.finish();
}

inline bool verify(const SignedPackage& pkg) {
    if (pkg.corrupted) return false;
    return pkg.signature == package_signature(pkg.content_hash, pkg.cert.cert_id);
}

struct ThermalParams {
    double heat_per_build = 1.0;       // degrees added per completed build
    double cool_rate = 1.0;            // degrees shed per idle second
    double throttle_threshold = 1e9;   // degrees above ambient
    double throttle_factor = 1.0;      // stage cost multiplier once throttled
};

enum class BuildStage {
    resource_compile,
    source_compile,
    bytecode_convert,
    dex_merge,
    assemble,
    sign,
};

inline constexpr std::array<BuildStage, 6> kAllStages = {
    BuildStage::resource_compile, BuildStage::source_compile, BuildStage::bytecode_convert,
    BuildStage::dex_merge,        BuildStage::assemble,       BuildStage::sign,
};

inline const char* stage_name(BuildStage s) {
    switch (s) {
        case BuildStage::resource_compile: return "resource_compile";
        case BuildStage::source_compile: return "source_compile";
        case BuildStage::bytecode_convert: return "bytecode_convert";
        case BuildStage::dex_merge: return "dex_merge";
        case BuildStage::assemble: return "assemble";
        case BuildStage::sign: return "sign";
    }
    return "?";
}

struct DeviceClass {
    std::string class_name;
    std::map<BuildStage, double> base_stage_costs;  // seconds per stage
    ThermalParams thermal;
};

struct InstalledApp {
    SignedPackage pkg;
    SimTime install_time = 0;
    std::uint64_t install_seq = 0;  // tie-break for "most recent"
};

struct DeviceState {
    std::string device_id;
    std::shared_ptr<const DeviceClass> cls;
    PlatformSpec platform;
    std::string region;
    std::map<std::string, InstalledApp> installed;  // keyed by package_name
    double temperature = 0.0;                       // degrees above ambient
    bool compromised = false;
};

// Most recently installed package, if any; what the device beams next.
inline const InstalledApp* latest_install(const DeviceState& dev) {
    const InstalledApp* best = nullptr;
    for (const auto& [name, app] : dev.installed) {
        if (!best || app.install_time > best->install_time ||
            (app.install_time == best->install_time && app.install_seq > best->install_seq)) {
            best = &app;
        }
    }
    return best;
}

}  // namespace strainsim
