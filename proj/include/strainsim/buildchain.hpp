#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "strainsim/error.hpp"
#include "strainsim/hash.hpp"
#include "strainsim/model.hpp"

namespace strainsim {

// The on-device app factory. Compilation is symbolic: each stage combines
// input hashes instead of generating code, so outputs are deterministic and
// cheap while the pipeline shape, caching and timing stay faithful.

struct CompiledResources {
    ContentHash blob_hash{};
    std::map<std::string, int> resource_index;  // dense ids 1..N in name order
};

struct BytecodeUnit {
    enum class Kind { app_source, library };
    std::string unit_name;
    ContentHash input_hash{};
    ContentHash output_hash{};
    Kind kind = Kind::app_source;
};

struct DexUnit {
    std::vector<std::string> merged_from;         // sorted unit names
    ContentHash output_hash{};
    std::map<std::string, ContentHash> components;  // leaf name -> converted hash
};

struct BuildCache {
    std::map<ContentHash, DexUnit> entries;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
};

struct BuildReport {
    std::map<BuildStage, double> stage_durations;  // seconds
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    double total_seconds = 0.0;
};

inline double throttle_multiplier(const ThermalParams& t, double temperature) {
    return temperature >= t.throttle_threshold ? t.throttle_factor : 1.0;
}

inline CompiledResources compile_resources(const std::map<std::string, std::string>& manifest,
                                           const std::map<std::string, Bytes>& resources,
                                           const std::map<std::string, Bytes>& assets) {
    CompiledResources out;
    int next_id = 1;
    for (const auto& [name, bytes] : resources) out.resource_index.emplace(name, next_id++);

    CanonicalWriter w;
    w.tag("compiled_resources");
    write_canonical(w, manifest);
    write_canonical(w, resources);
    write_canonical(w, assets);
    out.blob_hash = w.finish();
    return out;
}

inline BytecodeUnit library_bytecode_unit(const std::string& name, const Bytes& content) {
    CanonicalWriter in;
    in.tag("lib_in");
    in.str(name);
    in.blob(content);
    BytecodeUnit u;
    u.unit_name = name;
    u.input_hash = in.finish();
    CanonicalWriter out;
    out.tag("jar");
    write_canonical(out, u.input_hash);
    u.output_hash = out.finish();
    u.kind = BytecodeUnit::Kind::library;
    return u;
}

inline BytecodeUnit compile_sources(const std::map<std::string, SourceUnit>& sources,
                                    const std::map<std::string, int>& resource_index,
                                    const std::map<std::string, Bytes>& libraries) {
    for (const auto& [name, unit] : sources) {
        for (const auto& ref : unit.resource_refs) {
            if (!resource_index.count(ref)) throw UnresolvedResource(ref);
        }
    }

    CanonicalWriter in;
    in.tag("src_in");
    write_canonical(in, sources);
    ContentHash input = in.finish();

    std::vector<ContentHash> lib_hashes;
    lib_hashes.reserve(libraries.size());
    for (const auto& [name, bytes] : libraries)
        lib_hashes.push_back(library_bytecode_unit(name, bytes).output_hash);
    std::sort(lib_hashes.begin(), lib_hashes.end());

    CanonicalWriter out;
    out.tag("bytecode");
    write_canonical(out, input);
    out.u64(resource_index.size());
    for (const auto& [name, id] : resource_index) {
        out.str(name);
        out.u64(static_cast<std::uint64_t>(id));
    }
    write_canonical(out, lib_hashes);

    BytecodeUnit u;
    u.unit_name = "app_source";
    u.input_hash = input;
    u.output_hash = out.finish();
    u.kind = BytecodeUnit::Kind::app_source;
    return u;
}

// Cache key is the bytecode hash, so a unit is reconverted only when its
// input actually changed.
inline std::pair<DexUnit, bool> convert_bytecode(const BytecodeUnit& unit, BuildCache& cache) {
    auto it = cache.entries.find(unit.output_hash);
    if (it != cache.entries.end()) {
        ++cache.hits;
        return {it->second, true};
    }
    ++cache.misses;
    CanonicalWriter w;
    w.tag("dex");
    write_canonical(w, unit.output_hash);
    DexUnit d;
    d.merged_from = {unit.unit_name};
    d.output_hash = w.finish();
    d.components = {{unit.unit_name, d.output_hash}};
    cache.entries.emplace(unit.output_hash, d);
    return {d, false};
}

inline DexUnit merge_dex(const std::vector<DexUnit>& units) {
    if (units.empty()) throw EmptyMerge();
    if (units.size() == 1) return units.front();

    DexUnit out;
    for (const auto& u : units)
        for (const auto& [name, hash] : u.components) out.components[name] = hash;
    for (const auto& [name, hash] : out.components) out.merged_from.push_back(name);

    CanonicalWriter w;
    w.tag("dexmerge");
    write_canonical(w, out.components);
    out.output_hash = w.finish();
    return out;
}

namespace detail {
// What the dex output for this genome must hash to; assemble uses it to
// refuse packaging a dex that was built from different content.
inline ContentHash expected_dex_hash(const Genome& g, const std::map<std::string, int>& index,
                                     BuildCache& scratch) {
    std::vector<DexUnit> dex;
    for (const auto& [name, bytes] : g.libraries)
        dex.push_back(convert_bytecode(library_bytecode_unit(name, bytes), scratch).first);
    dex.push_back(convert_bytecode(compile_sources(g.sources, index, g.libraries), scratch).first);
    return merge_dex(dex).output_hash;
}
}  // namespace detail

struct UnsignedPackage {
    std::string package_name;
    std::shared_ptr<const Genome> genome;
    PlatformSpec built_for;
    ContentHash payload_hash{};
    std::uint64_t size_bytes = 0;
};

// Size model: configured base + one compiled copy + one embedded-genome copy
// of all content, plus any extra native blobs. Documented in docs/formats.md.
inline UnsignedPackage assemble_package(const CompiledResources& cr, const DexUnit& dex,
                                        const std::map<std::string, Bytes>& assets,
                                        const std::map<std::string, Bytes>& native_libs,
                                        std::shared_ptr<const Genome> genome,
                                        const PlatformSpec& platform,
                                        std::uint64_t base_size_bytes) {
    BuildCache scratch;
    if (detail::expected_dex_hash(*genome, cr.resource_index, scratch) != dex.output_hash)
        throw GenomeMismatch();

    UnsignedPackage pkg;
    pkg.package_name = genome->package_name;
    pkg.genome = std::move(genome);
    pkg.built_for = platform;

    CanonicalWriter w;
    w.tag("apk");
    write_canonical(w, pkg.genome->strain_id);
    w.boolean(true);  // genome embedded
    write_canonical(w, platform);
    write_canonical(w, cr.blob_hash);
    write_canonical(w, dex.output_hash);
    write_canonical(w, native_libs);
    pkg.payload_hash = w.finish();

    std::uint64_t native_total = 0;
    for (const auto& [name, bytes] : native_libs) native_total += bytes.size();
    pkg.size_bytes = base_size_bytes + 2 * genome_content_bytes(*pkg.genome) + native_total;
    (void)assets;  // sized via the genome; parameter kept for pipeline shape
    return pkg;
}

inline SignedPackage sign_package(const UnsignedPackage& unsigned_pkg, const Certificate& cert) {
    SignedPackage pkg;
    pkg.package_name = unsigned_pkg.package_name;
    pkg.cert = cert;
    pkg.built_for = unsigned_pkg.built_for;
    pkg.embedded_genome = unsigned_pkg.genome;
    pkg.size_bytes = unsigned_pkg.size_bytes;

    CanonicalWriter w;
    w.tag("package");
    write_canonical(w, unsigned_pkg.payload_hash);
    w.str(cert.cert_id);
    pkg.content_hash = w.finish();
    pkg.signature = package_signature(pkg.content_hash, cert.cert_id);
    return pkg;
}

// Re-hash and re-sign a package without its genome; models a copy whose
// embedded source was removed, which can no longer seed rebuilds.
inline SignedPackage strip_genome(const SignedPackage& pkg) {
    if (!pkg.embedded_genome) return pkg;
    SignedPackage out = pkg;
    out.embedded_genome = nullptr;
    CanonicalWriter w;
    w.tag("package_stripped");
    write_canonical(w, pkg.content_hash);
    out.content_hash = w.finish();
    out.signature = package_signature(out.content_hash, out.cert.cert_id);
    return out;
}

// Runs the six-stage pipeline in order. Stage cost = class base cost times
// the thermal multiplier sampled at build start; conversion cost is charged
// per cache miss, base_cost / unit_count each.
inline std::pair<SignedPackage, BuildReport> full_build(std::shared_ptr<const Genome> genome,
                                                        const PlatformSpec& platform,
                                                        const Certificate& cert, BuildCache& cache,
                                                        const DeviceClass& cls, double temperature,
                                                        std::uint64_t base_size_bytes) {
    const Genome& g = *genome;
    const double mult = throttle_multiplier(cls.thermal, temperature);
    const auto cost = [&](BuildStage s) { return cls.base_stage_costs.at(s) * mult; };

    BuildReport report;
    const std::uint64_t hits_before = cache.hits;
    const std::uint64_t misses_before = cache.misses;

    CompiledResources cr = compile_resources(g.manifest, g.resources, g.assets);
    report.stage_durations[BuildStage::resource_compile] = cost(BuildStage::resource_compile);

    std::vector<BytecodeUnit> units;
    for (const auto& [name, bytes] : g.libraries) units.push_back(library_bytecode_unit(name, bytes));
    units.push_back(compile_sources(g.sources, cr.resource_index, g.libraries));
    report.stage_durations[BuildStage::source_compile] = cost(BuildStage::source_compile);

    std::vector<DexUnit> dex_units;
    std::uint64_t convert_misses = 0;
    for (const auto& u : units) {
        auto [dex, hit] = convert_bytecode(u, cache);
        if (!hit) ++convert_misses;
        dex_units.push_back(std::move(dex));
    }
    const double per_unit =
        cls.base_stage_costs.at(BuildStage::bytecode_convert) / static_cast<double>(units.size());
    report.stage_durations[BuildStage::bytecode_convert] =
        per_unit * static_cast<double>(convert_misses) * mult;

    DexUnit merged = merge_dex(dex_units);
    report.stage_durations[BuildStage::dex_merge] = cost(BuildStage::dex_merge);

    UnsignedPackage unsigned_pkg =
        assemble_package(cr, merged, g.assets, {}, genome, platform, base_size_bytes);
    report.stage_durations[BuildStage::assemble] = cost(BuildStage::assemble);

    SignedPackage pkg = sign_package(unsigned_pkg, cert);
    report.stage_durations[BuildStage::sign] = cost(BuildStage::sign);

    report.cache_hits = cache.hits - hits_before;
    report.cache_misses = cache.misses - misses_before;
    for (const auto& [stage, secs] : report.stage_durations) report.total_seconds += secs;
    return {std::move(pkg), std::move(report)};
}

}  // namespace strainsim
