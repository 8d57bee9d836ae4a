#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>

#include "strainsim/buildchain.hpp"
#include "strainsim/model.hpp"

namespace strainsim {

enum class CompatKind { RunnableAsIs, NeedsRebuild, Unsupported };
enum class InstallKind { Updated, SideBySide, Rejected, Incompatible };

inline const char* to_string(CompatKind k) {
    switch (k) {
        case CompatKind::RunnableAsIs: return "runnable_as_is";
        case CompatKind::NeedsRebuild: return "needs_rebuild";
        case CompatKind::Unsupported: return "unsupported";
    }
    return "?";
}

inline const char* to_string(InstallKind k) {
    switch (k) {
        case InstallKind::Updated: return "updated";
        case InstallKind::SideBySide: return "side_by_side";
        case InstallKind::Rejected: return "rejected";
        case InstallKind::Incompatible: return "incompatible";
    }
    return "?";
}

// A package runs as-is on matching arch within [built_for, built_for +
// api_max_offset]; too-new platforms break it just like too-old ones. Any
// other platform needs a rebuild, which only an embedded genome allows.
inline CompatKind check_compat(const SignedPackage& pkg, const PlatformSpec& platform,
                               int api_max_offset = 2) {
    const bool arch_ok = pkg.built_for.cpu_arch == platform.cpu_arch;
    const bool api_ok = pkg.built_for.api_level <= platform.api_level &&
                        platform.api_level <= pkg.built_for.api_level + api_max_offset;
    if (arch_ok && api_ok) return CompatKind::RunnableAsIs;
    if (pkg.embedded_genome && platform.api_level >= genome_min_api(*pkg.embedded_genome))
        return CompatKind::NeedsRebuild;
    return CompatKind::Unsupported;
}

// Sideload semantics: same name + same cert updates in place, a different
// name installs alongside, same name under a different cert is rejected,
// and an unsupported package never installs.
inline InstallKind install(DeviceState& dev, const SignedPackage& pkg, SimTime now,
                           std::uint64_t install_seq, int api_max_offset = 2) {
    if (!verify(pkg)) throw std::logic_error("install: package failed verification");

    if (check_compat(pkg, dev.platform, api_max_offset) == CompatKind::Unsupported)
        return InstallKind::Incompatible;

    auto it = dev.installed.find(pkg.package_name);
    if (it == dev.installed.end()) {
        dev.installed.emplace(pkg.package_name, InstalledApp{pkg, now, install_seq});
        return InstallKind::SideBySide;
    }
    if (it->second.pkg.cert.cert_id != pkg.cert.cert_id) return InstallKind::Rejected;
    it->second = InstalledApp{pkg, now, install_seq};
    return InstallKind::Updated;
}

struct DeviceBuildContext {
    BuildCache& cache;
    std::uint64_t base_package_bytes = 0;
};

// On-device rebuild from a genome: costs come from the device class, the
// thermal multiplier from the current temperature, and the build leaves the
// device hotter by heat_per_build.
inline std::pair<SignedPackage, BuildReport> self_compile(DeviceState& dev,
                                                          std::shared_ptr<const Genome> genome,
                                                          const Certificate& cert,
                                                          DeviceBuildContext ctx) {
    auto result = full_build(std::move(genome), dev.platform, cert, ctx.cache, *dev.cls,
                             dev.temperature, ctx.base_package_bytes);
    dev.temperature += dev.cls->thermal.heat_per_build;
    return result;
}

// Idle cooling; temperature is clamped at ambient.
inline double thermal_update(DeviceState& dev, double elapsed_seconds) {
    dev.temperature = std::max(0.0, dev.temperature - dev.cls->thermal.cool_rate * elapsed_seconds);
    return dev.temperature;
}

}  // namespace strainsim
