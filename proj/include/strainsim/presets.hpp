#pragma once

#include <map>
#include <string>

#include "strainsim/model.hpp"
#include "strainsim/netmodel.hpp"

namespace strainsim {

// Default device classes. Stage costs are scenario defaults chosen to match
// the qualitative findings: the Galaxy Nexus (Dalvik, JIT) builds far slower
// than the ART devices, and the Nexus 5 throttles under repeated builds and
// recovers after cooling down. Absolute numbers are calibration knobs, not
// measurements.
inline std::map<std::string, DeviceClass> default_device_classes() {
    std::map<std::string, DeviceClass> out;

    auto make = [&](const std::string& name, double res, double src, double conv, double merge,
                    double asm_s, double sign, ThermalParams thermal) {
        DeviceClass cls;
        cls.class_name = name;
        cls.base_stage_costs = {
            {BuildStage::resource_compile, res}, {BuildStage::source_compile, src},
            {BuildStage::bytecode_convert, conv}, {BuildStage::dex_merge, merge},
            {BuildStage::assemble, asm_s},        {BuildStage::sign, sign},
        };
        cls.thermal = thermal;
        out.emplace(name, std::move(cls));
    };

    make("galaxy_nexus", 10, 60, 120, 25, 20, 5, {5.0, 0.5, 1000.0, 1.0});
    make("nexus_5", 2, 12, 24, 5, 4, 1, {30.0, 0.5, 50.0, 1.5});
    make("nexus_6", 1.5, 10, 20, 4, 3.5, 1, {5.0, 0.5, 1000.0, 1.0});
    make("nexus_10", 3, 15, 30, 6, 5, 1.5, {5.0, 0.5, 1000.0, 1.0});
    return out;
}

// Measured beam transfer times in seconds for a 30.1 MB package, per ordered
// device pair. The two same-device diagonal cells were never measured;
// impute_diagonal_geomean can fill them.
inline MeasuredTable table1_measurements() {
    return MeasuredTable{
        {{"galaxy_nexus", "galaxy_nexus"}, 227}, {{"galaxy_nexus", "nexus_5"}, 221},
        {{"galaxy_nexus", "nexus_6"}, 209},      {{"galaxy_nexus", "nexus_10"}, 419},
        {{"nexus_5", "galaxy_nexus"}, 211},      {{"nexus_5", "nexus_6"}, 149},
        {{"nexus_5", "nexus_10"}, 360},          {{"nexus_6", "galaxy_nexus"}, 198},
        {{"nexus_6", "nexus_5"}, 147},           {{"nexus_6", "nexus_6"}, 139},
        {{"nexus_6", "nexus_10"}, 357},          {{"nexus_10", "galaxy_nexus"}, 409},
        {{"nexus_10", "nexus_5"}, 400},          {{"nexus_10", "nexus_6"}, 359},
    };
}

inline constexpr std::uint64_t kTable1PayloadBytes = 30100000;  // 30.1 MB, decimal

}  // namespace strainsim
