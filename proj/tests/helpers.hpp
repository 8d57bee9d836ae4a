#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "strainsim/strainsim.hpp"

namespace testutil {

using namespace strainsim;

inline DeviceClass flat_class(const std::string& name = "phone", double stage_cost = 1.0,
                              ThermalParams thermal = {5.0, 0.5, 1000.0, 1.0}) {
    DeviceClass cls;
    cls.class_name = name;
    for (BuildStage st : kAllStages) cls.base_stage_costs[st] = stage_cost;
    cls.thermal = thermal;
    return cls;
}

// Random but reproducible genome; distinct draws give distinct content.
inline Genome random_genome(RngStream& rng) {
    GenomeDraft draft;
    draft.package_name = "app.g" + std::to_string(rng.next_u64());
    draft.display_name = "g" + std::to_string(rng.next_below(1 << 20));
    draft.icon_id = "icon" + std::to_string(rng.next_below(16));
    const int n_sources = 1 + static_cast<int>(rng.next_below(3));
    for (int i = 0; i < n_sources; ++i) {
        Bytes content;
        const std::size_t len = 16 + rng.next_below(64);
        for (std::size_t b = 0; b < len; ++b)
            content.push_back(static_cast<std::uint8_t>(rng.next_below(256)));
        draft.sources.push_back({"src" + std::to_string(i), SourceUnit{std::move(content), {}}});
    }
    const int n_res = static_cast<int>(rng.next_below(3));
    for (int i = 0; i < n_res; ++i) {
        Bytes content;
        const std::size_t len = 8 + rng.next_below(32);
        for (std::size_t b = 0; b < len; ++b)
            content.push_back(static_cast<std::uint8_t>(rng.next_below(256)));
        draft.resources.push_back({"res" + std::to_string(i), std::move(content)});
    }
    const int n_lib = static_cast<int>(rng.next_below(3));
    for (int i = 0; i < n_lib; ++i) {
        Bytes content;
        const std::size_t len = 32 + rng.next_below(64);
        for (std::size_t b = 0; b < len; ++b)
            content.push_back(static_cast<std::uint8_t>(rng.next_below(256)));
        draft.libraries.push_back({"lib" + std::to_string(i), std::move(content)});
    }
    if (rng.next_below(2)) draft.traits.insert("chat");
    if (rng.next_below(2)) draft.traits.insert("mesh");
    return make_genome(std::move(draft));
}

inline Scenario scenario_from_text(const std::string& text) {
    std::istringstream in(text);
    Scenario sc = parse_scenario(in);
    CanonicalWriter w;
    w.tag("inline_scenario");
    w.str(text);
    sc.scenario_hash = w.finish().hex();
    return sc;
}

inline std::string scenario_dir() {
#ifdef STRAINSIM_SCENARIO_DIR
    return STRAINSIM_SCENARIO_DIR;
#else
    return "scenarios";
#endif
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::filesystem::path fresh_tmp_dir(const std::string& tag) {
#ifdef STRAINSIM_TEST_TMP
    std::filesystem::path base(STRAINSIM_TEST_TMP);
#else
    std::filesystem::path base = std::filesystem::temp_directory_path() / "strainsim_tests";
#endif
    auto dir = base / tag;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
