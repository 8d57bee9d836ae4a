#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "strainsim/strainsim.hpp"

using namespace strainsim;
using testutil::flat_class;

namespace {

Genome base_genome() {
    GenomeDraft d;
    d.package_name = "app.mut";
    d.display_name = "mut";
    d.icon_id = "icon0";
    d.sources.push_back({"main", SourceUnit{synthetic_bytes("mut_main", 64), {}}});
    d.libraries.push_back({"liba", synthetic_bytes("mut_liba", 64)});
    d.traits = {"chat"};
    return make_genome(std::move(d));
}

SignedPackage build(const Genome& g, const Certificate& cert) {
    BuildCache cache;
    DeviceClass cls = flat_class();
    return full_build(std::make_shared<const Genome>(g), {16, "armv7"}, cert, cache, cls, 0.0, 0)
        .first;
}

}  // namespace

TEST_CASE("empty mutation is not a new strain") {
    CHECK_THROWS_AS(mutate(base_genome(), {}), InvalidOp);
}

TEST_CASE("appearance-only ops preserve the trait set and still change identity") {
    Genome g = base_genome();
    Genome child = mutate(g, {MutationOp::rename_display("calc")});
    CHECK(child.traits == g.traits);
    CHECK(child.strain_id != g.strain_id);
    CHECK(child.generation == g.generation + 1);
    CHECK(child.display_name == "calc");

    Genome icon_child = mutate(g, {MutationOp::swap_icon("icon_calc")});
    CHECK(icon_child.traits == g.traits);
    CHECK(icon_child.strain_id != g.strain_id);
}

TEST_CASE("functional ops edit the trait set as specified") {
    Genome g = base_genome();
    Genome child = mutate(g, {MutationOp::add_trait("ide")});
    CHECK(child.traits.size() == g.traits.size() + 1);
    CHECK(child.traits.count("ide") == 1);
    CHECK(child.generation == 1);

    Genome grandchild = mutate(child, {MutationOp::remove_trait("chat")});
    CHECK(grandchild.traits.count("chat") == 0);
    CHECK(grandchild.generation == 2);
}

TEST_CASE("invalid ops are rejected with the offending payload") {
    Genome g = base_genome();
    CHECK_THROWS_AS(mutate(g, {MutationOp::remove_trait("absent")}), InvalidOp);
    CHECK_THROWS_AS(mutate(g, {MutationOp::add_trait("chat")}), InvalidOp);
    CHECK_THROWS_AS(mutate(g, {MutationOp::edit_source("nope", 0, 1)}), InvalidOp);
    CHECK_THROWS_AS(mutate(g, {MutationOp::edit_source("main", 10000, 1)}), InvalidOp);
    CHECK_THROWS_AS(mutate(g, {MutationOp::add_library("liba", {})}), InvalidOp);
    CHECK_THROWS_AS(mutate(g, {MutationOp::remove_library("nope")}), InvalidOp);
}

TEST_CASE("signature evasion: any mutation changes the built package hash") {
    Genome g = base_genome();
    Certificate cert{"debug", true};
    ContentHash parent_hash = build(g, cert).content_hash;

    RngStream rng(3, "evasion_ops");
    std::vector<std::vector<MutationOp>> op_lists = {
        {MutationOp::rename_display("d2")},
        {MutationOp::swap_icon("i2")},
        {MutationOp::add_trait("t2")},
        {MutationOp::edit_source("main", 3, 0xAB)},
        {MutationOp::add_library("libz", synthetic_bytes("libz", 16))},
        {MutationOp::remove_library("liba")},
        {MutationOp::rename_package("app.other")},
        {MutationOp::add_trait("x"), MutationOp::remove_trait("x")},  // net-zero content edit
    };
    for (const auto& ops : op_lists) {
        Genome child = mutate(g, ops);
        CHECK(build(child, cert).content_hash != parent_hash);
    }
}

TEST_CASE("lineage bookkeeping") {
    Lineage lineage;
    Genome root = base_genome();
    lineage.insert(root.strain_id, {std::nullopt, 0, 0, "d1"});

    SECTION("root has no ancestors") { CHECK(lineage.ancestors(root.strain_id).empty()); }

    SECTION("child of root") {
        Genome child = mutate(root, {MutationOp::rename_display("x")});
        lineage.insert(child.strain_id, {child.parent_strain, child.generation, 10, "d1"});
        auto anc = lineage.ancestors(child.strain_id);
        REQUIRE(anc.size() == 1);
        CHECK(anc[0] == root.strain_id);
    }

    SECTION("chain of 5 mutations lists 5 ancestors in order") {
        Genome cur = root;
        std::vector<StrainId> chain{root.strain_id};
        for (int i = 0; i < 5; ++i) {
            cur = mutate(cur, {MutationOp::rename_display("gen" + std::to_string(i))});
            lineage.insert(cur.strain_id, {cur.parent_strain, cur.generation, i, "d1"});
            chain.push_back(cur.strain_id);
        }
        auto anc = lineage.ancestors(cur.strain_id);
        REQUIRE(anc.size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(anc[i] == chain[4 - i]);
        CHECK(lineage.at(cur.strain_id).generation == 5);
    }

    SECTION("unknown strain throws") {
        ContentHash bogus{};
        CHECK_THROWS_AS(lineage.ancestors(bogus), UnknownStrain);
    }

    SECTION("generation arithmetic is enforced") {
        Genome child = mutate(root, {MutationOp::rename_display("x")});
        CHECK_THROWS_AS(lineage.insert(child.strain_id, {child.parent_strain, 5, 0, "d1"}), Error);
    }
}

TEST_CASE("random mutation sequences keep the lineage a tree with correct generations") {
    RngStream rng(17, "lineage_prop");
    Genome root = base_genome();
    Lineage lineage;
    lineage.insert(root.strain_id, {std::nullopt, 0, 0, "d"});
    std::vector<Genome> pool{root};

    for (int step = 0; step < 200; ++step) {
        const Genome& parent = pool[rng.next_below(pool.size())];
        std::vector<MutationOp> ops;
        switch (rng.next_below(3)) {
            case 0: ops.push_back(MutationOp::rename_display("d" + std::to_string(step))); break;
            case 1: ops.push_back(MutationOp::swap_icon("i" + std::to_string(step))); break;
            default: ops.push_back(MutationOp::add_trait("t" + std::to_string(step))); break;
        }
        Genome child = mutate(parent, ops);
        CHECK(child.generation == parent.generation + 1);
        lineage.insert(child.strain_id, {child.parent_strain, child.generation,
                                         static_cast<SimTime>(step), "d"});
        pool.push_back(std::move(child));
    }

    // every ancestor chain terminates at the single root, with length = generation
    for (const auto& g : pool) {
        auto anc = lineage.ancestors(g.strain_id);
        CHECK(anc.size() == g.generation);
        if (!anc.empty()) CHECK(anc.back() == root.strain_id);
    }
    CHECK(lineage.subtree(root.strain_id).size() == pool.size());
}

TEST_CASE("resign") {
    Genome g = base_genome();
    Certificate debug{"debug", true};
    Certificate fresh{"burner1", false};
    DeviceClass cls = flat_class();
    SignedPackage original = build(g, debug);

    SECTION("same cert is a no-op on the content hash") {
        BuildCache cache;
        SignedPackage again = resign(original, debug, cache, cls, 0.0, 0);
        CHECK(again.content_hash == original.content_hash);
    }

    SECTION("new cert moves the content hash") {
        BuildCache cache;
        SignedPackage reborn = resign(original, fresh, cache, cls, 0.0, 0);
        CHECK(reborn.content_hash != original.content_hash);
        CHECK(verify(reborn));
    }

    SECTION("re-signed package over a debug-signed predecessor is rejected") {
        auto cls_ptr = std::make_shared<DeviceClass>(cls);
        DeviceState dev;
        dev.device_id = "d";
        dev.cls = cls_ptr;
        dev.platform = {16, "armv7"};
        REQUIRE(install(dev, original, 0, 1) == InstallKind::SideBySide);
        BuildCache cache;
        SignedPackage reborn = resign(original, fresh, cache, cls, 0.0, 0);
        CHECK(install(dev, reborn, 1, 2) == InstallKind::Rejected);
    }

    SECTION("fresh cert evades a cert blacklist entry for the old one") {
        AdversaryState adv;
        adv.blacklist_cert("debug", 0, "test");
        CHECK(adv.block_decision(original, 1).blocked);
        BuildCache cache;
        SignedPackage reborn = resign(original, fresh, cache, cls, 0.0, 0);
        CHECK(!adv.block_decision(reborn, 2).blocked);
    }

    SECTION("stripped package cannot be re-signed") {
        BuildCache cache;
        CHECK_THROWS_AS(resign(strip_genome(original), fresh, cache, cls, 0.0, 0), Error);
    }
}

TEST_CASE("fitness over a real trace") {
    const std::string text = R"(
[scenario]
name = fit
stop_time = 4000

[class phone]
resource_compile = 1
source_compile = 2
bytecode_convert = 4
dex_merge = 1
assemble = 1
sign = 0.5
heat_per_build = 5
cool_rate = 0.5
throttle_threshold = 100
throttle_factor = 1.0

[region lab]
internet = up
encounter_mean_interval = 50
encounter_window = 600

[device a]
class = phone
region = lab
api_level = 16
cpu_arch = armv7

[device b]
class = phone
region = lab
api_level = 16
cpu_arch = armv7

[device c]
class = phone
region = lab
api_level = 16
cpu_arch = armv7

[rates]
size_bytes = 100000
handshake_seconds = 0
rate = phone phone 10

[strain]
origin = a
package_name = app.fit
source = main size=500

[mutation]
policy = every_k_transfers
k = 2
)";
    Scenario sc = testutil::scenario_from_text(text);
    Trace trace = run(sc, 11);
    Lineage lineage = strainsim::detail::lineage_from_trace(trace);
    REQUIRE(lineage.nodes().size() >= 1);

    const StrainId root = lineage.nodes().begin()->first;
    StrainId actual_root = root;
    for (const auto& [id, node] : lineage.nodes())
        if (!node.parent) actual_root = id;

    FitnessMetrics strain_only = fitness(trace, actual_root, FitnessScope::strain_only);
    FitnessMetrics subtree = fitness(trace, actual_root, FitnessScope::subtree);
    CHECK(strain_only.devices_reached >= 1);
    CHECK(subtree.devices_reached >= strain_only.devices_reached);
    CHECK(subtree.devices_reached <= 3);
    CHECK(!strain_only.escape_time_s.has_value());  // no offline origin here

    SECTION("subtree dominates strain-only for every strain") {
        for (const auto& [id, node] : lineage.nodes()) {
            CHECK(fitness(trace, id, FitnessScope::subtree).devices_reached >=
                  fitness(trace, id, FitnessScope::strain_only).devices_reached);
        }
    }

    SECTION("unknown strain throws") {
        CHECK_THROWS_AS(fitness(trace, ContentHash{}, FitnessScope::strain_only), UnknownStrain);
    }
}

TEST_CASE("strain never transferred reaches exactly its origin") {
    const std::string text = R"(
[scenario]
name = lonely
stop_time = 100

[class phone]
resource_compile = 1
source_compile = 2
bytecode_convert = 4
dex_merge = 1
assemble = 1
sign = 0.5
heat_per_build = 5
cool_rate = 0.5
throttle_threshold = 100
throttle_factor = 1.0

[region lab]
internet = up

[device solo]
class = phone
region = lab
api_level = 16
cpu_arch = armv7

[rates]
size_bytes = 100000
handshake_seconds = 0

[strain]
origin = solo
package_name = app.lonely
source = main size=100
)";
    Scenario sc = testutil::scenario_from_text(text);
    Trace trace = run(sc, 1);
    Lineage lineage = strainsim::detail::lineage_from_trace(trace);
    REQUIRE(lineage.nodes().size() == 1);
    FitnessMetrics fit = fitness(trace, lineage.nodes().begin()->first, FitnessScope::strain_only);
    CHECK(fit.devices_reached == 1);
    CHECK(fit.survived_blacklist);  // never blacklisted
}
