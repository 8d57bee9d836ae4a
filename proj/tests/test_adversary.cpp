#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "strainsim/strainsim.hpp"

using namespace strainsim;
using testutil::flat_class;

namespace {

SignedPackage build_pkg(const Genome& g, const std::string& cert_id = "debug") {
    BuildCache cache;
    DeviceClass cls = flat_class();
    return full_build(std::make_shared<const Genome>(g), {16, "armv7"}, {cert_id, cert_id == "debug"},
                      cache, cls, 0.0, 0)
        .first;
}

Genome genome(const std::string& name) {
    GenomeDraft d;
    d.package_name = name;
    d.sources.push_back({"main", SourceUnit{synthetic_bytes("adv:" + name, 48), {}}});
    return make_genome(std::move(d));
}

}  // namespace

TEST_CASE("block decisions match blacklists exactly") {
    AdversaryState adv;
    Genome g = genome("app.block");
    SignedPackage pkg = build_pkg(g);

    SECTION("clean package is allowed") { CHECK(!adv.block_decision(pkg, 0).blocked); }

    SECTION("hash entry blocks") {
        adv.blacklist_hash(pkg.content_hash, 0, "test");
        BlockDecision d = adv.block_decision(pkg, 1);
        CHECK(d.blocked);
        CHECK(d.reason == BlockReason::hash);
        CHECK(d.entry == pkg.content_hash.hex());
    }

    SECTION("mutated descendant of a blacklisted strain passes a hash blacklist") {
        adv.blacklist_hash(pkg.content_hash, 0, "test");
        Genome child = mutate(g, {MutationOp::rename_display("calc")});
        SignedPackage evolved = build_pkg(child);
        CHECK(!adv.block_decision(evolved, 1).blocked);
    }

    SECTION("same genome re-signed with a blacklisted cert still blocks") {
        adv.blacklist_cert("shady", 0, "test");
        SignedPackage resigned = build_pkg(g, "shady");
        BlockDecision d = adv.block_decision(resigned, 1);
        CHECK(d.blocked);
        CHECK(d.reason == BlockReason::cert);
        CHECK(d.entry == "shady");
    }
}

TEST_CASE("observation records hashes and captures without altering anything") {
    AdversaryState adv;
    SignedPackage pkg = build_pkg(genome("app.obs"));
    adv.observe(pkg, "receiver1", 5);
    CHECK(adv.observed.count(pkg.content_hash) == 1);
    REQUIRE(adv.captures.size() == 1);
    CHECK(adv.captures[0].receiver == "receiver1");
    CHECK(verify(adv.captures[0].pkg));

    SECTION("replay picks the most recent capture for the receiver") {
        SignedPackage second = build_pkg(genome("app.obs2"));
        adv.observe(second, "receiver1", 6);
        const CapturedTransfer* pick = adv.pick_replay("receiver1", 7);
        REQUIRE(pick != nullptr);
        CHECK(pick->pkg.content_hash == second.content_hash);
        CHECK(adv.pick_replay("stranger", 8) == nullptr);
    }
}

TEST_CASE("modification corrupts the in-flight copy only") {
    AdversaryState adv;
    SignedPackage pkg = build_pkg(genome("app.mod"));
    SignedPackage corrupted = adv.modify(pkg, 3);
    CHECK(!verify(corrupted));
    CHECK(verify(pkg));  // original untouched
    CHECK(corrupted.content_hash == pkg.content_hash);
}

TEST_CASE("compromise budget") {
    AdversaryConfig cfg;
    cfg.compromise_budget = 1;
    AdversaryState adv(cfg);

    auto cls = std::make_shared<DeviceClass>(flat_class());
    DeviceState dev;
    dev.device_id = "victim";
    dev.cls = cls;
    dev.platform = {16, "armv7"};
    SignedPackage pkg = build_pkg(genome("app.comp"));
    install(dev, pkg, 0, 1);

    CompromiseRevealed loot = adv.compromise(dev, 10);
    CHECK(dev.compromised);
    REQUIRE(loot.apps.size() == 1);
    CHECK(loot.apps[0].package_hash == pkg.content_hash);
    CHECK(loot.apps[0].cert_id == "debug");
    REQUIRE(loot.apps[0].strain.has_value());
    CHECK(*loot.apps[0].strain == pkg.embedded_genome->strain_id);

    SECTION("budget exhausts") {
        DeviceState dev2 = dev;
        CHECK_THROWS_AS(adv.compromise(dev2, 11), BudgetExhausted);
    }

    SECTION("blacklisting the loot blocks subsequent transfers of that cert") {
        adv.blacklist_cert(loot.apps[0].cert_id, 12, "compromise");
        CHECK(adv.block_decision(pkg, 13).blocked);
    }
}

TEST_CASE("zero budget fails immediately") {
    AdversaryState adv;
    auto cls = std::make_shared<DeviceClass>(flat_class());
    DeviceState dev;
    dev.cls = cls;
    CHECK_THROWS_AS(adv.compromise(dev, 0), BudgetExhausted);
}

TEST_CASE("observation probability behaves binomially at the engine level") {
    // p = 0.5 over 1000 proximity transfers: observed count within 3 sigma.
    std::string text = R"(
[scenario]
name = obs_binomial
stop_time = 200000

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
internet = down
encounter_mean_interval = 100
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

[rates]
size_bytes = 100000
handshake_seconds = 0
rate = phone phone 10

[strain]
origin = a
package_name = app.obs
source = main size=100

[adversary]
monitor = all 0.5
)";
    Scenario sc = testutil::scenario_from_text(text);
    Trace trace = run(sc, 2024);

    int transfers = 0, observed = 0;
    for (const auto& rec : trace.records) {
        if (rec.kind == "transfer_result") ++transfers;
        if (rec.kind == "adversary_observe") ++observed;
    }
    REQUIRE(transfers >= 1000);
    const double p = 0.5;
    const double sigma = std::sqrt(transfers * p * (1 - p));
    CHECK(std::abs(observed - transfers * p) <= 3.0 * sigma);
}

TEST_CASE("internet_only policy never observes proximity beams") {
    std::string text = R"(
[scenario]
name = obs_none
stop_time = 20000

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
encounter_mean_interval = 100
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

[rates]
size_bytes = 100000
handshake_seconds = 0
rate = phone phone 10

[strain]
origin = a
package_name = app.quiet
source = main size=100

[adversary]
monitor = internet_only
)";
    Scenario sc = testutil::scenario_from_text(text);
    Trace trace = run(sc, 9);
    int transfers = 0, observed = 0;
    for (const auto& rec : trace.records) {
        if (rec.kind == "transfer_result") ++transfers;
        if (rec.kind == "adversary_observe") ++observed;
    }
    CHECK(transfers > 0);
    CHECK(observed == 0);
}
