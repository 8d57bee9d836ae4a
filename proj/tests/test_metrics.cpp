#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "helpers.hpp"
#include "strainsim/strainsim.hpp"

using namespace strainsim;

namespace {

// Ten consecutive galaxy_nexus -> nexus_10 beams of the 30.1 MB package.
std::string repeated_gn_to_n10() {
    std::ostringstream out;
    out << R"(
[scenario]
name = gn_n10_repeat
stop_time = 60000
base_package_bytes = 100000

[class galaxy_nexus]
resource_compile = 10
source_compile = 60
bytecode_convert = 120
dex_merge = 25
assemble = 20
sign = 5
heat_per_build = 5
cool_rate = 0.5
throttle_threshold = 1000
throttle_factor = 1.0

[class nexus_10]
resource_compile = 3
source_compile = 15
bytecode_convert = 30
dex_merge = 6
assemble = 5
sign = 1.5
heat_per_build = 5
cool_rate = 0.5
throttle_threshold = 1000
throttle_factor = 1.0

[region lab]
internet = up

[device gn]
class = galaxy_nexus
region = lab
api_level = 16
cpu_arch = armv7

[device n10]
class = nexus_10
region = lab
api_level = 17
cpu_arch = armv7

[rates]
size_bytes = 30100000
handshake_seconds = 0
rate = galaxy_nexus nexus_10 419
rate = nexus_10 galaxy_nexus 409

[strain]
origin = gn
package_name = app.selfrep
source = main size=1000
resource = layout size=500
asset = payload size=14988492
library = buildtools size=10000
)";
    for (int i = 0; i < 10; ++i)
        out << "\n[encounter]\ntime = " << (100 + i * 1000) << "\nfrom = gn\nto = n10\nwindow = 600\n";
    return out.str();
}

}  // namespace

TEST_CASE("metrics recount the trace exactly") {
    Scenario sc = testutil::scenario_from_text(repeated_gn_to_n10());
    Trace trace = run(sc, 4);
    Summary s = metrics(trace);

    int delivered = 0;
    for (const auto& rec : trace.records)
        if (rec.kind == "transfer_result" && rec.get("outcome") == "delivered") ++delivered;

    CHECK(*s.find("transfers_delivered") == std::to_string(delivered));
    CHECK(delivered == 10);
    CHECK(*s.find("blocked_count") == "0");
    CHECK(*s.find("total_devices") == "2");
    CHECK(*s.find("final_infected") == "2");

    SECTION("mean transfer duration reproduces the calibrated cell") {
        CHECK(std::stod(*s.find("mean_transfer_s")) == Catch::Approx(419.0).margin(0.01));
    }

    SECTION("transfer rows carry classes for external analysis") {
        REQUIRE(s.transfers.size() == 10);
        for (const auto& row : s.transfers) {
            CHECK(row.sender_class == "galaxy_nexus");
            CHECK(row.receiver_class == "nexus_10");
            CHECK(row.size_bytes == 30100000);
        }
    }
}

TEST_CASE("infection curve is non-decreasing and starts at the origin") {
    const std::string text = R"(
[scenario]
name = curve
stop_time = 30000

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

[device d]
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
package_name = app.curve
source = main size=100
)";
    Scenario sc = testutil::scenario_from_text(text);
    Trace trace = run(sc, 8);
    Summary s = metrics(trace);

    REQUIRE(!s.infection_curve.empty());
    CHECK(s.infection_curve.front().first == 0);
    CHECK(s.infection_curve.front().second == 1);  // origin install
    for (std::size_t i = 1; i < s.infection_curve.size(); ++i) {
        CHECK(s.infection_curve[i].second == s.infection_curve[i - 1].second + 1);
        CHECK(s.infection_curve[i].first >= s.infection_curve[i - 1].first);
    }

    SECTION("csv emitters are stable") {
        CHECK(infection_csv(s) == infection_csv(metrics(trace)));
        CHECK(transfers_csv(s) == transfers_csv(metrics(trace)));
        CHECK(summary_text(s) == summary_text(metrics(trace)));
    }
}

TEST_CASE("metrics survive a serialize/parse round trip") {
    Scenario sc = testutil::scenario_from_text(repeated_gn_to_n10());
    Trace trace = run(sc, 4);
    std::string bytes = serialize_trace(trace);
    std::istringstream in(bytes);
    Trace parsed = parse_trace(in);

    CHECK(summary_text(metrics(parsed)) == summary_text(metrics(trace)));
    CHECK(parsed.seed == trace.seed);
    CHECK(parsed.scenario_hash == trace.scenario_hash);
}

TEST_CASE("aggregation of identical runs has zero variance") {
    Scenario sc = testutil::scenario_from_text(repeated_gn_to_n10());
    std::vector<Summary> runs;
    for (int i = 0; i < 3; ++i) runs.push_back(metrics(run(sc, 4)));

    auto rows = aggregate_summaries(runs);
    REQUIRE(!rows.empty());
    for (const auto& row : rows) {
        CHECK(row.min == row.max);
        CHECK(row.mean == Catch::Approx(row.min));
        CHECK(row.p50 == row.min);
    }

    SECTION("mean of repeated transfers matches the measured cell") {
        bool found = false;
        for (const auto& row : rows)
            if (row.metric == "mean_transfer_s") {
                found = true;
                CHECK(row.mean == Catch::Approx(419.0).margin(0.01));
            }
        CHECK(found);
    }
}

TEST_CASE("aggregation needs at least one run") {
    CHECK_THROWS_AS(aggregate_summaries({}), Error);
}
