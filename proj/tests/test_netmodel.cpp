#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "strainsim/strainsim.hpp"

using namespace strainsim;

TEST_CASE("calibration reproduces every measured cell") {
    MeasuredTable table = table1_measurements();
    RateMatrix m = calibrate_rates(table, kTable1PayloadBytes, 0.0);

    for (const auto& [pair, seconds] : table) {
        double simulated =
            transfer_duration_seconds(m, pair.first, pair.second, kTable1PayloadBytes);
        CHECK(std::abs(simulated - seconds) < 1.0);
    }

    SECTION("spot values from the measurements") {
        CHECK(transfer_duration_seconds(m, "galaxy_nexus", "nexus_10", kTable1PayloadBytes) ==
              Catch::Approx(419.0));
        CHECK(transfer_duration_seconds(m, "nexus_6", "nexus_5", kTable1PayloadBytes) ==
              Catch::Approx(147.0));
    }

    SECTION("matrix stays directional") {
        CHECK(m.rate_for("galaxy_nexus", "nexus_5") != m.rate_for("nexus_5", "galaxy_nexus"));
        CHECK(transfer_duration_seconds(m, "galaxy_nexus", "nexus_5", kTable1PayloadBytes) ==
              Catch::Approx(221.0));
        CHECK(transfer_duration_seconds(m, "nexus_5", "galaxy_nexus", kTable1PayloadBytes) ==
              Catch::Approx(211.0));
    }
}

TEST_CASE("zero size transfers take exactly the handshake") {
    RateMatrix m = calibrate_rates(table1_measurements(), kTable1PayloadBytes, 1.5);
    CHECK(transfer_duration_seconds(m, "nexus_5", "nexus_6", 0) == Catch::Approx(1.5));
}

TEST_CASE("unknown pair is an error naming both classes") {
    RateMatrix m = calibrate_rates(table1_measurements(), kTable1PayloadBytes, 0.0);
    try {
        m.rate_for("nexus_5", "nexus_5");  // blank diagonal, not imputed here
        FAIL("expected UnknownPair");
    } catch (const UnknownPair& e) {
        CHECK(e.from == "nexus_5");
        CHECK(e.to == "nexus_5");
    }
}

TEST_CASE("measured times at or below the handshake are rejected") {
    MeasuredTable table{{{"a", "b"}, 10.0}};
    CHECK_THROWS_AS(calibrate_rates(table, 1000, 10.0), NonPositiveRate);
    CHECK_THROWS_AS(calibrate_rates(table, 1000, 12.0), NonPositiveRate);
    CHECK_THROWS_AS(calibrate_rates(table, 0, 0.0), Error);  // zero-size measurement
}

TEST_CASE("nonzero handshake yields strictly larger derived rates") {
    MeasuredTable table = table1_measurements();
    RateMatrix flat = calibrate_rates(table, kTable1PayloadBytes, 0.0);
    RateMatrix shifted = calibrate_rates(table, kTable1PayloadBytes, 10.0);
    for (const auto& [pair, rate] : flat.rates_bps)
        CHECK(shifted.rates_bps.at(pair) > rate);

    SECTION("and still reproduces the measured totals") {
        for (const auto& [pair, seconds] : table)
            CHECK(transfer_duration_seconds(shifted, pair.first, pair.second,
                                            kTable1PayloadBytes) == Catch::Approx(seconds));
    }
}

TEST_CASE("diagonal imputation uses the geometric mean of row and column means") {
    MeasuredTable table = table1_measurements();
    std::set<std::string> classes{"galaxy_nexus", "nexus_5", "nexus_6", "nexus_10"};
    MeasuredTable filled = impute_diagonal_geomean(table, classes);

    REQUIRE(filled.count({"nexus_5", "nexus_5"}) == 1);
    REQUIRE(filled.count({"nexus_10", "nexus_10"}) == 1);
    CHECK(filled.size() == table.size() + 2);

    // independent recomputation for nexus_5
    const double row_mean = (211.0 + 149.0 + 360.0) / 3.0;
    const double col_mean = (221.0 + 147.0 + 400.0) / 3.0;
    CHECK(filled.at({"nexus_5", "nexus_5"}) == Catch::Approx(std::sqrt(row_mean * col_mean)));

    // measured cells are untouched
    for (const auto& [pair, seconds] : table) CHECK(filled.at(pair) == seconds);
}

TEST_CASE("kill switch flips uplinks, never membership") {
    NetState net;
    net.add_region({"offline_region", true, {"d1", "d2"}});
    CHECK(net.uplink_check("offline_region"));
    net.kill_switch("offline_region", false);
    CHECK(!net.uplink_check("offline_region"));
    CHECK(net.region("offline_region").members.size() == 2);
    net.kill_switch("offline_region", true);
    CHECK(net.uplink_check("offline_region"));

    CHECK_THROWS_AS(net.kill_switch("nowhere", false), UnknownRegion);
}

TEST_CASE("moving devices between regions") {
    NetState net;
    net.add_region({"a", false, {"d1", "d2"}});
    net.add_region({"b", true, {}});
    net.move_device("d1", "a", "b");
    CHECK(net.region("a").members == std::set<std::string>{"d2"});
    CHECK(net.region("b").members == std::set<std::string>{"d1"});
}
