#include "evgrid/powerflow.hpp"
#include "evgrid/errors.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace evgrid;

namespace {

Feeder two_bus_feeder(double r_pu, double x_pu) {
    Feeder f;
    f.name = "two_bus";
    f.base_power_mva = 10.0;
    f.unit = ImpedanceUnit::per_unit;
    f.buses.push_back({"s", BusKind::slack, 12.47, false, 0.0});
    f.buses.push_back({"a", BusKind::load, 12.47, true, 0.0});
    f.branches.push_back({"s", "a", r_pu, x_pu});
    return f;
}

} // namespace

TEST_CASE("two bus solve matches the closed form") {
    Feeder f = two_bus_feeder(0.01, 0.02);
    // 0.5 + j0.2 per unit on the 10 MVA base
    auto result = solve(f, {{"a", 5000.0, 2000.0}});
    double expected = oracle::two_bus_voltage(0.01, 0.02, 0.5, 0.2);
    CHECK(expected == doctest::Approx(0.9908847).epsilon(1e-6));
    CHECK(result.at("a") == doctest::Approx(expected).epsilon(1e-9));
    CHECK(result.at("s") == 1.0);
    CHECK(result.iterations < 100);
}

TEST_CASE("zero load gives a flat profile in one iteration") {
    Feeder f = bundled_feeder(BundledFeeder::dedicated);
    auto result = solve(f, {});
    for (double v : result.v) CHECK(v == 1.0);
    CHECK(result.iterations == 1);
}

TEST_CASE("slack voltage option shifts the whole profile") {
    Feeder f = two_bus_feeder(0.01, 0.02);
    PowerFlowOptions opts;
    opts.slack_v = 1.02;
    auto result = solve(f, {{"a", 5000.0, 2000.0}}, opts);
    double expected = oracle::two_bus_voltage(0.01, 0.02, 0.5, 0.2, 1.02);
    CHECK(result.at("a") == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ieee34 peak snapshot") {
    Feeder f = bundled_feeder(BundledFeeder::ieee34_like);
    auto result = solve(f, peak_loads(f));

    SUBCASE("voltages stay in a sane band") {
        for (double v : result.v) {
            CHECK(v > 0.9);
            CHECK(v <= 1.0);
        }
    }
    SUBCASE("voltage falls monotonically along the main line") {
        auto line = bundled_main_line(BundledFeeder::ieee34_like);
        double prev = result.at(line.front());
        for (std::size_t i = 1; i < line.size(); ++i) {
            double v = result.at(line[i]);
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }
    SUBCASE("agrees with the admittance-matrix oracle") {
        auto gs = oracle::gauss_seidel(f, peak_loads(f));
        REQUIRE(gs.size() == result.v.size());
        for (std::size_t i = 0; i < gs.size(); ++i)
            CHECK(result.v[i] == doctest::Approx(gs[i]).epsilon(1e-8));
    }
}

TEST_CASE("random radial feeders agree with the oracle") {
    std::mt19937_64 rng(20240603);
    for (int trial = 0; trial < 25; ++trial) {
        CAPTURE(trial);
        Feeder f = oracle::random_feeder(rng);
        auto loads = oracle::random_loads(f, rng);
        auto sweep = solve(f, loads);
        auto gs = oracle::gauss_seidel(f, loads);
        for (std::size_t i = 0; i < gs.size(); ++i) {
            CAPTURE(f.buses[i].id);
            CHECK(sweep.v[i] == doctest::Approx(gs[i]).epsilon(1e-8));
        }
    }
}

TEST_CASE("overload raises NoConvergence") {
    Feeder f = two_bus_feeder(0.05, 0.1);
    CHECK_THROWS_WITH_AS((void)solve(f, {{"a", 100000.0, 30000.0}}),
                         doctest::Contains("NoConvergence"), Error);
}

TEST_CASE("load placement errors") {
    Feeder f = bundled_feeder(BundledFeeder::ieee34_like);
    CHECK_THROWS_WITH_AS((void)solve(f, {{"ghost", 10.0, 0.0}}),
                         doctest::Contains("UnknownBus"), Error);
    CHECK_THROWS_WITH_AS((void)solve(f, {{"sub", 10.0, 0.0}}),
                         doctest::Contains("InvalidBus"), Error);
}

TEST_CASE("duplicate load points sum") {
    Feeder f = two_bus_feeder(0.01, 0.02);
    auto split = solve(f, {{"a", 2500.0, 1000.0}, {"a", 2500.0, 1000.0}});
    auto whole = solve(f, {{"a", 5000.0, 2000.0}});
    CHECK(split.at("a") == doctest::Approx(whole.at("a")).epsilon(1e-12));
}

TEST_CASE("qsts replays individual solves") {
    Feeder f = bundled_feeder(BundledFeeder::ieee34_like);
    const int steps = 5;

    std::vector<BusSeries> series;
    for (const auto& ld : peak_loads(f)) {
        BusSeries bs;
        bs.bus = ld.bus;
        bs.p_kw = {0, 60, std::vector<double>(steps)};
        bs.q_kvar = {0, 60, std::vector<double>(steps)};
        for (int t = 0; t < steps; ++t) {
            double scale = 0.4 + 0.15 * t;
            bs.p_kw.values[t] = ld.p_kw * scale;
            bs.q_kvar.values[t] = ld.q_kvar * scale;
        }
        series.push_back(bs);
    }

    QstsOptions opts;
    opts.keep_trajectories = true;
    auto result = qsts(f, series, opts);
    REQUIRE(result.steps == steps);

    for (int t = 0; t < steps; ++t) {
        double scale = 0.4 + 0.15 * t;
        std::vector<LoadPoint> loads;
        for (const auto& ld : peak_loads(f))
            loads.push_back({ld.bus, ld.p_kw * scale, ld.q_kvar * scale});
        auto snap = solve(f, loads);
        for (std::size_t i = 0; i < snap.v.size(); ++i)
            CHECK(result.trajectories[i][t] == doctest::Approx(snap.v[i]).epsilon(1e-9));
    }

    SUBCASE("per-bus envelopes bracket the trajectories") {
        for (std::size_t i = 0; i < result.v_min.size(); ++i) {
            for (int t = 0; t < steps; ++t) {
                CHECK(result.v_min[i] <= result.trajectories[i][t]);
                CHECK(result.v_max[i] >= result.trajectories[i][t]);
            }
        }
    }
}

TEST_CASE("qsts flags violations below the lower limit") {
    Feeder f = two_bus_feeder(0.02, 0.03);
    BusSeries bs;
    bs.bus = "a";
    bs.p_kw = {0, 1, {1000.0, 30000.0, 1000.0}};
    auto result = qsts(f, {bs});

    CHECK(result.violation_count == 1);
    CHECK(result.violating_buses_per_step[0] == 0);
    CHECK(result.violating_buses_per_step[1] == 1);
    CHECK(result.violating_buses_per_step[2] == 0);
    REQUIRE(result.violations.size() == 1);
    CHECK(result.violations[0].step == 1);
    CHECK(result.bus_ids[result.violations[0].bus] == "a");
    CHECK(result.global_min.v < 0.95);
    CHECK(result.global_min.step == 1);

    auto summary = violation_scan(result, QstsOptions{}.limits);
    CHECK(summary.count == 1);
    CHECK(summary.steps_with == 1);
    CHECK(summary.any_low);
    CHECK_FALSE(summary.any_high);
    CHECK(summary.worst_bus == "a");
    CHECK(summary.worst_step == 1);
}

TEST_CASE("exactly hitting a limit is not a violation") {
    VoltageLimits lim;
    CHECK(within_limits(0.95, lim));
    CHECK(within_limits(1.05, lim));
    CHECK_FALSE(within_limits(0.9499999, lim));
    CHECK_FALSE(within_limits(1.0500001, lim));
}

TEST_CASE("qsts input validation") {
    Feeder f = bundled_feeder(BundledFeeder::ieee34_like);
    CHECK_THROWS_WITH_AS((void)qsts(f, {}), doctest::Contains("EmptyProfiles"), Error);

    BusSeries good;
    good.bus = "m05";
    good.p_kw = {0, 1, {1.0, 2.0}};
    BusSeries misaligned;
    misaligned.bus = "m06";
    misaligned.p_kw = {0, 1, {1.0}};
    CHECK_THROWS_AS((void)qsts(f, {good, misaligned}), Error);

    BusSeries at_slack;
    at_slack.bus = "sub";
    at_slack.p_kw = {0, 1, {1.0, 2.0}};
    CHECK_THROWS_WITH_AS((void)qsts(f, {good, at_slack}),
                         doctest::Contains("InvalidBus"), Error);
}

TEST_CASE("reactive helper and pf validation") {
    CHECK(reactive_for_pf(1000.0, 0.95) == doctest::Approx(328.684).epsilon(1e-4));
    CHECK(reactive_for_pf(1000.0, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS_WITH_AS((void)reactive_for_pf(1.0, 0.0), doctest::Contains("InvalidPf"),
                         Error);
    CHECK_THROWS_WITH_AS((void)reactive_for_pf(1.0, 1.2), doctest::Contains("InvalidPf"),
                         Error);
}

TEST_CASE("bundled feeder baselines sit inside limits") {
    for (const char* name : {"ieee34_like", "single_feeder", "two_feeder"}) {
        CAPTURE(name);
        Feeder f = bundled_feeder(name);
        auto result = solve(f, peak_loads(f));
        CHECK(result.min_v() >= 0.95);
        CHECK(result.min_v() < 0.99); // meaningfully loaded, not a trivial network
        MESSAGE(std::string(name), " peak-load min V = ", result.min_v());
    }
}
