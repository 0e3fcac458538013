#include "evgrid/mitigation.hpp"

#include "evgrid/errors.hpp"
#include "evgrid/network.hpp"
#include "evgrid/powerflow.hpp"
#include "evgrid/sensitivity.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

using namespace evgrid;

namespace {

// Short stiff-then-weak feeder: the station bus sits behind enough impedance
// that a megawatt-scale draw sags it below 0.95 while the head stays healthy.
Feeder micro_feeder() {
    Feeder f;
    f.name = "micro";
    f.base_power_mva = 10.0;
    f.system_peak_kw = 900.0;
    f.buses.push_back({"sub", BusKind::slack, 12.47, false, 0.0});
    f.buses.push_back({"b1", BusKind::load, 12.47, true, 450.0});
    f.buses.push_back({"b2", BusKind::load, 12.47, true, 300.0});
    f.buses.push_back({"b3", BusKind::load, 12.47, true, 150.0});
    f.branches.push_back({"sub", "b1", 0.8, 1.2});
    f.branches.push_back({"b1", "b2", 1.2, 1.6});
    f.branches.push_back({"b2", "b3", 1.2, 1.6});
    return f;
}

struct DispatchFixture {
    Feeder feeder = micro_feeder();
    Vlsm vlsm;
    std::vector<double> base_v;
    MitigationPlan plan;

    DispatchFixture() {
        auto loads = peak_loads(feeder);
        vlsm = compute_vlsm(feeder, loads);
        base_v = vlsm.base_v;
        plan.station_bus = "b3";
        plan.pv_capacity_kva = 800.0;
        plan.es_energy_kwh = 2000.0;
        plan.es_power_kw = 800.0;
        plan.charger_s_kva = 2600.0;
    }
};

TimeSeries flat_series(size_t steps, double value, int step_minutes = 1) {
    TimeSeries ts;
    ts.step_minutes = step_minutes;
    ts.values.assign(steps, value);
    return ts;
}

double worst_unmitigated(const Vlsm& vlsm, const std::vector<double>& base_v, int col,
                         double p_kw) {
    double v_min = 1e9;
    for (size_t i = 0; i < base_v.size(); ++i)
        v_min = std::min(v_min, base_v[i] - vlsm.p_sens[i][col] * p_kw);
    return v_min;
}

} // namespace

TEST_CASE("constant power-factor injection") {
    TimeSeries p = flat_series(3, 0.0);
    p.values = {0.0, 3600.0, 1200.0};
    TimeSeries q = pf_control_series(p, 0.9);
    CHECK(q.values[0] == 0.0);
    CHECK(q.values[1] == doctest::Approx(1743.6).epsilon(1e-4));
    CHECK(q.values[2] == doctest::Approx(581.2).epsilon(1e-4));
    CHECK(pf_injection_kvar(3600.0, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(pf_control_series(p, 0.0), Error);
    CHECK_THROWS_AS(pf_control_series(p, 1.2), Error);
    try {
        pf_injection_kvar(100.0, -0.9);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_pf);
    }
}

TEST_CASE("dispatch on the micro feeder") {
    DispatchFixture fx;
    const int col = fx.vlsm.column("b3");

    SUBCASE("idle station and dark pv leave an all-zero trace") {
        TimeSeries zero = flat_series(120, 0.0);
        DispatchTrace tr = dispatch(fx.plan, zero, zero, fx.vlsm, fx.base_v);
        REQUIRE(tr.steps() == 120);
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(tr.es_kw[t] == 0.0);
            CHECK(tr.pv_p_kw[t] == 0.0);
            CHECK(tr.charger_q_kvar[t] == 0.0);
            CHECK(tr.grid_p_kw[t] == 0.0);
            CHECK(tr.soc[t] == fx.plan.es_initial_soc);
            CHECK(!tr.support_need[t]);
        }
    }

    SUBCASE("support priority runs pv real, then storage, then vars") {
        const double draw = 2400.0;
        REQUIRE(worst_unmitigated(fx.vlsm, fx.base_v, col, draw) < 0.95);
        TimeSeries station = flat_series(30, draw);
        TimeSeries pv = flat_series(30, 500.0);
        DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(tr.support_need[t]);
            CHECK(tr.pv_p_kw[t] == doctest::Approx(500.0)); // pv fully committed first
            if (tr.es_kw[t] > 0.0) CHECK(tr.pv_p_kw[t] == doctest::Approx(500.0));
        }
        // same scenario without pv leans harder on the storage
        DispatchTrace dark = dispatch(fx.plan, station, flat_series(30, 0.0), fx.vlsm, fx.base_v);
        CHECK(dark.es_kw[0] > tr.es_kw[0]);
    }

    SUBCASE("ample assets restore the predicted floor") {
        TimeSeries station = flat_series(60, 2000.0);
        TimeSeries pv = flat_series(60, 700.0);
        DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(tr.predicted_min_v[t] >= 0.95 - 1e-9);
            double unmit = worst_unmitigated(fx.vlsm, fx.base_v, col, tr.station_p_kw[t]);
            CHECK(tr.predicted_min_v[t] >= unmit - 1e-12);
        }
    }

    SUBCASE("storage obeys its power and energy bounds") {
        TimeSeries station = flat_series(240, 0.0);
        TimeSeries pv = flat_series(240, 0.0);
        for (size_t t = 0; t < 240; ++t) {
            station.values[t] = (t / 40) % 2 ? 2600.0 : 0.0;
            pv.values[t] = (t / 40) % 2 ? 0.0 : 750.0;
        }
        DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
        double balance = 0.0;
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(std::abs(tr.es_kw[t]) <= fx.plan.es_power_kw + 1e-12);
            CHECK(tr.soc[t] >= 0.0);
            CHECK(tr.soc[t] <= 1.0);
            double charge = std::max(0.0, -tr.es_kw[t]);
            double dis = std::max(0.0, tr.es_kw[t]);
            balance += (charge * fx.plan.es_efficiency - dis) / 60.0;
        }
        double delta = (tr.soc.back() - fx.plan.es_initial_soc) * fx.plan.es_energy_kwh;
        CHECK(balance == doctest::Approx(delta).epsilon(1e-12).scale(fx.plan.es_energy_kwh));
        CHECK(std::any_of(tr.es_kw.begin(), tr.es_kw.end(), [](double v) { return v < 0.0; }));
        CHECK(std::any_of(tr.es_kw.begin(), tr.es_kw.end(), [](double v) { return v > 0.0; }));
    }

    SUBCASE("charger vars stay inside the converter circle") {
        TimeSeries station = flat_series(30, 2500.0);
        TimeSeries pv = flat_series(30, 0.0);
        MitigationPlan plan = fx.plan;
        plan.es_energy_kwh = 0.0;
        plan.es_power_kw = 0.0;
        DispatchTrace tr = dispatch(plan, station, pv, fx.vlsm, fx.base_v);
        bool used_vars = false;
        for (size_t t = 0; t < tr.steps(); ++t) {
            double cap = std::sqrt(plan.charger_s_kva * plan.charger_s_kva -
                                   tr.station_p_kw[t] * tr.station_p_kw[t]);
            CHECK(tr.charger_q_kvar[t] <= cap + 1e-9);
            used_vars = used_vars || tr.charger_q_kvar[t] > 0.0;
        }
        CHECK(used_vars);
    }

    SUBCASE("night charging drains more than the next day returns") {
        TimeSeries station = flat_series(1440, 0.0);
        TimeSeries pv = flat_series(1440, 0.0);
        for (int t = 0; t < 1440; ++t) {
            int hour = t / 60;
            if (hour < 6) station.values[t] = 2600.0;           // deep night-time need
            if (hour >= 10 && hour < 14) pv.values[t] = 200.0;  // modest midday sun
        }
        DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
        bool charged_midday = false, discharged_night = false;
        for (int t = 0; t < 1440; ++t) {
            if (t / 60 < 6 && tr.es_kw[t] > 0.0) discharged_night = true;
            if (t / 60 >= 10 && t / 60 < 14 && tr.es_kw[t] < 0.0) charged_midday = true;
        }
        CHECK(discharged_night);
        CHECK(charged_midday);
        CHECK(tr.soc.back() < fx.plan.es_initial_soc);
    }

    SUBCASE("pf control injects with every draw, not only during need") {
        MitigationPlan plan = fx.plan;
        plan.pf_control = true;
        plan.pv_capacity_kva = 0.0;
        plan.es_energy_kwh = 0.0;
        plan.es_power_kw = 0.0;
        TimeSeries station = flat_series(10, 600.0); // light draw, no violation
        TimeSeries pv = flat_series(10, 0.0);
        DispatchTrace tr = dispatch(plan, station, pv, fx.vlsm, fx.base_v);
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(!tr.support_need[t]);
            CHECK(tr.charger_q_kvar[t] == doctest::Approx(pf_injection_kvar(600.0, 0.9)));
        }
    }

    SUBCASE("surplus pv is curtailed before it breaks the upper limit") {
        MitigationPlan plan = fx.plan;
        plan.pv_capacity_kva = 30000.0;
        plan.es_energy_kwh = 0.0;
        plan.es_power_kw = 0.0;
        TimeSeries station = flat_series(20, 0.0);
        TimeSeries pv = flat_series(20, 25000.0);
        DispatchTrace tr = dispatch(plan, station, pv, fx.vlsm, fx.base_v);
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(tr.predicted_max_v[t] <= 1.05 + 1e-9);
            CHECK(tr.pv_curtailed_kw[t] > 0.0);
            CHECK(tr.pv_p_kw[t] + tr.pv_curtailed_kw[t] ==
                  doctest::Approx(tr.pv_available_kw[t]));
        }
    }

    SUBCASE("input validation") {
        TimeSeries station = flat_series(10, 2400.0);
        TimeSeries pv = flat_series(10, 0.0);
        TimeSeries shorter = flat_series(9, 0.0);
        CHECK_THROWS_AS(dispatch(fx.plan, station, shorter, fx.vlsm, fx.base_v), Error);
        try {
            dispatch(fx.plan, station, shorter, fx.vlsm, fx.base_v);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::series_mismatch);
        }
        MitigationPlan plan = fx.plan;
        plan.station_bus = "nope";
        CHECK_THROWS_AS(dispatch(plan, station, pv, fx.vlsm, fx.base_v), Error);
        plan = fx.plan;
        plan.charger_s_kva = 1000.0; // below the 2400 kW draw
        try {
            dispatch(plan, station, pv, fx.vlsm, fx.base_v);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::capacity_below_peak);
        }
        plan = fx.plan;
        plan.pf = 1.5;
        CHECK_THROWS_AS(dispatch(plan, station, pv, fx.vlsm, fx.base_v), Error);
        plan = fx.plan;
        plan.es_initial_soc = 1.5;
        CHECK_THROWS_AS(dispatch(plan, station, pv, fx.vlsm, fx.base_v), Error);
        std::vector<double> bad_base(fx.base_v.begin(), fx.base_v.end() - 1);
        CHECK_THROWS_AS(dispatch(fx.plan, station, pv, fx.vlsm, bad_base), Error);
    }
}

TEST_CASE("dispatch against a moving operating point") {
    DispatchFixture fx;
    const size_t n = fx.base_v.size();

    SUBCASE("constant rows reproduce the fixed-base trace") {
        const size_t steps = 240;
        TimeSeries station = flat_series(steps, 0.0);
        TimeSeries pv = flat_series(steps, 0.0);
        for (size_t t = 0; t < steps; ++t) {
            station.values[t] = (t / 40) % 2 ? 2600.0 : 0.0;
            pv.values[t] = (t / 40) % 2 ? 0.0 : 750.0;
        }
        std::vector<std::vector<double>> flat(n);
        for (size_t i = 0; i < n; ++i) flat[i].assign(steps, fx.base_v[i]);

        DispatchTrace fixed = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
        DispatchTrace moving = dispatch(fx.plan, station, pv, fx.vlsm, flat);
        REQUIRE(moving.steps() == fixed.steps());
        for (size_t t = 0; t < fixed.steps(); ++t) {
            CHECK(moving.es_kw[t] == fixed.es_kw[t]);
            CHECK(moving.soc[t] == fixed.soc[t]);
            CHECK(moving.pv_p_kw[t] == fixed.pv_p_kw[t]);
            CHECK(moving.charger_q_kvar[t] == fixed.charger_q_kvar[t]);
            CHECK(moving.grid_p_kw[t] == fixed.grid_p_kw[t]);
            CHECK(moving.grid_q_kvar[t] == fixed.grid_q_kvar[t]);
            CHECK(moving.support_need[t] == fixed.support_need[t]);
            CHECK(moving.predicted_min_v[t] == fixed.predicted_min_v[t]);
        }
    }

    SUBCASE("support windows follow the trajectory's own sag") {
        const size_t steps = 60;
        TimeSeries station = flat_series(steps, 0.0); // the station itself draws nothing
        TimeSeries pv = flat_series(steps, 300.0);
        std::vector<std::vector<double>> traj(n);
        for (size_t i = 0; i < n; ++i) {
            traj[i].assign(steps, fx.base_v[i]);
            for (size_t t = 10; t < 20; ++t) traj[i][t] = fx.base_v[i] - 0.05;
        }
        DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, traj);
        for (size_t t = 0; t < steps; ++t) {
            bool in_sag = t >= 10 && t < 20;
            CHECK(bool(tr.support_need[t]) == in_sag);
            if (in_sag) {
                CHECK(tr.pv_p_kw[t] == doctest::Approx(300.0)); // fully committed
                CHECK(tr.es_kw[t] >= 0.0);
            } else {
                CHECK(tr.es_kw[t] < 0.0); // quiet steps bank the pv
            }
        }
    }

    SUBCASE("row validation") {
        TimeSeries station = flat_series(10, 0.0);
        TimeSeries pv = flat_series(10, 0.0);
        std::vector<std::vector<double>> missing_row(n - 1, std::vector<double>(10, 1.0));
        try {
            dispatch(fx.plan, station, pv, fx.vlsm, missing_row);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_config);
        }
        std::vector<std::vector<double>> short_row(n, std::vector<double>(10, 1.0));
        short_row.back().pop_back();
        try {
            dispatch(fx.plan, station, pv, fx.vlsm, short_row);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::series_mismatch);
        }
    }
}

TEST_CASE("the safety band leans on vars while the store keeps banking") {
    DispatchFixture fx;
    const int col = fx.vlsm.column("b3");
    MitigationPlan plan = fx.plan;
    plan.margin_v = 0.02;
    plan.es_initial_soc = 0.25;
    const double lower = plan.limits.lower;

    // a draw that lands mid-band: above the lower limit, below the target
    double band_draw = 0.0;
    for (double d = 100.0; d <= 2500.0; d += 25.0) {
        double worst = worst_unmitigated(fx.vlsm, fx.base_v, col, d);
        if (worst > lower + 0.008 && worst < lower + 0.014) {
            band_draw = d;
            break;
        }
    }
    REQUIRE(band_draw > 0.0);

    SUBCASE("band steps take vars first and keep charging") {
        TimeSeries station = flat_series(40, band_draw);
        TimeSeries pv = flat_series(40, 300.0);
        DispatchTrace tr = dispatch(plan, station, pv, fx.vlsm, fx.base_v);
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(!tr.support_need[t]); // band, not deficit
            CHECK(tr.charger_q_kvar[t] > 0.0);
            CHECK(tr.es_kw[t] <= 0.0); // the store never discharges here
            CHECK(tr.predicted_min_v[t] >= lower + plan.margin_v - 1e-9);
        }
        CHECK(std::any_of(tr.es_kw.begin(), tr.es_kw.end(), [](double v) { return v < 0.0; }));

        // the same draw with no margin asks nothing of the converter
        MitigationPlan tight = plan;
        tight.margin_v = 0.0;
        DispatchTrace idle = dispatch(tight, station, pv, fx.vlsm, fx.base_v);
        for (size_t t = 0; t < idle.steps(); ++t) CHECK(idle.charger_q_kvar[t] == 0.0);
    }

    SUBCASE("deficit steps never charge") {
        TimeSeries station = flat_series(30, 2400.0);
        TimeSeries pv = flat_series(30, 300.0);
        REQUIRE(worst_unmitigated(fx.vlsm, fx.base_v, col, 2400.0) < lower);
        DispatchTrace tr = dispatch(plan, station, pv, fx.vlsm, fx.base_v);
        for (size_t t = 0; t < tr.steps(); ++t) {
            CHECK(tr.support_need[t]);
            CHECK(tr.es_kw[t] >= 0.0);
            CHECK(tr.pv_p_kw[t] == doctest::Approx(300.0));
        }
    }
}

TEST_CASE("effective pv accounting") {
    DispatchFixture fx;
    const int col = fx.vlsm.column("b3");
    const double draw = 2400.0;
    REQUIRE(worst_unmitigated(fx.vlsm, fx.base_v, col, draw) < 0.95);

    auto day = [&](bool pv_during_need) {
        TimeSeries station = flat_series(1440, 0.0);
        TimeSeries pv = flat_series(1440, 0.0);
        for (int t = 0; t < 1440; ++t) {
            int hour = t / 60;
            if (hour >= 18 && hour < 22) station.values[t] = draw;
            int pv_lo = pv_during_need ? 18 : 10;
            if (hour >= pv_lo && hour < pv_lo + 4) pv.values[t] = 400.0;
        }
        return std::make_pair(station, pv);
    };

    SUBCASE("pv coincident with need and no storage counts in full") {
        auto [station, pv] = day(true);
        MitigationPlan plan = fx.plan;
        plan.es_energy_kwh = 0.0;
        plan.es_power_kw = 0.0;
        DispatchTrace tr = dispatch(plan, station, pv, fx.vlsm, fx.base_v);
        CHECK(effective_pv_fraction(tr) == doctest::Approx(1.0));
    }
    SUBCASE("pv outside the need window and no storage counts for nothing") {
        auto [station, pv] = day(false);
        MitigationPlan plan = fx.plan;
        plan.es_energy_kwh = 0.0;
        plan.es_power_kw = 0.0;
        DispatchTrace tr = dispatch(plan, station, pv, fx.vlsm, fx.base_v);
        CHECK(effective_pv_fraction(tr) == doctest::Approx(0.0));
    }
    SUBCASE("storage recovers most of the stranded energy") {
        auto [station, pv] = day(false);
        MitigationPlan no_es = fx.plan;
        no_es.es_energy_kwh = 0.0;
        no_es.es_power_kw = 0.0;
        double bare = effective_pv_fraction(dispatch(no_es, station, pv, fx.vlsm, fx.base_v));
        DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
        double with_es = effective_pv_fraction(tr);
        CHECK(with_es > bare);
        CHECK(with_es > 0.5);
        CHECK(with_es <= 1.0);
    }
    SUBCASE("initial stored energy is not counted as pv") {
        auto [station, pv] = day(false);
        pv.values.assign(pv.values.size(), 0.0); // nothing generated, yet the store is half full
        TimeSeries tiny_pv = pv;
        tiny_pv.values[0] = 1.0; // one watt-minute of pv keeps the denominator nonzero
        DispatchTrace tr = dispatch(fx.plan, station, tiny_pv, fx.vlsm, fx.base_v);
        bool discharged = std::any_of(tr.es_kw.begin(), tr.es_kw.end(),
                                      [](double v) { return v > 0.0; });
        CHECK(discharged);
        CHECK(effective_pv_fraction(tr) <= 1.0);
    }
    SUBCASE("flag vector must match the trace") {
        auto [station, pv] = day(true);
        DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
        std::vector<char> flags(tr.steps() - 1, 0);
        CHECK_THROWS_AS(effective_pv_fraction(tr, flags), Error);
    }
}

TEST_CASE("dispatch trace csv round trip") {
    DispatchFixture fx;
    TimeSeries station = flat_series(5, 2400.0);
    TimeSeries pv = flat_series(5, 100.0);
    DispatchTrace tr = dispatch(fx.plan, station, pv, fx.vlsm, fx.base_v);
    const std::string path = "build_test_dispatch_trace.csv";
    save_dispatch_trace_csv(path, tr);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "timestamp,station_p_kw,pv_available_kw,pv_p_kw,pv_curtailed_kw,pv_q_kvar,"
          "charger_q_kvar,es_kw,soc,grid_p_kw,grid_q_kvar,support_need,"
          "predicted_min_v,predicted_max_v");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 5);
    std::remove(path.c_str());
}
