// Release gate: one line per criterion, each checked at its stated tolerance
// and wall-time budget. Exit code is the number of failed criteria.

#include "evgrid/errors.hpp"
#include "evgrid/mitigation.hpp"
#include "evgrid/network.hpp"
#include "evgrid/powerflow.hpp"
#include "evgrid/profiles.hpp"
#include "evgrid/scenarios.hpp"
#include "evgrid/sensitivity.hpp"
#include "evgrid/sizing.hpp"
#include "evgrid/station.hpp"
#include "evgrid/timeseries.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace evgrid;

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string num(double v, int prec = 1) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
}

struct Gate {
    int failed = 0;
    int index = 0;

    void run(const std::string& label, double budget_s,
             const std::function<std::string(bool&)>& body) {
        ++index;
        auto t0 = std::chrono::steady_clock::now();
        bool ok = true;
        std::string detail;
        try {
            detail = body(ok);
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt > budget_s) {
            ok = false;
            detail += " [over the time budget]";
        }
        std::printf("[%s] %2d. %s: %s  (%.2f s / %.0f s)\n", ok ? "PASS" : "FAIL", index,
                    label.c_str(), detail.c_str(), dt, budget_s);
        std::fflush(stdout);
        if (!ok) ++failed;
    }
};

const SizingInputs kRefInputs{3600.0, 1294.0, 0.0, 1.0, 0.0, 4.75, 1.0};

PriceSet ref_prices(double charger_per_kva = 17956.0) {
    return make_price_set(charger_per_kva, 1000.0, 661.0, 350.0, kRefInputs.alpha,
                          kRefInputs.beta);
}

double chain_cost(const PriceSet& prices, double s_charger) {
    double q = charger_reactive_capacity(s_charger, kRefInputs.p_c_max_kw);
    double s_pv = std::max(0.0, kRefInputs.q_ref_kvar - q);
    return system_cost(s_charger, s_pv, prices);
}

std::string criterion_charger_size(bool& ok) {
    SizingResult r = size_system(kRefInputs, ref_prices());
    ok &= near(r.s_charger_kva, 3718.0, 1.0);
    return "S_charger = " + num(r.s_charger_kva) + " kVA (target 3718 +- 1)";
}

std::string criterion_price_identity(bool& ok) {
    double pv_es = ref_prices().pv_es_per_kva;
    ok &= near(pv_es, 4489.75, 1e-9);
    ok &= std::abs(pv_es - 4489.0) <= 1.0;
    return "bundled pv-storage rate = " + num(pv_es, 2) +
           " $/kVA (1000 + 4.75 x 661 + 1.0 x 350)";
}

std::string criterion_reactive_chain(bool& ok) {
    const double q_chg = charger_reactive_capacity(3718.0, 3600.0);
    const double s_pv = (kRefInputs.q_ref_kvar - q_chg) / kRefInputs.eta;
    const double e_es = kRefInputs.alpha * s_pv;
    ok &= near(q_chg, 929.3, 0.1);
    ok &= near(s_pv, 364.7, 0.1);
    ok &= std::abs(s_pv - 364.0) <= 1.0;
    ok &= near(e_es, 1732.0, 1.0);
    ok &= std::abs(e_es - 1641.0) > 50.0; // a 1641 kWh store would break the alpha coupling

    SizingResult full = size_system(kRefInputs, ref_prices());
    ok &= near(full.s_pv_kva, s_pv, 1.0);
    ok &= near(full.e_es_kwh, kRefInputs.alpha * full.s_pv_kva, 1e-9);
    return "Q_charger = " + num(q_chg) + " kvar, S_PV = " + num(s_pv) + " kVA, E_ES = " +
           num(e_es) + " kWh (= alpha x S_PV, not 1641)";
}

std::string criterion_cost_regimes(bool& ok) {
    const double pv_es = ref_prices().pv_es_per_kva;
    const double p_max = kRefInputs.p_c_max_kw;
    const double q_ref = kRefInputs.q_ref_kvar;
    const struct {
        double mult;
        int regime;
        char shape; // f falls, u unimodal, r rises
    } cases[] = {{0.1, 5, 'f'}, {0.5, 4, 'f'}, {1.0, 3, 'f'}, {2.0, 2, 'u'}, {10.0, 1, 'r'}};

    double worst_slope = 0.0;
    std::string regimes;
    for (const auto& c : cases) {
        PriceSet prices = ref_prices(c.mult * pv_es);
        int regime = classify_scenario(prices);
        ok &= regime == c.regime;
        regimes += (regimes.empty() ? "" : "/") + std::to_string(regime);

        auto curve = cost_curve(prices, p_max, q_ref, 2000);
        const double eps = 1e-9 * curve.front().second;
        std::size_t arg_min = 0;
        for (std::size_t i = 1; i < curve.size(); ++i)
            if (curve[i].second < curve[arg_min].second) arg_min = i;
        for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
            double d = curve[i + 1].second - curve[i].second;
            if (c.shape == 'f') ok &= d <= eps;
            if (c.shape == 'r') ok &= d >= -eps;
            if (c.shape == 'u') ok &= i < arg_min ? d <= eps : d >= -eps;
        }
        if (c.shape == 'u') {
            ok &= arg_min > 0 && arg_min + 1 < curve.size();
            double grid = curve[1].first - curve[0].first;
            ok &= near(optimal_charger_size(prices, p_max, q_ref), curve[arg_min].first,
                       2.0 * grid);
        }

        const double h = 0.02;
        for (double s = 3650.0; s <= 3810.0; s += 5.0) {
            double numeric = (chain_cost(prices, s + h) - chain_cost(prices, s - h)) / (2.0 * h);
            double analytic = cost_slope(prices, s, p_max);
            double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
            worst_slope = std::max(worst_slope, rel);
        }
    }
    ok &= worst_slope <= 1e-6;
    return "regimes " + regimes + ", curve shapes hold, slope vs central differences <= " +
           sci(worst_slope);
}

std::string criterion_powerflow_oracles(bool& ok) {
    Feeder two;
    two.name = "two_bus";
    two.base_power_mva = 10.0;
    two.unit = ImpedanceUnit::per_unit;
    two.buses.push_back({"s", BusKind::slack, 12.47, false, 0.0});
    two.buses.push_back({"a", BusKind::load, 12.47, true, 0.0});
    two.branches.push_back({"s", "a", 0.01, 0.02});
    double analytic = oracle::two_bus_voltage(0.01, 0.02, 0.5, 0.2);
    double solved = solve(two, {{"a", 5000.0, 2000.0}}).at("a");
    double two_bus_gap = std::abs(solved - analytic);
    ok &= two_bus_gap <= 1e-6;

    double worst_residual = 0.0, worst_gap = 0.0;
    for (auto which : {BundledFeeder::ieee34_like, BundledFeeder::single_feeder,
                       BundledFeeder::two_feeder, BundledFeeder::dedicated}) {
        Feeder f = bundled_feeder(which);
        auto loads = peak_loads(f);
        auto v = oracle::gauss_seidel_complex(f, loads);
        worst_residual = std::max(worst_residual, oracle::kcl_residual_pu(f, loads, v));
        auto swept = solve(f, loads);
        for (std::size_t i = 0; i < v.size(); ++i)
            worst_gap = std::max(worst_gap, std::abs(swept.v[i] - std::abs(v[i])));
    }
    ok &= worst_residual <= 1e-6;

    std::mt19937_64 rng(20240603);
    double worst_small = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        Feeder f = oracle::random_feeder(rng);
        auto loads = oracle::random_loads(f, rng);
        auto sweep = solve(f, loads);
        auto gs = oracle::gauss_seidel(f, loads);
        for (std::size_t i = 0; i < gs.size(); ++i)
            worst_small = std::max(worst_small, std::abs(sweep.v[i] - gs[i]));
    }
    ok &= worst_small <= 1e-8;
    ok &= worst_gap <= 1e-6;
    return "two-bus gap " + sci(two_bus_gap) + ", balance residual " + sci(worst_residual) +
           " pu, sweep vs fixed point " + sci(worst_small) + " pu";
}

std::string criterion_sensitivity_fidelity(bool& ok) {
    double worst_rel = 0.0;
    bool identity = true;
    PowerFlowOptions tight;
    tight.tol = 1e-12;
    for (auto which : {BundledFeeder::ieee34_like, BundledFeeder::single_feeder,
                       BundledFeeder::two_feeder, BundledFeeder::dedicated}) {
        Feeder f = to_per_unit(bundled_feeder(which));
        auto loads = peak_loads(f);
        Vlsm vlsm = compute_vlsm(f, loads);
        auto base = solve(f, loads, tight);

        for (std::size_t col = 0; col < vlsm.injection_buses.size(); ++col) {
            auto flat = predict_station_voltage(vlsm, static_cast<int>(col), 0.0, 0.0);
            for (std::size_t i = 0; i < flat.size(); ++i) identity &= flat[i] == vlsm.base_v[i];

            for (int probe = 0; probe < 2; ++probe) {
                auto bumped = loads;
                bumped.push_back({vlsm.injection_buses[col], probe == 0 ? 1.0 : 0.0,
                                  probe == 0 ? 0.0 : 1.0});
                auto moved = solve(f, bumped, tight);
                const auto& sens = probe == 0 ? vlsm.p_sens : vlsm.q_sens;
                for (std::size_t i = 0; i < moved.v.size(); ++i) {
                    double actual = base.v[i] - moved.v[i];
                    if (actual <= 1e-7) continue;
                    double rel = std::abs(sens[i][col] - actual) / actual;
                    worst_rel = std::max(worst_rel, rel);
                }
            }
        }
    }
    ok &= worst_rel <= 0.05;
    ok &= identity;
    return "worst 1 kW/1 kvar prediction error " + num(100.0 * worst_rel, 2) +
           "% (limit 5%), zero-draw identity exact";
}

std::string criterion_station_simulator(bool& ok) {
    double worst_rel = 0.0;
    double peaks[3] = {0.0, 0.0, 0.0};
    const int port_counts[3] = {1, 3, 6};
    for (int p = 0; p < 3; ++p) {
        StationConfig cfg;
        cfg.ports = port_counts[p];
        cfg.days = 30;
        for (int k = 0; k < 20; ++k) {
            cfg.seed = 3 + static_cast<std::uint64_t>(k);
            StationRun run = simulate_station(cfg);
            double delivered = 0.0;
            for (const auto& out : run.vehicles) delivered += out.delivered_kwh;
            double profile = series_energy_kwh(run.demand_kw);
            worst_rel = std::max(worst_rel,
                                 std::abs(profile - delivered) / std::max(1.0, delivered));
            peaks[p] = std::max(peaks[p], run.peak_kw);
        }
        ok &= peaks[p] <= cfg.cap_kw() + 1e-9;
    }
    ok &= worst_rel <= 1e-6;

    StationConfig solo;
    solo.ports = 1;
    solo.days = 1;
    solo.vehicles_per_day = 0;
    Vehicle v;
    v.arrival_minute = default_start_minute();
    v.battery_kwh = 1000.0;
    v.init_soc = 0.3;
    v.target_soc = 0.7;
    StationRun run = simulate_station(solo, {v});
    ok &= run.vehicles.size() == 1;
    ok &= run.vehicles[0].delivered_kwh == 400.0;
    ok &= run.vehicles[0].depart_minute - run.vehicles[0].plug_minute == 20;
    return "energy closed to " + sci(worst_rel) + " over 60 month-long runs, peaks " +
           num(peaks[0], 0) + "/" + num(peaks[1], 0) + "/" + num(peaks[2], 0) +
           " kW within caps, 400 kWh in exactly 20 min";
}

std::string criterion_hosting_properties(bool& ok) {
    MatrixConfig cfg; // all four feeders, 30-day horizon
    MatrixResult result = scenario_matrix(cfg);
    ok &= result.rows.size() == 76;

    // hosted build-outs form a prefix in station size
    std::map<std::string, std::vector<std::pair<int, bool>>> groups;
    for (const auto& row : result.rows) {
        const Scenario& s = row.scenario;
        std::string key = std::string(bundled_feeder_name(s.feeder)) + "|" +
                          location_class_name(s.location_class) + "|" +
                          charging_pattern_name(s.charging) + "|" +
                          load_pattern_name(s.system_pattern);
        groups[key].push_back({s.ports, row.hosted});
    }
    bool prefix = true;
    for (auto& [key, rows] : groups) {
        std::sort(rows.begin(), rows.end());
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].second && !rows[i - 1].second) prefix = false;
    }
    ok &= prefix;

    // control support never reduces hosting; better locations host no less
    std::map<std::string, int> bars;
    for (const auto& bar : result.bars)
        bars[std::string(bundled_feeder_name(bar.feeder)) + "|" +
             location_class_name(bar.location_class) + "|" + mitigation_name(bar.mitigation)] =
            bar.ports;
    bool pf_helps = true, ordered = true;
    int dedicated_ports = -1;
    for (const auto& bar : result.bars) {
        std::string base = std::string(bundled_feeder_name(bar.feeder)) + "|" +
                           location_class_name(bar.location_class) + "|";
        pf_helps &= bars.at(base + "pf_control") >= bars.at(base + "none");
        if (bar.feeder == BundledFeeder::dedicated && bar.mitigation == Mitigation::none)
            dedicated_ports = bar.ports;
    }
    for (auto which :
         {BundledFeeder::ieee34_like, BundledFeeder::single_feeder, BundledFeeder::two_feeder})
        for (const char* mit : {"none", "pf_control"}) {
            std::string base = std::string(bundled_feeder_name(which)) + "|";
            int best = bars.at(base + "best|" + mit);
            int good = bars.at(base + "good|" + mit);
            int worst = bars.at(base + "worst|" + mit);
            ordered &= best >= good && good >= worst;
        }
    ok &= pf_helps;
    ok &= ordered;
    ok &= dedicated_ports == 6;
    return std::string("76 scenarios; hosted set is size-monotone, pf support never hurts, ") +
           "best >= good >= worst, dedicated hosts " + std::to_string(dedicated_ports);
}

std::string criterion_mitigation_study(bool& ok) {
    DispatchStudy study = dispatch_study(7);
    ok &= study.effective_with_es >= 0.90;
    ok &= study.effective_with_es > study.effective_without_es;
    ok &= study.unmitigated.violations > 0;
    ok &= study.mitigated.violations == 0;
    return "effective PV " + num(study.effective_with_es, 4) + " with storage vs " +
           num(study.effective_without_es, 4) + " without; violations " +
           std::to_string(study.unmitigated.violations) + " -> " +
           std::to_string(study.mitigated.violations);
}

std::string criterion_enumeration(bool& ok) {
    const std::size_t ieee = enumerate_scenarios(BundledFeeder::ieee34_like).size();
    const std::size_t single = enumerate_scenarios(BundledFeeder::single_feeder).size();
    const std::size_t dual = enumerate_scenarios(BundledFeeder::two_feeder).size();
    const std::size_t dedicated = enumerate_scenarios(BundledFeeder::dedicated).size();
    ok &= ieee == 36 && single == 18 && dual == 18 && dedicated == 4;
    return std::to_string(ieee) + "/" + std::to_string(single) + "/" + std::to_string(dual) +
           "/" + std::to_string(dedicated) + " scenario rows (expect 36/18/18/4)";
}

} // namespace

int main() {
    Gate gate;
    gate.run("charger size on the bundled price fixture", 1.0, criterion_charger_size);
    gate.run("bundled pv-storage price identity", 1.0, criterion_price_identity);
    gate.run("reactive sizing chain at the rounded charger point", 1.0,
             criterion_reactive_chain);
    gate.run("cost-curve regimes and analytic slope", 5.0, criterion_cost_regimes);
    gate.run("power-flow solutions against independent oracles", 5.0,
             criterion_powerflow_oracles);
    gate.run("sensitivity-matrix fidelity at 1 kW probes", 30.0,
             criterion_sensitivity_fidelity);
    gate.run("station simulator conservation, caps and closed form", 60.0,
             criterion_station_simulator);
    gate.run("hosting landscape properties over the full matrix", 600.0,
             criterion_hosting_properties);
    gate.run("sized mitigation study on the bundled week", 300.0, criterion_mitigation_study);
    gate.run("scenario enumeration counts", 1.0, criterion_enumeration);

    if (gate.failed == 0)
        std::printf("all %d criteria passed\n", gate.index);
    else
        std::printf("%d of %d criteria FAILED\n", gate.failed, gate.index);
    return gate.failed;
}
