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

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace evgrid;
using nlohmann::json;

namespace {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

// Everything a run needs, collected from one JSON document plus command-line
// overrides. Defaults describe the bundled reference study, so every command
// works with no config at all.
struct RunConfig {
    std::string feeder = "single_feeder"; // bundled name or feeder json path
    std::uint64_t seed = 7;
    std::string out_dir = ".";
    int days = 7;
    int threads = 0;

    int ports = 3;
    std::string charging = "multishift";
    int vehicles_per_day = 72;
    double port_power_kw = 1200.0;
    int mc_iterations = 10;

    std::string location_class = "good";
    std::string station_bus; // fixed placement instead of the ranked pick

    std::string system_pattern = "residential";
    std::string mitigation = "none";

    std::string loads_csv; // solve input, bus,p_kw,q_kvar

    SizingInputs sizing{3600.0, 1294.0, 0.0, 1.0, 0.0, 4.75, 1.0};
    double charger_per_kva = 17956.0;
    double pv_per_kva = 1000.0;
    double es_per_kwh = 661.0;
    double es_per_kw = 350.0;

    std::string ab_pv_csv;   // fit-ab inputs; empty means the bundled fixture
    std::string ab_need_csv;
    double ab_grid_ref_kva = 0.0;

    std::vector<std::string> matrix_feeders; // empty means all four
    bool hosting_bars = true;
};

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) raise(Errc::bad_config, "unknown key \"" + it.key() + "\" in " + where);
    }
}

template <class T>
void read_key(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        raise(Errc::bad_config, path + ": " + e.what());
    }
    if (!doc.is_object()) raise(Errc::bad_config, path + ": top level must be an object");
    require_keys(doc,
                 {"feeder", "seed", "out_dir", "days", "threads", "station", "location",
                  "system_load", "hosting", "solve", "sizing", "fit_ab", "matrix"},
                 "config");

    RunConfig cfg;
    read_key(doc, "feeder", cfg.feeder);
    read_key(doc, "seed", cfg.seed);
    read_key(doc, "out_dir", cfg.out_dir);
    read_key(doc, "days", cfg.days);
    read_key(doc, "threads", cfg.threads);

    if (doc.contains("station")) {
        const json& st = doc.at("station");
        require_keys(st, {"ports", "charging", "vehicles_per_day", "port_power_kw", "iterations"},
                     "station");
        read_key(st, "ports", cfg.ports);
        read_key(st, "charging", cfg.charging);
        read_key(st, "vehicles_per_day", cfg.vehicles_per_day);
        read_key(st, "port_power_kw", cfg.port_power_kw);
        read_key(st, "iterations", cfg.mc_iterations);
    }
    if (doc.contains("location")) {
        const json& loc = doc.at("location");
        require_keys(loc, {"class", "bus"}, "location");
        read_key(loc, "class", cfg.location_class);
        read_key(loc, "bus", cfg.station_bus);
    }
    if (doc.contains("system_load")) {
        const json& sys = doc.at("system_load");
        require_keys(sys, {"pattern"}, "system_load");
        read_key(sys, "pattern", cfg.system_pattern);
    }
    if (doc.contains("hosting")) {
        const json& h = doc.at("hosting");
        require_keys(h, {"mitigation"}, "hosting");
        read_key(h, "mitigation", cfg.mitigation);
    }
    if (doc.contains("solve")) {
        const json& s = doc.at("solve");
        require_keys(s, {"loads_csv"}, "solve");
        read_key(s, "loads_csv", cfg.loads_csv);
    }
    if (doc.contains("sizing")) {
        const json& sz = doc.at("sizing");
        require_keys(sz,
                     {"p_c_max_kw", "q_ref_kvar", "p_ref_kw", "eta", "delta", "alpha", "beta",
                      "prices"},
                     "sizing");
        read_key(sz, "p_c_max_kw", cfg.sizing.p_c_max_kw);
        read_key(sz, "q_ref_kvar", cfg.sizing.q_ref_kvar);
        read_key(sz, "p_ref_kw", cfg.sizing.p_ref_kw);
        read_key(sz, "eta", cfg.sizing.eta);
        read_key(sz, "delta", cfg.sizing.delta);
        read_key(sz, "alpha", cfg.sizing.alpha);
        read_key(sz, "beta", cfg.sizing.beta);
        if (sz.contains("prices")) {
            const json& pr = sz.at("prices");
            require_keys(pr, {"charger_per_kva", "pv_per_kva", "es_per_kwh", "es_per_kw"},
                         "sizing.prices");
            read_key(pr, "charger_per_kva", cfg.charger_per_kva);
            read_key(pr, "pv_per_kva", cfg.pv_per_kva);
            read_key(pr, "es_per_kwh", cfg.es_per_kwh);
            read_key(pr, "es_per_kw", cfg.es_per_kw);
        }
    }
    if (doc.contains("fit_ab")) {
        const json& ab = doc.at("fit_ab");
        require_keys(ab, {"pv_csv", "need_csv", "grid_ref_kva"}, "fit_ab");
        read_key(ab, "pv_csv", cfg.ab_pv_csv);
        read_key(ab, "need_csv", cfg.ab_need_csv);
        read_key(ab, "grid_ref_kva", cfg.ab_grid_ref_kva);
    }
    if (doc.contains("matrix")) {
        const json& m = doc.at("matrix");
        require_keys(m, {"feeders", "hosting_bars"}, "matrix");
        read_key(m, "feeders", cfg.matrix_feeders);
        read_key(m, "hosting_bars", cfg.hosting_bars);
    }
    return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) raise(Errc::io_error, "cannot create " + cfg.out_dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << text;
    if (!out) raise(Errc::io_error, "failed writing " + path);
}

Feeder config_feeder(const RunConfig& cfg) { return to_per_unit(resolve_feeder(cfg.feeder)); }

StationConfig station_config(const RunConfig& cfg) {
    StationConfig sc;
    sc.ports = cfg.ports;
    sc.port_power_kw = cfg.port_power_kw;
    sc.pattern = charging_pattern_from_name(cfg.charging);
    sc.vehicles_per_day = cfg.vehicles_per_day;
    sc.days = cfg.days;
    sc.seed = cfg.seed;
    sc.validate();
    return sc;
}

ScenarioOptions scenario_options(const RunConfig& cfg) {
    ScenarioOptions opts;
    opts.days = cfg.days;
    opts.mc_iterations = cfg.mc_iterations;
    opts.threads = cfg.threads;
    opts.port_power_kw = cfg.port_power_kw;
    return opts;
}

std::vector<LoadPoint> load_loadpoints_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) raise(Errc::bad_config, path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "bus,p_kw,q_kvar")
        raise(Errc::bad_config, path + ": header must be bus,p_kw,q_kvar");
    std::vector<LoadPoint> loads;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        LoadPoint lp;
        std::string p, q;
        if (!std::getline(row, lp.bus, ',') || !std::getline(row, p, ',') ||
            !std::getline(row, q))
            raise(Errc::bad_config, path + ": malformed row \"" + line + "\"");
        try {
            lp.p_kw = std::stod(p);
            lp.q_kvar = std::stod(q);
        } catch (const std::exception&) {
            raise(Errc::bad_config, path + ": malformed row \"" + line + "\"");
        }
        loads.push_back(lp);
    }
    return loads;
}

int cmd_solve(const RunConfig& cfg) {
    if (cfg.loads_csv.empty()) raise(Errc::bad_config, "solve.loads_csv is required");
    Feeder feeder = config_feeder(cfg);
    std::vector<LoadPoint> loads = load_loadpoints_csv(cfg.loads_csv);
    PowerFlowResult res = solve(feeder, loads);

    std::ostringstream csv;
    csv << "bus_id,v_pu\n";
    for (std::size_t i = 0; i < res.bus_ids.size(); ++i)
        csv << res.bus_ids[i] << ',' << format_double(res.v[i]) << '\n';
    write_text(out_path(cfg, "solution.csv"), csv.str());

    std::printf("min V = %.6f pu after %d iterations\n", res.min_v(), res.iterations);
    std::printf("wrote %s\n", out_path(cfg, "solution.csv").c_str());
    return 0;
}

int cmd_vlsm(const RunConfig& cfg) {
    Feeder feeder = config_feeder(cfg);
    VlsmOptions opts;
    opts.threads = cfg.threads;
    Vlsm vlsm = compute_vlsm(feeder, peak_loads(feeder), opts);

    auto dump = [&](const std::vector<std::vector<double>>& m, const std::string& name) {
        std::ostringstream csv;
        csv << "bus_id,base_v";
        for (const auto& inj : vlsm.injection_buses) csv << ',' << inj;
        csv << '\n';
        for (std::size_t i = 0; i < vlsm.bus_ids.size(); ++i) {
            csv << vlsm.bus_ids[i] << ',' << format_double(vlsm.base_v[i]);
            for (double s : m[i]) csv << ',' << format_double(s);
            csv << '\n';
        }
        write_text(out_path(cfg, name), csv.str());
        std::printf("wrote %s\n", out_path(cfg, name).c_str());
    };
    dump(vlsm.p_sens, "vlsm_p.csv");
    dump(vlsm.q_sens, "vlsm_q.csv");
    std::printf("%zu buses x %zu injection points at system peak\n", vlsm.bus_ids.size(),
                vlsm.injection_buses.size());
    return 0;
}

int cmd_rank(const RunConfig& cfg) {
    Feeder feeder = config_feeder(cfg);
    VlsmOptions opts;
    opts.threads = cfg.threads;
    Ranking rank = rank_locations(feeder, cfg.ports * cfg.port_power_kw, opts);

    std::ostringstream csv;
    csv << "bus_id,score,group\n";
    for (const RankEntry& e : rank.entries)
        csv << e.bus << ',' << format_double(e.score) << ',' << location_class_name(e.cls)
            << '\n';
    write_text(out_path(cfg, "ranking.csv"), csv.str());

    for (LocationClass cls : {LocationClass::best, LocationClass::good, LocationClass::worst})
        std::printf("%s: %s\n", location_class_name(cls), rank.representative(cls).bus.c_str());
    std::printf("wrote %s\n", out_path(cfg, "ranking.csv").c_str());
    return 0;
}

int cmd_station(const RunConfig& cfg) {
    StationConfig sc = station_config(cfg);
    MonteCarloSummary mc = monte_carlo(sc, cfg.mc_iterations, cfg.threads);

    std::ostringstream csv;
    csv << "timestamp,mean_kw,max_kw\n";
    for (std::size_t t = 0; t < mc.mean_kw.size(); ++t)
        csv << format_minute(mc.mean_kw.minute_at(t)) << ','
            << format_double(mc.mean_kw.values[t]) << ','
            << format_double(mc.max_envelope_kw.values[t]) << '\n';
    write_text(out_path(cfg, "station_profile.csv"), csv.str());

    double peak = 0.0, energy = 0.0;
    for (double p : mc.peaks_kw) peak = std::max(peak, p);
    for (double e : mc.energies_kwh) energy += e;
    std::printf("%d ports, %d iterations over %d days\n", sc.ports, mc.iterations, sc.days);
    std::printf("peak = %.1f kW (cap %.1f), mean energy = %.1f kWh/run\n", peak, sc.cap_kw(),
                energy / mc.iterations);
    std::printf("wrote %s\n", out_path(cfg, "station_profile.csv").c_str());
    return 0;
}

int cmd_hosting(const RunConfig& cfg) {
    BundledFeeder which = bundled_feeder_from_name(cfg.feeder);
    Mitigation mit = mitigation_from_name(cfg.mitigation);
    ScenarioOptions opts = scenario_options(cfg);

    std::vector<std::string> buses;
    if (!cfg.station_bus.empty()) {
        buses.push_back(cfg.station_bus);
    } else if (which == BundledFeeder::dedicated) {
        buses.push_back(dedicated_station_bus());
    } else {
        Feeder feeder = config_feeder(cfg);
        VlsmOptions vopts;
        vopts.threads = cfg.threads;
        Ranking rank = rank_locations(feeder, 6 * cfg.port_power_kw, vopts);
        for (LocationClass cls :
             {LocationClass::best, LocationClass::good, LocationClass::worst})
            buses.push_back(rank.representative(cls).bus);
    }

    std::ostringstream csv;
    csv << "feeder,bus,mitigation,ports\n";
    for (const std::string& bus : buses) {
        int ports = hosting_capacity(which, bus, mit, cfg.seed, opts);
        csv << bundled_feeder_name(which) << ',' << bus << ',' << mitigation_name(mit) << ','
            << ports << '\n';
        std::printf("hosted = %d  bus=%s mitigation=%s\n", ports, bus.c_str(),
                    mitigation_name(mit));
    }
    write_text(out_path(cfg, "hosting.csv"), csv.str());
    std::printf("wrote %s\n", out_path(cfg, "hosting.csv").c_str());
    return 0;
}

int cmd_size(const RunConfig& cfg) {
    PriceSet prices = make_price_set(cfg.charger_per_kva, cfg.pv_per_kva, cfg.es_per_kwh,
                                     cfg.es_per_kw, cfg.sizing.alpha, cfg.sizing.beta);
    SizingResult res = size_system(cfg.sizing, prices);

    json doc;
    doc["inputs"] = {{"p_c_max_kw", cfg.sizing.p_c_max_kw},
                     {"q_ref_kvar", cfg.sizing.q_ref_kvar},
                     {"p_ref_kw", cfg.sizing.p_ref_kw},
                     {"eta", cfg.sizing.eta},
                     {"delta", cfg.sizing.delta},
                     {"alpha", cfg.sizing.alpha},
                     {"beta", cfg.sizing.beta}};
    doc["prices"] = {{"charger_per_kva", prices.charger_per_kva},
                     {"pv_per_kva", prices.pv_per_kva},
                     {"es_per_kwh", prices.es_per_kwh},
                     {"es_per_kw", prices.es_per_kw},
                     {"pv_es_per_kva", prices.pv_es_per_kva}};
    doc["result"] = {{"s_charger_kva", res.s_charger_kva},
                     {"s_pv_kva", res.s_pv_kva},
                     {"e_es_kwh", res.e_es_kwh},
                     {"p_es_kw", res.p_es_kw},
                     {"cost_usd", res.cost},
                     {"price_regime", res.scenario},
                     {"generation_floor_binding", res.constraint_binding}};
    write_text(out_path(cfg, "sizing.json"), doc.dump(2) + "\n");

    std::ostringstream csv;
    csv << "s_charger_kva,cost_usd\n";
    for (auto [s, cost] : cost_curve(prices, cfg.sizing.p_c_max_kw, cfg.sizing.q_ref_kvar))
        csv << format_double(s) << ',' << format_double(cost) << '\n';
    write_text(out_path(cfg, "cost_curve.csv"), csv.str());

    std::printf("S_charger = %.1f kVA\n", res.s_charger_kva);
    std::printf("S_PV = %.1f kVA, E_ES = %.1f kWh, P_ES = %.1f kW\n", res.s_pv_kva, res.e_es_kwh,
                res.p_es_kw);
    std::printf("cost = $%.0f (price regime %d)\n", res.cost, res.scenario);
    std::printf("wrote %s and %s\n", out_path(cfg, "sizing.json").c_str(),
                out_path(cfg, "cost_curve.csv").c_str());
    return 0;
}

int cmd_fit_ab(const RunConfig& cfg) {
    AbProfiles profiles;
    if (!cfg.ab_pv_csv.empty() || !cfg.ab_need_csv.empty()) {
        if (cfg.ab_pv_csv.empty() || cfg.ab_need_csv.empty())
            raise(Errc::bad_config, "fit_ab needs both pv_csv and need_csv");
        if (cfg.ab_grid_ref_kva <= 0.0)
            raise(Errc::bad_config, "fit_ab.grid_ref_kva must be positive");
        auto split_days = [](const TimeSeries& all, const std::string& what) {
            if (all.values.empty() || all.values.size() % 1440 != 0)
                raise(Errc::bad_config, what + " must hold whole minute-step days");
            std::vector<TimeSeries> days;
            for (std::size_t d = 0; d < all.values.size() / 1440; ++d) {
                TimeSeries day;
                day.start_minute = all.start_minute + static_cast<std::int64_t>(d) * 1440;
                day.step_minutes = all.step_minutes;
                day.values.assign(all.values.begin() + d * 1440,
                                  all.values.begin() + (d + 1) * 1440);
                days.push_back(std::move(day));
            }
            return days;
        };
        profiles.pv_days = split_days(load_series_csv(cfg.ab_pv_csv), cfg.ab_pv_csv);
        profiles.need_days = split_days(load_series_csv(cfg.ab_need_csv), cfg.ab_need_csv);
        profiles.grid_ref_kva = cfg.ab_grid_ref_kva;
    } else {
        profiles = alpha_beta_fixture(cfg.seed);
    }

    AlphaBeta fit = fit_alpha_beta(profiles.pv_days, profiles.need_days, profiles.grid_ref_kva);
    json doc;
    doc["alpha_kwh_per_kva"] = fit.alpha;
    doc["beta_kw_per_kva"] = fit.beta;
    doc["days"] = profiles.pv_days.size();
    doc["grid_ref_kva"] = profiles.grid_ref_kva;
    write_text(out_path(cfg, "fit_ab.json"), doc.dump(2) + "\n");

    std::printf("alpha = %.3f kWh per kVA of PV\n", fit.alpha);
    std::printf("beta = %.3f kW per kVA of PV\n", fit.beta);
    std::printf("wrote %s\n", out_path(cfg, "fit_ab.json").c_str());
    return 0;
}

int cmd_dispatch(const RunConfig& cfg) {
    Scenario sc;
    sc.feeder = bundled_feeder_from_name(cfg.feeder);
    sc.location_class = location_class_from_name(cfg.location_class);
    sc.ports = cfg.ports;
    sc.charging = charging_pattern_from_name(cfg.charging);
    sc.system_pattern = load_pattern_from_name(cfg.system_pattern);
    sc.seed = cfg.seed;
    DispatchStudy study = dispatch_study(sc, scenario_options(cfg));

    save_dispatch_trace_csv(out_path(cfg, "dispatch_trace.csv"), study.trace);

    json doc;
    doc["scenario"] = study.scenario.id();
    doc["station_bus"] = study.station_bus;
    doc["sizes"] = {{"s_charger_kva", study.sizes.s_charger_kva},
                    {"s_pv_kva", study.sizes.s_pv_kva},
                    {"e_es_kwh", study.sizes.e_es_kwh},
                    {"p_es_kw", study.sizes.p_es_kw}};
    doc["effective_pv"] = {{"with_es", study.effective_with_es},
                           {"without_es", study.effective_without_es}};
    doc["unmitigated"] = {{"min_v_pu", study.unmitigated.min_v},
                          {"violations", study.unmitigated.violations}};
    doc["mitigated"] = {{"min_v_pu", study.mitigated.min_v},
                        {"violations", study.mitigated.violations},
                        {"hosted", study.mitigated.hosted}};
    write_text(out_path(cfg, "dispatch.json"), doc.dump(2) + "\n");

    std::printf("scenario %s at bus %s\n", study.scenario.id().c_str(),
                study.station_bus.c_str());
    std::printf("sized: S_charger = %.1f kVA, S_PV = %.1f kVA, E_ES = %.1f kWh, P_ES = %.1f kW\n",
                study.sizes.s_charger_kva, study.sizes.s_pv_kva, study.sizes.e_es_kwh,
                study.sizes.p_es_kw);
    std::printf("unmitigated: min V = %.5f pu, %lld violating samples\n",
                study.unmitigated.min_v, study.unmitigated.violations);
    std::printf("mitigated:   min V = %.5f pu, %lld violating samples\n", study.mitigated.min_v,
                study.mitigated.violations);
    std::printf("effective PV fraction = %.4f with storage, %.4f without\n",
                study.effective_with_es, study.effective_without_es);
    std::printf("wrote %s and %s\n", out_path(cfg, "dispatch_trace.csv").c_str(),
                out_path(cfg, "dispatch.json").c_str());
    return 0;
}

int cmd_matrix(const RunConfig& cfg) {
    MatrixConfig mc;
    if (!cfg.matrix_feeders.empty()) {
        mc.feeders.clear();
        for (const std::string& name : cfg.matrix_feeders)
            mc.feeders.push_back(bundled_feeder_from_name(name));
    }
    mc.seed = cfg.seed;
    mc.options = scenario_options(cfg);
    mc.hosting_bars = cfg.hosting_bars;

    MatrixResult result = scenario_matrix(mc);
    save_matrix_csv(result, out_path(cfg, "matrix.csv"));
    write_text(out_path(cfg, "matrix_summary.json"), matrix_summary_json(result) + "\n");

    long long hosted = 0;
    for (const auto& row : result.rows) hosted += row.hosted ? 1 : 0;
    std::printf("%zu scenarios, %lld hosted, %zu hosting bars\n", result.rows.size(), hosted,
                result.bars.size());
    std::printf("wrote %s and %s\n", out_path(cfg, "matrix.csv").c_str(),
                out_path(cfg, "matrix_summary.json").c_str());
    return 0;
}

int exit_code_for(Errc code) {
    switch (code) {
    case Errc::bad_config:
    case Errc::io_error:
    case Errc::unknown_feeder:
    case Errc::unknown_bus:
    case Errc::invalid_bus:
    case Errc::empty_series:
    case Errc::empty_profiles:
        return 2;
    default:
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid impact analysis and mitigation sizing for megawatt-scale ev charging"};
    app.require_subcommand(1);

    std::string config_path, out_dir, feeder;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "run configuration json");
    auto* seed_opt = app.add_option("--seed", seed, "master seed override");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--feeder", feeder, "bundled feeder name or feeder json path");

    app.add_subcommand("solve", "one power-flow snapshot from a bus,p_kw,q_kvar loads file");
    app.add_subcommand("vlsm", "voltage sensitivity matrices at system peak");
    app.add_subcommand("rank", "order connection points by station impact");
    app.add_subcommand("station", "monte carlo charging station demand envelope");
    app.add_subcommand("hosting", "largest hostable build-out per location");
    app.add_subcommand("size", "closed-form charger, pv and storage sizing");
    app.add_subcommand("fit-ab", "storage-per-pv coupling ratios from daily profiles");
    app.add_subcommand("dispatch", "size and operate the mitigation assets for one scenario");
    app.add_subcommand("matrix", "full scenario matrix with hosting bars");
    for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (*seed_opt) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!feeder.empty()) cfg.feeder = feeder;
        ensure_out_dir(cfg);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "solve") return cmd_solve(cfg);
        if (cmd == "vlsm") return cmd_vlsm(cfg);
        if (cmd == "rank") return cmd_rank(cfg);
        if (cmd == "station") return cmd_station(cfg);
        if (cmd == "hosting") return cmd_hosting(cfg);
        if (cmd == "size") return cmd_size(cfg);
        if (cmd == "fit-ab") return cmd_fit_ab(cfg);
        if (cmd == "dispatch") return cmd_dispatch(cfg);
        return cmd_matrix(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
