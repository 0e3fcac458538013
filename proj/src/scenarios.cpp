#include "evgrid/scenarios.hpp"

#include "evgrid/errors.hpp"
#include "evgrid/mitigation.hpp"
#include "evgrid/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>
#include <utility>

namespace evgrid {

using json = nlohmann::json;

namespace {

constexpr double kControlPf = 0.9;
constexpr double kSizingAlpha = 4.75;
constexpr double kSizingBeta = 1.0;
constexpr double kSupportMargin = 0.02; // sizing and dispatch headroom above the lower limit

PriceSet sizing_prices() {
    return make_price_set(17956.0, 1000.0, 661.0, 350.0, kSizingAlpha, kSizingBeta);
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::vector<LocationClass> location_classes(BundledFeeder which) {
    if (which == BundledFeeder::dedicated) return {LocationClass::best};
    return {LocationClass::best, LocationClass::good, LocationClass::worst};
}

std::vector<int> port_counts(BundledFeeder which) {
    if (which == BundledFeeder::dedicated) return {3, 6};
    return {1, 3, 6};
}

std::vector<LoadPattern> system_patterns(BundledFeeder which) {
    if (which == BundledFeeder::ieee34_like)
        return {LoadPattern::residential, LoadPattern::commercial};
    return {LoadPattern::residential};
}

// Per-feeder state shared across the rows of a matrix run. The maps are
// filled serially before any parallel section; afterwards every accessor
// resolves to a plain lookup.
struct FeederCache {
    Feeder feeder; // per-unit
    std::map<LoadPattern, std::vector<BusSeries>> loads;
    std::map<std::pair<int, int>, TimeSeries> envelopes; // (ports, pattern)
    bool sensed = false;
    Vlsm vlsm;
    bool ranked = false;
    Ranking ranking;
    int residential_baseline = -1; // -1 unknown, 0 violating, 1 clean
    std::map<LoadPattern, std::vector<std::vector<double>>> base_traj;
};

const std::vector<BusSeries>& system_loads(FeederCache& c, LoadPattern pattern, int days,
                                           std::uint64_t seed) {
    auto it = c.loads.find(pattern);
    if (it != c.loads.end()) return it->second;
    std::vector<BusSeries> series;
    if (c.feeder.total_peak_kw() > 0.0) {
        LoadProfileOptions opts;
        opts.pattern = pattern;
        opts.days = days;
        opts.seed = seed + 1;
        series = generate_system_loads(c.feeder, opts).loads;
    }
    return c.loads.emplace(pattern, std::move(series)).first->second;
}

const TimeSeries& station_envelope(FeederCache& c, int ports, ChargingPattern charging,
                                   const ScenarioOptions& opts, std::uint64_t seed) {
    auto key = std::make_pair(ports, static_cast<int>(charging));
    auto it = c.envelopes.find(key);
    if (it != c.envelopes.end()) return it->second;
    StationConfig cfg;
    cfg.ports = ports;
    cfg.port_power_kw = opts.port_power_kw;
    cfg.pattern = charging;
    cfg.days = opts.days;
    cfg.seed = seed + 2;
    auto summary = monte_carlo(cfg, opts.mc_iterations, opts.threads);
    return c.envelopes.emplace(key, std::move(summary.max_envelope_kw)).first->second;
}

const Vlsm& sensitivities(FeederCache& c) {
    if (!c.sensed) {
        c.vlsm = compute_vlsm(c.feeder, peak_loads(c.feeder));
        c.sensed = true;
    }
    return c.vlsm;
}

// Station-free voltage of every bus at every step, so dispatch can tell the
// system's own peak windows from hours with headroom to spare.
const std::vector<std::vector<double>>& baseline_trajectory(FeederCache& c, LoadPattern pattern,
                                                            std::uint64_t seed,
                                                            const ScenarioOptions& opts) {
    auto it = c.base_traj.find(pattern);
    if (it != c.base_traj.end()) return it->second;
    QstsOptions qopts;
    qopts.limits = opts.limits;
    qopts.keep_trajectories = true;
    QstsResult res = qsts(c.feeder, system_loads(c, pattern, opts.days, seed), qopts);
    return c.base_traj.emplace(pattern, std::move(res.trajectories)).first->second;
}

// Scores scale linearly with the station size, so the order and the class
// representatives are the same for every port count; one ranking suffices.
const Ranking& ranking(FeederCache& c, double p_c_max_kw) {
    if (!c.ranked) {
        c.ranking = rank_locations(sensitivities(c), p_c_max_kw);
        c.ranked = true;
    }
    return c.ranking;
}

std::string pick_station_bus(FeederCache& c, const Scenario& s, const ScenarioOptions& opts) {
    if (s.feeder == BundledFeeder::dedicated) return dedicated_station_bus();
    return ranking(c, s.ports * opts.port_power_kw).representative(s.location_class).bus;
}

TimeSeries negated(TimeSeries series) {
    for (double& v : series.values) v = -v;
    return series;
}

// A PV-ES-charger system sized from the bus's own compensation needs,
// together with its operating plan and generation profile.
struct SizedAssets {
    SizingResult sizes;
    MitigationPlan plan;
    TimeSeries pv;
};

SizedAssets sized_assets(FeederCache& c, const std::string& bus, int ports,
                         const TimeSeries& envelope, std::uint64_t seed,
                         const ScenarioOptions& opts) {
    const Vlsm& vlsm = sensitivities(c);
    double p_c_max = ports * opts.port_power_kw;
    RefResult refs = compute_refs(vlsm, vlsm.column(bus), p_c_max,
                                  opts.limits.lower + kSupportMargin, RefEstimator::max_deficit);

    SizingInputs in;
    in.p_c_max_kw = p_c_max;
    in.q_ref_kvar = refs.q_ref_kvar;
    in.p_ref_kw = refs.p_ref_kw;
    in.alpha = kSizingAlpha;
    in.beta = kSizingBeta;

    SizedAssets out;
    out.sizes = size_system(in, sizing_prices());

    if (out.sizes.s_pv_kva > 0.0) {
        PvProfileOptions pv_opts;
        pv_opts.capacity_kw = out.sizes.s_pv_kva;
        pv_opts.days = opts.days;
        pv_opts.seed = seed + 3;
        out.pv = generate_pv_profile(pv_opts);
    } else {
        out.pv = TimeSeries{envelope.start_minute, envelope.step_minutes,
                            std::vector<double>(envelope.size(), 0.0)};
    }

    out.plan.station_bus = bus;
    out.plan.pv_capacity_kva = out.sizes.s_pv_kva;
    out.plan.es_energy_kwh = out.sizes.e_es_kwh;
    out.plan.es_power_kw = out.sizes.p_es_kw;
    out.plan.charger_s_kva = out.sizes.s_charger_kva;
    out.plan.limits = opts.limits;
    out.plan.margin_v = kSupportMargin;
    out.plan.es_initial_soc = 0.0; // commissioned empty so the store holds pv energy only
    return out;
}

DispatchTrace run_sized_dispatch(FeederCache& c, const SizedAssets& assets,
                                 const TimeSeries& envelope, LoadPattern pattern,
                                 std::uint64_t seed, const ScenarioOptions& opts) {
    const Vlsm& vlsm = sensitivities(c);
    if (system_loads(c, pattern, opts.days, seed).empty())
        return dispatch(assets.plan, envelope, assets.pv, vlsm, vlsm.base_v);
    return dispatch(assets.plan, envelope, assets.pv, vlsm,
                    baseline_trajectory(c, pattern, seed, opts));
}

// The station's net grid-side draw under one mitigation mode. Control
// injections appear as negative reactive load; the full asset chain sizes a
// PV-ES-charger system and dispatches it against the feeder's baseline.
BusSeries station_series(FeederCache& c, Mitigation mitigation, const std::string& bus,
                         const TimeSeries& envelope, int ports, LoadPattern pattern,
                         std::uint64_t seed, const ScenarioOptions& opts) {
    if (mitigation == Mitigation::none) return {bus, envelope, {}};
    if (mitigation == Mitigation::pf_control)
        return {bus, envelope, negated(pf_control_series(envelope, kControlPf))};

    SizedAssets assets = sized_assets(c, bus, ports, envelope, seed, opts);
    DispatchTrace trace = run_sized_dispatch(c, assets, envelope, pattern, seed, opts);

    return {bus,
            TimeSeries{envelope.start_minute, envelope.step_minutes, std::move(trace.grid_p_kw)},
            TimeSeries{envelope.start_minute, envelope.step_minutes, std::move(trace.grid_q_kvar)}};
}

ScenarioReport run_with_cache(FeederCache& c, const Scenario& s, const ScenarioOptions& opts) {
    validate_scenario(s);
    const auto& loads = system_loads(c, s.system_pattern, opts.days, s.seed);
    const TimeSeries& envelope = station_envelope(c, s.ports, s.charging, opts, s.seed);
    std::string bus = pick_station_bus(c, s, opts);

    std::vector<BusSeries> all = loads;
    all.push_back(
        station_series(c, s.mitigation, bus, envelope, s.ports, s.system_pattern, s.seed, opts));

    QstsOptions qopts;
    qopts.limits = opts.limits;
    QstsResult res = qsts(c.feeder, all, qopts);

    ScenarioReport rep;
    rep.scenario = s;
    rep.station_bus = bus;
    rep.station_peak_kw = series_max(envelope);
    rep.min_v = res.global_min.v;
    rep.max_v = res.global_max.v;
    rep.worst_bus = res.global_min.bus >= 0 ? res.bus_ids[res.global_min.bus] : "";
    rep.violations = res.violation_count;
    rep.hosted = res.clean();
    return rep;
}

int hosting_with_cache(FeederCache& c, const std::string& bus, Mitigation mitigation,
                       std::uint64_t seed, const ScenarioOptions& opts) {
    if (c.feeder.bus_index(bus) < 0)
        raise(Errc::unknown_bus, "no bus " + bus + " in " + c.feeder.name);

    QstsOptions qopts;
    qopts.limits = opts.limits;
    const auto& loads = system_loads(c, LoadPattern::residential, opts.days, seed);
    if (!loads.empty()) {
        if (c.residential_baseline < 0)
            c.residential_baseline = qsts(c.feeder, loads, qopts).clean() ? 1 : 0;
        if (c.residential_baseline == 0) return 0;
    }

    int hosted = 0;
    for (int ports : {1, 3, 6}) {
        const TimeSeries& envelope =
            station_envelope(c, ports, ChargingPattern::multishift, opts, seed);
        std::vector<BusSeries> all = loads;
        all.push_back(
            station_series(c, mitigation, bus, envelope, ports, LoadPattern::residential, seed, opts));
        QstsResult res = qsts(c.feeder, all, qopts);
        if (!res.clean()) break;
        hosted = ports;
    }
    return hosted;
}

} // namespace

const char* mitigation_name(Mitigation m) {
    switch (m) {
    case Mitigation::none: return "none";
    case Mitigation::pf_control: return "pf_control";
    case Mitigation::pv_es_charger: return "pv_es_charger";
    }
    raise(Errc::bad_config, "unknown mitigation");
}

Mitigation mitigation_from_name(const std::string& name) {
    if (name == "none") return Mitigation::none;
    if (name == "pf_control") return Mitigation::pf_control;
    if (name == "pv_es_charger") return Mitigation::pv_es_charger;
    raise(Errc::bad_config, "unknown mitigation " + name);
}

std::string Scenario::id() const {
    std::string out = bundled_feeder_name(feeder);
    out += ':';
    out += location_class_name(location_class);
    out += ":p";
    out += std::to_string(ports);
    out += ':';
    out += charging_pattern_name(charging);
    out += ':';
    out += load_pattern_name(system_pattern);
    out += ':';
    out += mitigation_name(mitigation);
    return out;
}

void validate_scenario(const Scenario& s) {
    if (s.feeder == BundledFeeder::dedicated) {
        if (s.ports != 3 && s.ports != 6)
            raise(Errc::bad_config, "dedicated feeder models 3 or 6 port build-outs");
        if (s.location_class != LocationClass::best)
            raise(Errc::bad_config, "dedicated feeder has a fixed station location");
        if (s.system_pattern != LoadPattern::residential)
            raise(Errc::bad_config, "dedicated feeder carries no mixed system load");
        return;
    }
    if (s.ports != 1 && s.ports != 3 && s.ports != 6)
        raise(Errc::bad_config, "port count must be 1, 3, or 6");
    if (s.feeder != BundledFeeder::ieee34_like && s.system_pattern == LoadPattern::commercial)
        raise(Errc::bad_config,
              std::string(bundled_feeder_name(s.feeder)) + " models residential system load only");
}

std::vector<Scenario> enumerate_scenarios(BundledFeeder which, std::uint64_t seed) {
    std::vector<Scenario> out;
    for (LocationClass cls : location_classes(which))
        for (int ports : port_counts(which))
            for (ChargingPattern charging : {ChargingPattern::daytime, ChargingPattern::multishift})
                for (LoadPattern pattern : system_patterns(which)) {
                    Scenario s;
                    s.feeder = which;
                    s.location_class = cls;
                    s.ports = ports;
                    s.charging = charging;
                    s.system_pattern = pattern;
                    s.mitigation = Mitigation::none;
                    s.seed = seed;
                    out.push_back(s);
                }
    return out;
}

ScenarioReport run_scenario(const Scenario& s, const ScenarioOptions& opts) {
    FeederCache cache;
    cache.feeder = to_per_unit(bundled_feeder(s.feeder));
    return run_with_cache(cache, s, opts);
}

int hosting_capacity(BundledFeeder feeder, const std::string& bus, Mitigation mitigation,
                     std::uint64_t seed, const ScenarioOptions& opts) {
    FeederCache cache;
    cache.feeder = to_per_unit(bundled_feeder(feeder));
    return hosting_with_cache(cache, bus, mitigation, seed, opts);
}

MatrixResult scenario_matrix(const MatrixConfig& cfg) {
    MatrixResult out;
    std::map<BundledFeeder, FeederCache> caches;
    for (BundledFeeder which : cfg.feeders) {
        if (caches.count(which)) raise(Errc::bad_config, "duplicate feeder in matrix");
        FeederCache& c = caches[which];
        c.feeder = to_per_unit(bundled_feeder(which));
        for (const Scenario& s : enumerate_scenarios(which, cfg.seed)) {
            system_loads(c, s.system_pattern, cfg.options.days, s.seed);
            station_envelope(c, s.ports, s.charging, cfg.options, s.seed);
            pick_station_bus(c, s, cfg.options);
            ScenarioReport placeholder;
            placeholder.scenario = s;
            out.rows.push_back(placeholder);
        }
    }

    parallel_for(
        out.rows.size(),
        [&](std::size_t i) {
            const Scenario s = out.rows[i].scenario;
            out.rows[i] = run_with_cache(caches.at(s.feeder), s, cfg.options);
        },
        cfg.options.threads);

    if (cfg.hosting_bars) {
        for (BundledFeeder which : cfg.feeders) {
            FeederCache& c = caches.at(which);
            for (LocationClass cls : location_classes(which)) {
                std::string bus = which == BundledFeeder::dedicated
                                      ? dedicated_station_bus()
                                      : ranking(c, 3 * cfg.options.port_power_kw)
                                            .representative(cls)
                                            .bus;
                for (Mitigation mit : {Mitigation::none, Mitigation::pf_control}) {
                    HostingBar bar;
                    bar.feeder = which;
                    bar.location_class = cls;
                    bar.bus = bus;
                    bar.mitigation = mit;
                    bar.ports = hosting_with_cache(c, bus, mit, cfg.seed, cfg.options);
                    out.bars.push_back(bar);
                }
            }
        }
    }
    return out;
}

ReferenceCase reference_case() {
    ReferenceCase rc;
    rc.feeder = to_per_unit(bundled_feeder(BundledFeeder::single_feeder));
    rc.vlsm = compute_vlsm(rc.feeder, peak_loads(rc.feeder));
    rc.bus = rank_locations(rc.vlsm, rc.p_c_max_kw).representative(LocationClass::good).bus;
    rc.refs = compute_refs(rc.vlsm, rc.vlsm.column(rc.bus), rc.p_c_max_kw,
                           VoltageLimits{}.lower, RefEstimator::max_deficit);
    return rc;
}

AbProfiles alpha_beta_fixture(std::uint64_t seed) {
    ReferenceCase rc = reference_case();

    StationConfig cfg;
    cfg.ports = 3;
    cfg.pattern = ChargingPattern::multishift;
    cfg.days = 7;
    cfg.seed = seed + 2;
    TimeSeries envelope = monte_carlo(cfg, 10).max_envelope_kw;

    SizingInputs in;
    in.p_c_max_kw = rc.p_c_max_kw;
    in.q_ref_kvar = rc.refs.q_ref_kvar;
    in.p_ref_kw = rc.refs.p_ref_kw;
    in.alpha = kSizingAlpha;
    in.beta = kSizingBeta;
    SizingResult sized = size_system(in, sizing_prices());

    AbProfiles out;
    out.grid_ref_kva = sized.s_pv_kva;

    // fit_alpha_beta sweeps array sizes itself, so it takes per-kVA shapes
    PvProfileOptions pv_opts;
    pv_opts.capacity_kw = 1.0;
    pv_opts.days = 7;
    pv_opts.seed = seed + 3;
    TimeSeries pv = generate_pv_profile(pv_opts);

    // Support matters during the residential evening/night peak; daylight
    // hours carry enough system headroom that the array banks its output.
    TimeSeries need{envelope.start_minute, envelope.step_minutes,
                    std::vector<double>(envelope.size(), 0.0)};
    for (std::size_t i = 0; i < envelope.size(); ++i) {
        int minute = minute_of_day(envelope.minute_at(i));
        bool peak_window = minute >= 17 * 60 || minute < 6 * 60;
        if (peak_window)
            need.values[i] = rc.refs.p_ref_kw * envelope.values[i] / rc.p_c_max_kw;
    }

    auto split_days = [](const TimeSeries& series, int days) {
        std::vector<TimeSeries> out;
        std::size_t per = series.size() / days;
        for (int d = 0; d < days; ++d) {
            TimeSeries day;
            day.start_minute =
                series.start_minute + static_cast<std::int64_t>(d) * per * series.step_minutes;
            day.step_minutes = series.step_minutes;
            day.values.assign(series.values.begin() + d * per,
                              series.values.begin() + (d + 1) * per);
            out.push_back(std::move(day));
        }
        return out;
    };
    out.pv_days = split_days(pv, 7);
    out.need_days = split_days(need, 7);
    return out;
}

DispatchStudy dispatch_study(const Scenario& scenario, const ScenarioOptions& options) {
    Scenario s = scenario;
    s.mitigation = Mitigation::pv_es_charger;
    validate_scenario(s);

    FeederCache c;
    c.feeder = to_per_unit(bundled_feeder(s.feeder));

    DispatchStudy study;
    study.scenario = s;
    study.station_bus = pick_station_bus(c, s, options);

    const TimeSeries& envelope = station_envelope(c, s.ports, s.charging, options, s.seed);
    SizedAssets assets = sized_assets(c, study.station_bus, s.ports, envelope, s.seed, options);
    study.sizes = assets.sizes;
    study.trace = run_sized_dispatch(c, assets, envelope, s.system_pattern, s.seed, options);
    study.effective_with_es = effective_pv_fraction(study.trace);

    SizedAssets bare = assets;
    bare.plan.es_energy_kwh = 0.0;
    bare.plan.es_power_kw = 0.0;
    DispatchTrace no_es = run_sized_dispatch(c, bare, envelope, s.system_pattern, s.seed, options);
    study.effective_without_es = effective_pv_fraction(no_es, study.trace.support_need);

    Scenario plain = s;
    plain.mitigation = Mitigation::none;
    study.unmitigated = run_with_cache(c, plain, options);
    study.mitigated = run_with_cache(c, s, options);
    return study;
}

DispatchStudy dispatch_study(std::uint64_t seed) {
    Scenario s;
    s.feeder = BundledFeeder::single_feeder;
    s.location_class = LocationClass::good;
    s.ports = 3;
    s.charging = ChargingPattern::multishift;
    s.system_pattern = LoadPattern::residential;
    s.mitigation = Mitigation::pv_es_charger;
    s.seed = seed;

    ScenarioOptions opts;
    opts.days = 7;
    return dispatch_study(s, opts);
}

void save_matrix_csv(const MatrixResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << "scenario_id,feeder,location_class,ports,charging_pattern,system_pattern,"
           "mitigation,min_v_pu,max_v_pu,violations,hosted\n";
    for (const auto& row : result.rows) {
        const Scenario& s = row.scenario;
        out << s.id() << ',' << bundled_feeder_name(s.feeder) << ','
            << location_class_name(s.location_class) << ',' << s.ports << ','
            << charging_pattern_name(s.charging) << ',' << load_pattern_name(s.system_pattern)
            << ',' << mitigation_name(s.mitigation) << ',' << format_double(row.min_v) << ','
            << format_double(row.max_v) << ',' << row.violations << ',' << (row.hosted ? 1 : 0)
            << '\n';
    }
    if (!out) raise(Errc::io_error, "failed writing " + path);
}

std::string matrix_summary_json(const MatrixResult& result) {
    json hosting = json::array();
    for (const auto& bar : result.bars) {
        json* slot = nullptr;
        for (auto& entry : hosting)
            if (entry["feeder"] == bundled_feeder_name(bar.feeder) &&
                entry["location"] == location_class_name(bar.location_class)) {
                slot = &entry;
                break;
            }
        if (!slot) {
            hosting.push_back({{"feeder", bundled_feeder_name(bar.feeder)},
                               {"location", location_class_name(bar.location_class)},
                               {"bus", bar.bus}});
            slot = &hosting.back();
        }
        (*slot)[mitigation_name(bar.mitigation)] = bar.ports;
    }

    json per_feeder = json::object();
    long long hosted = 0;
    for (const auto& row : result.rows) {
        const char* name = bundled_feeder_name(row.scenario.feeder);
        if (!per_feeder.contains(name)) per_feeder[name] = {{"rows", 0}, {"hosted", 0}};
        per_feeder[name]["rows"] = per_feeder[name]["rows"].get<int>() + 1;
        if (row.hosted) {
            per_feeder[name]["hosted"] = per_feeder[name]["hosted"].get<int>() + 1;
            ++hosted;
        }
    }

    json summary = {{"scenarios",
                     {{"total", result.rows.size()},
                      {"hosted", hosted},
                      {"violating", static_cast<long long>(result.rows.size()) - hosted}}},
                    {"per_feeder", per_feeder},
                    {"hosting", hosting}};
    return summary.dump(2);
}

} // namespace evgrid
