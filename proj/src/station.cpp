#include "evgrid/station.hpp"
#include "evgrid/errors.hpp"
#include "evgrid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

namespace evgrid {

const char* charging_pattern_name(ChargingPattern p) {
    return p == ChargingPattern::daytime ? "daytime" : "multishift";
}

ChargingPattern charging_pattern_from_name(const std::string& name) {
    if (name == "daytime") return ChargingPattern::daytime;
    if (name == "multishift") return ChargingPattern::multishift;
    raise(Errc::bad_config, "charging pattern \"" + name + "\"");
}

void StationConfig::validate() const {
    if (ports <= 0) raise(Errc::bad_config, "ports must be positive");
    if (port_power_kw <= 0.0) raise(Errc::negative_power, "port power");
    if (station_cap_kw < 0.0) raise(Errc::negative_power, "station cap");
    if (station_cap_kw > 0.0 && station_cap_kw < port_power_kw)
        raise(Errc::capacity_below_peak, "station cap below a single port");
    if (vehicles_per_day < 0) raise(Errc::bad_config, "vehicles_per_day");
    if (days <= 0) raise(Errc::bad_config, "days must be positive");
    if (battery_min_kwh <= 0.0 || battery_max_kwh < battery_min_kwh)
        raise(Errc::bad_config, "battery size range");
    if (init_soc_min < 0.0 || init_soc_max < init_soc_min || init_soc_max > 1.0)
        raise(Errc::bad_config, "initial soc range");
    if (target_soc <= init_soc_max || target_soc > 1.0)
        raise(Errc::bad_config, "target soc must exceed every initial soc");
    if (max_dwell_minutes <= 0) raise(Errc::bad_config, "dwell limit");
}

double acceptance_fraction(double soc) {
    if (soc <= 0.8) return 1.0;
    if (soc >= 1.0) return 0.1;
    return 1.0 - 0.9 * (soc - 0.8) / 0.2;
}

std::vector<Vehicle> sample_traffic(const StationConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> battery(cfg.battery_min_kwh, cfg.battery_max_kwh);
    std::uniform_real_distribution<double> soc(cfg.init_soc_min, cfg.init_soc_max);
    std::normal_distribution<double> morning(9.5 * 60.0, 1.3 * 60.0);
    std::normal_distribution<double> afternoon(15.0 * 60.0, 1.8 * 60.0);
    std::uniform_real_distribution<double> anytime(0.0, 1440.0);

    const std::int64_t start =
        cfg.start_minute >= 0 ? cfg.start_minute : default_start_minute();

    std::vector<Vehicle> fleet;
    fleet.reserve(static_cast<std::size_t>(cfg.days) * cfg.vehicles_per_day);
    for (int day = 0; day < cfg.days; ++day) {
        for (int k = 0; k < cfg.vehicles_per_day; ++k) {
            double minute;
            if (cfg.pattern == ChargingPattern::multishift) {
                minute = anytime(rng);
            } else {
                do {
                    minute = unit(rng) < 0.55 ? morning(rng) : afternoon(rng);
                } while (minute < 0.0 || minute >= 1440.0);
            }
            Vehicle v;
            v.arrival_minute = start + day * 1440 + static_cast<std::int64_t>(minute);
            v.battery_kwh = battery(rng);
            v.init_soc = soc(rng);
            v.target_soc = cfg.target_soc;
            fleet.push_back(v);
        }
    }
    std::stable_sort(fleet.begin(), fleet.end(),
                     [](const Vehicle& a, const Vehicle& b) {
                         return a.arrival_minute < b.arrival_minute;
                     });
    return fleet;
}

StationRun simulate_station(const StationConfig& cfg) {
    return simulate_station(cfg, sample_traffic(cfg, cfg.seed));
}

namespace {

struct Session {
    int vehicle = -1;
    double soc = 0.0;
    std::int64_t plug_minute = 0;
};

// Splits cap_kw across sessions that each want want[i] kW: everyone gets an
// equal share, satisfied sessions return their slack, repeat.
void allocate(std::vector<double>& given, const std::vector<double>& want, double cap_kw) {
    const std::size_t n = want.size();
    given.assign(n, 0.0);
    double total = 0.0;
    for (double w : want) total += w;
    if (total <= cap_kw) {
        given = want;
        return;
    }
    std::vector<char> done(n, 0);
    double budget = cap_kw;
    std::size_t open = n;
    while (open > 0) {
        double share = budget / static_cast<double>(open);
        bool settled = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i] || want[i] > share) continue;
            given[i] = want[i];
            budget -= want[i];
            done[i] = 1;
            --open;
            settled = false;
        }
        if (settled) {
            for (std::size_t i = 0; i < n; ++i)
                if (!done[i]) given[i] = share;
            return;
        }
    }
}

} // namespace

StationRun simulate_station(const StationConfig& cfg, const std::vector<Vehicle>& traffic) {
    cfg.validate();
    const std::int64_t start =
        cfg.start_minute >= 0 ? cfg.start_minute : default_start_minute();
    const int steps = cfg.days * 1440;
    const double cap = cfg.cap_kw();

    StationRun run;
    run.demand_kw = {start, 1, std::vector<double>(steps, 0.0)};
    run.vehicles.resize(traffic.size());
    for (std::size_t i = 0; i < traffic.size(); ++i) {
        run.vehicles[i].vehicle = traffic[i];
        run.vehicles[i].final_soc = traffic[i].init_soc;
        if (traffic[i].battery_kwh <= 0.0) raise(Errc::bad_config, "vehicle battery size");
        if (traffic[i].arrival_minute < start)
            raise(Errc::bad_config, "vehicle arrives before the horizon");
    }

    std::deque<int> queue;
    std::vector<Session> ports;
    std::size_t next_arrival = 0;
    std::vector<double> want, given;

    auto depart = [&](Session& s, std::int64_t minute) {
        VehicleOutcome& out = run.vehicles[s.vehicle];
        out.depart_minute = minute;
        out.final_soc = s.soc;
        out.fully_charged = s.soc >= out.vehicle.target_soc - 1e-9;
    };

    for (int t = 0; t < steps; ++t) {
        const std::int64_t minute = start + t;

        for (std::size_t p = 0; p < ports.size();) {
            Session& s = ports[p];
            bool done = s.soc >= run.vehicles[s.vehicle].vehicle.target_soc - 1e-9;
            bool expired = minute - s.plug_minute >= cfg.max_dwell_minutes;
            if (done || expired) {
                depart(s, minute);
                ports.erase(ports.begin() + static_cast<std::ptrdiff_t>(p));
            } else {
                ++p;
            }
        }

        while (next_arrival < traffic.size() &&
               traffic[next_arrival].arrival_minute <= minute) {
            queue.push_back(static_cast<int>(next_arrival));
            ++next_arrival;
        }

        while (!queue.empty() && ports.size() < static_cast<std::size_t>(cfg.ports)) {
            int idx = queue.front();
            queue.pop_front();
            Session s;
            s.vehicle = idx;
            s.soc = traffic[idx].init_soc;
            s.plug_minute = minute;
            ports.push_back(s);
            VehicleOutcome& out = run.vehicles[idx];
            out.plug_minute = minute;
            out.wait_minutes = static_cast<int>(minute - traffic[idx].arrival_minute);
            run.max_wait_minutes = std::max(run.max_wait_minutes, out.wait_minutes);
        }
        run.max_queue = std::max(run.max_queue, static_cast<int>(queue.size()));

        want.resize(ports.size());
        for (std::size_t p = 0; p < ports.size(); ++p) {
            const Session& s = ports[p];
            const Vehicle& v = run.vehicles[s.vehicle].vehicle;
            double remaining_kwh = std::max(0.0, (v.target_soc - s.soc) * v.battery_kwh);
            want[p] = std::min({cfg.port_power_kw,
                                cfg.port_power_kw * acceptance_fraction(s.soc),
                                remaining_kwh * 60.0});
        }
        allocate(given, want, cap);

        double total = 0.0;
        for (std::size_t p = 0; p < ports.size(); ++p) {
            Session& s = ports[p];
            const Vehicle& v = run.vehicles[s.vehicle].vehicle;
            double energy = given[p] / 60.0;
            s.soc += energy / v.battery_kwh;
            run.vehicles[s.vehicle].delivered_kwh += energy;
            total += given[p];
        }
        run.demand_kw.values[t] = total;
        run.peak_kw = std::max(run.peak_kw, total);
        run.energy_kwh += total / 60.0;
    }

    // horizon ends: close out whatever is still plugged or queued
    for (auto& s : ports) depart(s, start + steps);
    for (int idx : queue) {
        VehicleOutcome& out = run.vehicles[idx];
        out.final_soc = traffic[idx].init_soc;
        out.wait_minutes = static_cast<int>(start + steps - traffic[idx].arrival_minute);
        run.max_wait_minutes = std::max(run.max_wait_minutes, out.wait_minutes);
    }

    double wait_sum = 0.0;
    for (const auto& out : run.vehicles) wait_sum += out.wait_minutes;
    run.mean_wait_minutes = run.vehicles.empty() ? 0.0 : wait_sum / run.vehicles.size();
    return run;
}

MonteCarloSummary monte_carlo(const StationConfig& cfg, int iterations, int threads) {
    cfg.validate();
    if (iterations <= 0) raise(Errc::bad_config, "iterations must be positive");

    std::vector<StationRun> runs(iterations);
    parallel_for(
        static_cast<std::size_t>(iterations),
        [&](std::size_t k) {
            StationConfig it = cfg;
            it.seed = cfg.seed + k;
            runs[k] = simulate_station(it);
        },
        threads);

    MonteCarloSummary sum;
    sum.iterations = iterations;
    sum.mean_kw = runs[0].demand_kw;
    sum.mean_kw.values.assign(sum.mean_kw.size(), 0.0);
    sum.max_envelope_kw = sum.mean_kw;
    for (const auto& run : runs) {
        for (std::size_t t = 0; t < run.demand_kw.size(); ++t) {
            sum.mean_kw.values[t] += run.demand_kw.values[t] / iterations;
            sum.max_envelope_kw.values[t] =
                std::max(sum.max_envelope_kw.values[t], run.demand_kw.values[t]);
        }
        sum.peaks_kw.push_back(run.peak_kw);
        sum.energies_kwh.push_back(run.energy_kwh);
    }
    return sum;
}

} // namespace evgrid
