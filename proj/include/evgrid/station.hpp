#pragma once

#include "evgrid/timeseries.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evgrid {

enum class ChargingPattern { daytime, multishift };

const char* charging_pattern_name(ChargingPattern p);
ChargingPattern charging_pattern_from_name(const std::string& name);

struct StationConfig {
    int ports = 3;
    double port_power_kw = 1200.0;
    double station_cap_kw = 0.0; // 0 means ports * port_power_kw
    ChargingPattern pattern = ChargingPattern::daytime;
    int vehicles_per_day = 72;
    int days = 30;
    std::int64_t start_minute = -1; // -1 means default_start_minute()
    double battery_min_kwh = 660.0;
    double battery_max_kwh = 1200.0;
    double init_soc_min = 0.1;
    double init_soc_max = 0.4;
    double target_soc = 0.9;
    int max_dwell_minutes = 120;
    std::uint64_t seed = 3;

    double cap_kw() const { return station_cap_kw > 0.0 ? station_cap_kw : ports * port_power_kw; }
    void validate() const; // throws on nonsensical combinations
};

struct Vehicle {
    std::int64_t arrival_minute = 0;
    double battery_kwh = 0.0;
    double init_soc = 0.0;
    double target_soc = 0.9;
};

// One synthetic arrival list: vehicles_per_day arrivals on each simulated
// day, sorted by arrival time. Daytime traffic concentrates between 08:00
// and 18:00; multishift traffic is near uniform around the clock.
std::vector<Vehicle> sample_traffic(const StationConfig& cfg, std::uint64_t seed);

// Fraction of full port power a battery accepts at a state of charge: flat
// up to 0.8, then a linear taper down to 10% at 1.0.
double acceptance_fraction(double soc);

struct VehicleOutcome {
    Vehicle vehicle;
    std::int64_t plug_minute = -1;
    std::int64_t depart_minute = -1;
    double delivered_kwh = 0.0;
    double final_soc = 0.0;
    int wait_minutes = 0;
    bool fully_charged = false;
};

struct StationRun {
    TimeSeries demand_kw; // one-minute station draw
    std::vector<VehicleOutcome> vehicles;
    double energy_kwh = 0.0;
    double peak_kw = 0.0;
    int max_queue = 0;
    double mean_wait_minutes = 0.0;
    int max_wait_minutes = 0;
};

// Minute-stepped port simulation: FIFO queue, per-vehicle acceptance limits,
// equal-share redistribution when the station cap binds, forced departure at
// the dwell limit.
StationRun simulate_station(const StationConfig& cfg);
StationRun simulate_station(const StationConfig& cfg, const std::vector<Vehicle>& traffic);

struct MonteCarloSummary {
    TimeSeries mean_kw;
    TimeSeries max_envelope_kw; // pointwise maximum across iterations
    std::vector<double> peaks_kw;        // per iteration
    std::vector<double> energies_kwh;    // per iteration
    int iterations = 0;
};

// Repeats the simulation with seeds cfg.seed + k for k in [0, iterations).
MonteCarloSummary monte_carlo(const StationConfig& cfg, int iterations,
                              int threads = 0);

} // namespace evgrid
