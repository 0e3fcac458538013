#pragma once

#include "evgrid/network.hpp"
#include "evgrid/powerflow.hpp"
#include "evgrid/timeseries.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evgrid {

enum class LoadPattern { residential, commercial };

const char* load_pattern_name(LoadPattern p);
LoadPattern load_pattern_from_name(const std::string& name);

struct LoadProfileOptions {
    LoadPattern pattern = LoadPattern::residential;
    int days = 30;
    int step_minutes = 1;
    std::int64_t start_minute = -1; // -1 means default_start_minute()
    double pf = 0.95;               // lagging, applied to every bus
    std::uint64_t seed = 1;
};

struct SystemLoadSet {
    std::vector<BusSeries> loads; // one entry per bus with peak_kw > 0
    TimeSeries aggregate_p;       // sum over buses; its maximum equals the
                                  // feeder system peak by construction
    double diversity_factor = 0.0; // sum of bus peaks / aggregate peak
};

// Synthesizes per-bus minute-resolution load shapes: a daily base curve for
// the pattern, a lognormal per-bus size factor, a per-bus peak-time jitter
// and multiplicative AR(1) noise. All bus series are then scaled together so
// the aggregate peak hits feeder.system_peak_kw exactly.
SystemLoadSet generate_system_loads(const Feeder& feeder, const LoadProfileOptions& opts);

struct PvProfileOptions {
    double capacity_kw = 0.0;
    int days = 7;
    int step_minutes = 1;
    std::int64_t start_minute = -1;
    std::uint64_t seed = 2;
};

// Clear-day output follows a sine bell between 06:00 and 20:00 peaking at
// 13:00; subsequent days cycle through a fixed clearness ladder with cloud
// noise whose strength grows as the sky gets murkier. Values stay within
// [0, capacity] and the first (clear) day is noise free.
TimeSeries generate_pv_profile(const PvProfileOptions& opts);

// Clearness factors applied day by day (cycled when days > 7).
const std::vector<double>& pv_clearness_ladder();

// CSV, column pair "timestamp,<header>"; timestamps are "YYYY-MM-DDTHH:MM".
void save_series_csv(const TimeSeries& series, const std::string& path,
                     const std::string& header = "value");
TimeSeries load_series_csv(const std::string& path);

// Long-format CSV "timestamp,bus,p_kw,q_kvar", grouped by bus.
void save_bus_series_csv(const std::vector<BusSeries>& set, const std::string& path);
std::vector<BusSeries> load_bus_series_csv(const std::string& path);

} // namespace evgrid
