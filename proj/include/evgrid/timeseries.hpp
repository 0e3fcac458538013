#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evgrid {

// Uniformly sampled trajectory (kW, kvar or p.u. volts), one sample per
// minute. Timestamps are minutes since 1970-01-01T00:00 UTC.
struct TimeSeries {
    std::int64_t start_minute = 0;
    int step_minutes = 1;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
    std::int64_t minute_at(std::size_t i) const noexcept {
        return start_minute + static_cast<std::int64_t>(i) * step_minutes;
    }
};

// Default start for bundled fixtures: 2024-06-03T00:00 (a Monday).
std::int64_t default_start_minute();

std::int64_t minute_from_civil(int year, int month, int day, int hour, int min);
std::string format_minute(std::int64_t minute); // "YYYY-MM-DDTHH:MM"
std::int64_t parse_minute(const std::string& stamp);

// Minute of day in [0, 1440).
int minute_of_day(std::int64_t minute);

// Throws SeriesLengthMismatch unless both series share start, step and length.
void require_aligned(const TimeSeries& a, const TimeSeries& b);

double series_max(const TimeSeries& s);
double series_min(const TimeSeries& s);
// Integral of a kW series in kWh.
double series_energy_kwh(const TimeSeries& s);

} // namespace evgrid
