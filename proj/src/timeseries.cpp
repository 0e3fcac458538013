#include "evgrid/timeseries.hpp"

#include "evgrid/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace evgrid {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

} // namespace

std::int64_t minute_from_civil(int year, int month, int day, int hour, int min) {
    return days_from_civil(year, month, day) * 1440 + hour * 60 + min;
}

std::int64_t default_start_minute() {
    static const std::int64_t m = minute_from_civil(2024, 6, 3, 0, 0);
    return m;
}

std::string format_minute(std::int64_t minute) {
    std::int64_t days = minute / 1440;
    int mod = static_cast<int>(minute - days * 1440);
    if (mod < 0) {
        mod += 1440;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", y, m, d, mod / 60, mod % 60);
    return buf;
}

std::int64_t parse_minute(const std::string& stamp) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    if (std::sscanf(stamp.c_str(), "%d-%d-%dT%d:%d", &y, &mo, &d, &h, &mi) != 5)
        raise(Errc::io_error, "bad timestamp '" + stamp + "'");
    return minute_from_civil(y, mo, d, h, mi);
}

int minute_of_day(std::int64_t minute) {
    std::int64_t m = minute % 1440;
    if (m < 0) m += 1440;
    return static_cast<int>(m);
}

void require_aligned(const TimeSeries& a, const TimeSeries& b) {
    if (a.start_minute != b.start_minute || a.step_minutes != b.step_minutes ||
        a.values.size() != b.values.size())
        raise(Errc::series_length_mismatch,
              "series disagree on start, step or length (" + std::to_string(a.values.size()) +
                  " vs " + std::to_string(b.values.size()) + " samples)");
}

double series_max(const TimeSeries& s) {
    if (s.empty()) raise(Errc::empty_series, "series_max");
    return *std::max_element(s.values.begin(), s.values.end());
}

double series_min(const TimeSeries& s) {
    if (s.empty()) raise(Errc::empty_series, "series_min");
    return *std::min_element(s.values.begin(), s.values.end());
}

double series_energy_kwh(const TimeSeries& s) {
    const double dt_h = s.step_minutes / 60.0;
    return std::accumulate(s.values.begin(), s.values.end(), 0.0) * dt_h;
}

} // namespace evgrid
