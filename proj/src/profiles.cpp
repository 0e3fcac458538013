#include "evgrid/profiles.hpp"
#include "evgrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace evgrid {

const char* load_pattern_name(LoadPattern p) {
    return p == LoadPattern::residential ? "residential" : "commercial";
}

LoadPattern load_pattern_from_name(const std::string& name) {
    if (name == "residential") return LoadPattern::residential;
    if (name == "commercial") return LoadPattern::commercial;
    raise(Errc::bad_config, "load pattern \"" + name + "\"");
}

namespace {

double gaussian_bump(double h, double center, double width) {
    double d = h - center;
    // daily shapes wrap around midnight
    if (d > 12.0) d -= 24.0;
    if (d < -12.0) d += 24.0;
    return std::exp(-(d / width) * (d / width));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Normalized daily curves, roughly peaking at 1.
double base_shape(LoadPattern pattern, double hour) {
    if (pattern == LoadPattern::residential) {
        // night valley ~0.36, broad daytime shoulder ~0.6, evening peak ~1.0
        return 0.35 + 0.25 * gaussian_bump(hour, 14.0, 5.5) +
               0.55 * gaussian_bump(hour, 19.3, 2.3);
    }
    // office plateau between 09:00 and 17:00
    return 0.30 + 0.65 * logistic((hour - 8.5) / 0.8) * logistic((17.5 - hour) / 1.0);
}

bool is_weekend(std::int64_t minute) {
    // 1970-01-01 was a Thursday
    std::int64_t day = minute / 1440;
    int dow = static_cast<int>((day % 7 + 7) % 7); // 0 = Thursday
    return dow == 2 || dow == 3;                   // Saturday, Sunday
}

std::uint64_t substream(std::uint64_t seed, std::uint64_t k) {
    return seed + 0x9E3779B97F4A7C15ULL * (k + 1);
}

} // namespace

SystemLoadSet generate_system_loads(const Feeder& feeder, const LoadProfileOptions& opts) {
    if (opts.days <= 0) raise(Errc::bad_config, "days must be positive");
    if (opts.step_minutes <= 0) raise(Errc::bad_config, "step must be positive");
    if (feeder.system_peak_kw <= 0.0)
        raise(Errc::no_load_buses, feeder.name + " has no system peak to synthesize");

    std::vector<const Bus*> targets;
    for (const auto& b : feeder.buses)
        if (b.peak_kw > 0.0) targets.push_back(&b);
    if (targets.empty()) raise(Errc::no_load_buses, feeder.name + " has no loaded buses");

    const std::int64_t start =
        opts.start_minute >= 0 ? opts.start_minute : default_start_minute();
    const int steps = opts.days * 1440 / opts.step_minutes;
    const double tan_phi = reactive_for_pf(1.0, opts.pf);

    SystemLoadSet out;
    out.aggregate_p = {start, opts.step_minutes, std::vector<double>(steps, 0.0)};

    const double phi = 0.985; // AR(1) pole per minute step
    const double sigma = 0.05 * std::sqrt(1.0 - phi * phi);

    for (std::size_t k = 0; k < targets.size(); ++k) {
        std::mt19937_64 rng(substream(opts.seed, k));
        std::lognormal_distribution<double> size_dist(0.0, 0.25);
        std::uniform_real_distribution<double> jitter_dist(-90.0, 90.0);
        std::normal_distribution<double> noise_dist(0.0, sigma);

        const double bus_peak = targets[k]->peak_kw * size_dist(rng);
        const double jitter_min = jitter_dist(rng);

        BusSeries bs;
        bs.bus = targets[k]->id;
        bs.p_kw = {start, opts.step_minutes, std::vector<double>(steps, 0.0)};
        bs.q_kvar = bs.p_kw;

        double noise = 0.0;
        for (int t = 0; t < steps; ++t) {
            std::int64_t minute = start + static_cast<std::int64_t>(t) * opts.step_minutes;
            double hour = (minute_of_day(minute) + jitter_min) / 60.0;
            double value = base_shape(opts.pattern, hour) * bus_peak;
            if (is_weekend(minute))
                value *= opts.pattern == LoadPattern::commercial ? 0.6 : 1.05;
            noise = phi * noise + noise_dist(rng);
            value *= std::max(0.0, 1.0 + noise);
            bs.p_kw.values[t] = value;
            out.aggregate_p.values[t] += value;
        }
        out.loads.push_back(std::move(bs));
    }

    double aggregate_peak = series_max(out.aggregate_p);
    double scale = feeder.system_peak_kw / aggregate_peak;
    double bus_peak_sum = 0.0;
    for (auto& bs : out.loads) {
        for (int t = 0; t < steps; ++t) {
            bs.p_kw.values[t] *= scale;
            bs.q_kvar.values[t] = bs.p_kw.values[t] * tan_phi;
        }
        bus_peak_sum += series_max(bs.p_kw);
    }
    for (auto& v : out.aggregate_p.values) v *= scale;
    out.diversity_factor = bus_peak_sum / feeder.system_peak_kw;
    return out;
}

const std::vector<double>& pv_clearness_ladder() {
    static const std::vector<double> ladder = {1.0, 0.85, 0.7, 0.5, 0.35, 0.2, 0.1};
    return ladder;
}

TimeSeries generate_pv_profile(const PvProfileOptions& opts) {
    if (opts.capacity_kw < 0.0) raise(Errc::negative_power, "pv capacity");
    if (opts.days <= 0) raise(Errc::bad_config, "days must be positive");
    if (opts.step_minutes <= 0) raise(Errc::bad_config, "step must be positive");

    const std::int64_t start =
        opts.start_minute >= 0 ? opts.start_minute : default_start_minute();
    const int steps = opts.days * 1440 / opts.step_minutes;
    TimeSeries pv{start, opts.step_minutes, std::vector<double>(steps, 0.0)};

    const auto& ladder = pv_clearness_ladder();
    std::mt19937_64 rng(substream(opts.seed, 7));
    const double phi = 0.97;
    std::normal_distribution<double> noise_dist(0.0, std::sqrt(1.0 - phi * phi));

    double noise = 0.0;
    for (int t = 0; t < steps; ++t) {
        std::int64_t minute = start + static_cast<std::int64_t>(t) * opts.step_minutes;
        std::int64_t day_index = (minute - start) / 1440;
        double clearness = ladder[day_index % ladder.size()];
        double hour = minute_of_day(minute) / 60.0;

        noise = phi * noise + noise_dist(rng); // advance even at night for continuity
        if (hour < 6.0 || hour > 20.0) continue;

        double bell = std::sin(M_PI * (hour - 6.0) / 14.0);
        double value = opts.capacity_kw * clearness * bell;
        double cloud_scale = 0.8 * (1.0 - clearness);
        if (cloud_scale > 0.0) value *= std::max(0.0, 1.0 + cloud_scale * noise);
        pv.values[t] = std::clamp(value, 0.0, opts.capacity_kw);
    }
    return pv;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

double parse_double(const std::string& text, const std::string& path) {
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
        raise(Errc::io_error, path + ": bad number \"" + text + "\"");
    return v;
}

void finish_series(TimeSeries& s, const std::vector<std::int64_t>& stamps,
                   const std::string& path) {
    if (stamps.empty()) raise(Errc::empty_series, path);
    s.start_minute = stamps.front();
    s.step_minutes = stamps.size() > 1 ? static_cast<int>(stamps[1] - stamps[0]) : 1;
    if (s.step_minutes <= 0) raise(Errc::io_error, path + ": non-increasing timestamps");
    for (std::size_t i = 1; i < stamps.size(); ++i)
        if (stamps[i] - stamps[i - 1] != s.step_minutes)
            raise(Errc::io_error, path + ": uneven sampling at " + format_minute(stamps[i]));
}

} // namespace

void save_series_csv(const TimeSeries& series, const std::string& path,
                     const std::string& header) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << "timestamp," << header << "\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << format_minute(series.minute_at(i)) << "," << format_double(series.values[i])
            << "\n";
    if (!out) raise(Errc::io_error, "short write to " + path);
}

TimeSeries load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) raise(Errc::empty_series, path);

    TimeSeries series;
    std::vector<std::int64_t> stamps;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2) raise(Errc::io_error, path + ": expected 2 columns");
        stamps.push_back(parse_minute(fields[0]));
        series.values.push_back(parse_double(fields[1], path));
    }
    finish_series(series, stamps, path);
    return series;
}

void save_bus_series_csv(const std::vector<BusSeries>& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << "timestamp,bus,p_kw,q_kvar\n";
    for (const auto& bs : set) {
        for (std::size_t i = 0; i < bs.p_kw.size(); ++i) {
            double q = bs.q_kvar.values.empty() ? 0.0 : bs.q_kvar.values[i];
            out << format_minute(bs.p_kw.minute_at(i)) << "," << bs.bus << ","
                << format_double(bs.p_kw.values[i]) << "," << format_double(q) << "\n";
        }
    }
    if (!out) raise(Errc::io_error, "short write to " + path);
}

std::vector<BusSeries> load_bus_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) raise(Errc::empty_series, path);

    std::vector<BusSeries> set;
    std::vector<std::vector<std::int64_t>> stamps;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4) raise(Errc::io_error, path + ": expected 4 columns");
        const std::string& bus = fields[1];
        if (set.empty() || set.back().bus != bus) {
            for (const auto& existing : set)
                if (existing.bus == bus)
                    raise(Errc::io_error, path + ": rows for " + bus + " are not contiguous");
            set.emplace_back();
            set.back().bus = bus;
            stamps.emplace_back();
        }
        stamps.back().push_back(parse_minute(fields[0]));
        set.back().p_kw.values.push_back(parse_double(fields[2], path));
        set.back().q_kvar.values.push_back(parse_double(fields[3], path));
    }
    if (set.empty()) raise(Errc::empty_series, path);
    for (std::size_t k = 0; k < set.size(); ++k) {
        finish_series(set[k].p_kw, stamps[k], path);
        set[k].q_kvar.start_minute = set[k].p_kw.start_minute;
        set[k].q_kvar.step_minutes = set[k].p_kw.step_minutes;
        require_aligned(set[k].p_kw, set[0].p_kw);
    }
    return set;
}

} // namespace evgrid
