#include "evgrid/sensitivity.hpp"
#include "evgrid/errors.hpp"
#include "evgrid/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace evgrid {

int Vlsm::column(const std::string& bus) const {
    for (std::size_t a = 0; a < injection_buses.size(); ++a)
        if (injection_buses[a] == bus) return static_cast<int>(a);
    raise(Errc::unknown_bus, "no injection column for " + bus);
}

int Vlsm::row(const std::string& bus) const {
    for (std::size_t i = 0; i < bus_ids.size(); ++i)
        if (bus_ids[i] == bus) return static_cast<int>(i);
    raise(Errc::unknown_bus, bus);
}

Vlsm compute_vlsm(const Feeder& feeder, const std::vector<LoadPoint>& operating_point,
                  const VlsmOptions& opts) {
    if (opts.delta_p_kw <= 0.0 || opts.delta_q_kvar <= 0.0)
        raise(Errc::zero_perturbation, "perturbation sizes must be positive");

    SweepSolver solver(feeder);
    const std::size_t n = solver.size();

    std::vector<double> p0(n, 0.0), q0(n, 0.0);
    for (const auto& ld : operating_point) {
        int i = solver.bus_index(ld.bus);
        if (i == solver.slack_index())
            raise(Errc::invalid_bus, "operating-point load at slack bus " + ld.bus);
        p0[i] += ld.p_kw;
        q0[i] += ld.q_kvar;
    }

    Vlsm out;
    out.bus_ids = solver.bus_ids();
    out.injection_buses = feeder.load_bus_ids();
    if (out.injection_buses.empty())
        raise(Errc::no_load_buses, feeder.name + " has no load-eligible buses");
    out.delta_p_kw = opts.delta_p_kw;
    out.delta_q_kvar = opts.delta_q_kvar;
    out.base_v = solver.solve_indexed(p0, q0, opts.pf);

    const std::size_t cols = out.injection_buses.size();
    out.p_sens.assign(n, std::vector<double>(cols, 0.0));
    out.q_sens.assign(n, std::vector<double>(cols, 0.0));

    std::vector<int> col_bus(cols);
    for (std::size_t a = 0; a < cols; ++a) col_bus[a] = solver.bus_index(out.injection_buses[a]);

    parallel_for(
        cols,
        [&](std::size_t a) {
            std::vector<double> p = p0, q = q0;
            p[col_bus[a]] += opts.delta_p_kw;
            auto vp = solver.solve_indexed(p, q, opts.pf);
            p[col_bus[a]] -= opts.delta_p_kw;
            q[col_bus[a]] += opts.delta_q_kvar;
            auto vq = solver.solve_indexed(p, q, opts.pf);
            for (std::size_t i = 0; i < n; ++i) {
                out.p_sens[i][a] = std::max(0.0, (out.base_v[i] - vp[i]) / opts.delta_p_kw);
                out.q_sens[i][a] = std::max(0.0, (out.base_v[i] - vq[i]) / opts.delta_q_kvar);
            }
        },
        opts.threads);
    return out;
}

std::vector<double> predict_station_voltage(const Vlsm& vlsm, int column, double p_kw,
                                            double q_kvar) {
    if (column < 0 || column >= static_cast<int>(vlsm.injection_buses.size()))
        raise(Errc::unknown_bus, "injection column " + std::to_string(column));
    std::vector<double> v(vlsm.base_v);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] -= vlsm.p_sens[i][column] * p_kw + vlsm.q_sens[i][column] * q_kvar;
    return v;
}

RefResult compute_refs(const Vlsm& vlsm, int column, double p_c_max_kw, double v_ref,
                       RefEstimator estimator) {
    RefResult out;
    out.predicted_v = predict_station_voltage(vlsm, column, p_c_max_kw);
    out.deficit_v.assign(out.predicted_v.size(), 0.0);
    for (std::size_t i = 0; i < out.predicted_v.size(); ++i) {
        double delta = out.predicted_v[i] - v_ref;
        if (delta >= 0.0) continue;
        out.deficit_v[i] = delta;
        ++out.contributing_buses;
        double ps = vlsm.p_sens[i][column];
        double qs = vlsm.q_sens[i][column];
        if (estimator == RefEstimator::sum) {
            if (ps <= 0.0 || qs <= 0.0)
                raise(Errc::zero_sensitivity,
                      "bus " + vlsm.bus_ids[i] + " is depressed but has a zero sensitivity");
            out.p_ref_kw += -delta / ps;
            out.q_ref_kvar += -delta / qs;
        } else {
            // buses the station cannot influence do not define its requirement
            if (ps > 0.0) out.p_ref_kw = std::max(out.p_ref_kw, -delta / ps);
            if (qs > 0.0) out.q_ref_kvar = std::max(out.q_ref_kvar, -delta / qs);
        }
    }
    return out;
}

const char* location_class_name(LocationClass c) {
    switch (c) {
    case LocationClass::best: return "best";
    case LocationClass::good: return "good";
    case LocationClass::worst: return "worst";
    }
    return "?";
}

LocationClass location_class_from_name(const std::string& name) {
    if (name == "best") return LocationClass::best;
    if (name == "good") return LocationClass::good;
    if (name == "worst") return LocationClass::worst;
    raise(Errc::bad_config, "location class \"" + name + "\"");
}

const RankEntry& Ranking::representative(LocationClass cls) const {
    std::size_t lo = 0, hi = 0;
    const std::size_t n = entries.size();
    switch (cls) {
    case LocationClass::best: lo = 0, hi = n / 3; break;
    case LocationClass::good: lo = n / 3, hi = 2 * n / 3; break;
    case LocationClass::worst: lo = 2 * n / 3, hi = n; break;
    }
    if (lo >= hi) raise(Errc::no_load_buses, "empty location class");
    return entries[lo + (hi - lo - 1) / 2];
}

std::vector<std::string> Ranking::members(LocationClass cls) const {
    std::vector<std::string> out;
    for (const auto& e : entries)
        if (e.cls == cls) out.push_back(e.bus);
    return out;
}

Ranking rank_locations(const Vlsm& vlsm, double p_c_max_kw) {
    Ranking rank;
    rank.p_c_max_kw = p_c_max_kw;
    for (std::size_t a = 0; a < vlsm.injection_buses.size(); ++a) {
        double total = 0.0;
        for (std::size_t i = 0; i < vlsm.bus_ids.size(); ++i) total += vlsm.p_sens[i][a];
        rank.entries.push_back({vlsm.injection_buses[a], p_c_max_kw * total});
    }
    std::sort(rank.entries.begin(), rank.entries.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.bus < b.bus;
    });
    const std::size_t n = rank.entries.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (k < n / 3) rank.entries[k].cls = LocationClass::best;
        else if (k < 2 * n / 3) rank.entries[k].cls = LocationClass::good;
        else rank.entries[k].cls = LocationClass::worst;
    }
    return rank;
}

Ranking rank_locations(const Feeder& feeder, double p_c_max_kw, const VlsmOptions& opts) {
    return rank_locations(compute_vlsm(feeder, peak_loads(feeder), opts), p_c_max_kw);
}

} // namespace evgrid
