#include "evgrid/mitigation.hpp"

#include "evgrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

namespace evgrid {

namespace {

constexpr double kEps = 1e-12; // sensitivities at or below this count as zero

void check_plan(const MitigationPlan& plan) {
    if (!(plan.pf > 0.0) || plan.pf > 1.0)
        raise(Errc::invalid_pf, "power factor must lie in (0, 1]");
    if (plan.pv_capacity_kva < 0.0 || plan.es_energy_kwh < 0.0 || plan.es_power_kw < 0.0 ||
        plan.charger_s_kva < 0.0)
        raise(Errc::bad_config, "asset ratings must be nonnegative");
    if (plan.pv_eta < 0.0 || plan.pv_eta > 1.0)
        raise(Errc::bad_config, "pv_eta must lie in [0, 1]");
    if (!(plan.es_efficiency > 0.0) || plan.es_efficiency > 1.0)
        raise(Errc::bad_config, "es_efficiency must lie in (0, 1]");
    if (plan.es_initial_soc < 0.0 || plan.es_initial_soc > 1.0)
        raise(Errc::bad_config, "es_initial_soc must lie in [0, 1]");
    if (plan.limits.upper <= plan.limits.lower)
        raise(Errc::bad_config, "voltage limits must be ordered");
    if (plan.margin_v < 0.0 || plan.limits.lower + plan.margin_v >= plan.limits.upper)
        raise(Errc::bad_config, "support margin must fit inside the limit band");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Core dispatch loop; base(i, t) yields the station-free voltage of bus i at
// step t, so the same body serves fixed and time-varying operating points.
template <class BaseAt>
DispatchTrace run_dispatch(const MitigationPlan& plan, const TimeSeries& station_p,
                           const TimeSeries& pv_profile, const Vlsm& vlsm, BaseAt base) {
    check_plan(plan);
    if (station_p.step_minutes != pv_profile.step_minutes ||
        station_p.start_minute != pv_profile.start_minute ||
        station_p.values.size() != pv_profile.values.size())
        raise(Errc::series_mismatch, "station and pv series must share start, step, and length");

    const int col = vlsm.column(plan.station_bus);
    const size_t n = vlsm.bus_ids.size();
    std::vector<double> ps(n), qs(n);
    for (size_t i = 0; i < n; ++i) {
        ps[i] = vlsm.p_sens[i][col];
        qs[i] = vlsm.q_sens[i][col];
    }

    const double peak = station_p.values.empty()
                            ? 0.0
                            : *std::max_element(station_p.values.begin(), station_p.values.end());
    if (plan.charger_s_kva > 0.0 && plan.charger_s_kva < peak)
        raise(Errc::capacity_below_peak, "charger rating below the station peak draw");

    const double lower = plan.limits.lower;
    const double upper = plan.limits.upper;
    const double target = lower + plan.margin_v;
    const double dt_h = station_p.step_minutes / 60.0;
    const double cap_e = plan.es_energy_kwh;
    const double eff = plan.es_efficiency;
    const double tanphi = std::tan(std::acos(plan.pf));

    DispatchTrace tr;
    tr.start_minute = station_p.start_minute;
    tr.step_minutes = station_p.step_minutes;
    tr.es_energy_kwh = cap_e;
    tr.es_efficiency = eff;
    tr.initial_soc = plan.es_initial_soc;
    const size_t steps = station_p.values.size();
    for (auto* v : {&tr.station_p_kw, &tr.pv_available_kw, &tr.pv_p_kw, &tr.pv_curtailed_kw,
                    &tr.pv_q_kvar, &tr.charger_q_kvar, &tr.es_kw, &tr.soc, &tr.grid_p_kw,
                    &tr.grid_q_kvar, &tr.predicted_min_v, &tr.predicted_max_v})
        v->reserve(steps);
    tr.support_need.reserve(steps);

    double level = plan.es_initial_soc * cap_e;

    for (size_t t = 0; t < steps; ++t) {
        const double p_st = station_p.values[t];
        if (p_st < 0.0) raise(Errc::negative_power, "station draw is negative at step " +
                                                        std::to_string(t));
        const double avail = std::clamp(pv_profile.values[t], 0.0, plan.pv_capacity_kva);

        bool deficit = false, in_band = false;
        for (size_t i = 0; i < n; ++i) {
            const double v = base(i, t) - ps[i] * p_st;
            if (v < lower) deficit = true;
            if (v < target) in_band = true;
        }

        double qc_cap = 0.0;
        if (plan.charger_s_kva > 0.0)
            qc_cap = std::sqrt(std::max(0.0, plan.charger_s_kva * plan.charger_s_kva - p_st * p_st));
        const double pf_q = plan.pf_control ? std::min(p_st * tanphi, qc_cap) : 0.0;
        const double pv_q_cap =
            std::min(plan.pv_eta * plan.pv_capacity_kva,
                     std::sqrt(std::max(0.0, plan.pv_capacity_kva * plan.pv_capacity_kva -
                                                 avail * avail)));

        double pv_support = 0.0, dis = 0.0, charge = 0.0, charger_q = pf_q, pv_q = 0.0;
        if (deficit) {
            double real_need = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double d = target - (base(i, t) - ps[i] * p_st);
                if (d > 0.0 && ps[i] > kEps) real_need = std::max(real_need, d / ps[i]);
            }
            pv_support = std::min(avail, real_need);
            const double rem = real_need - pv_support;
            if (rem > 0.0 && plan.es_power_kw > 0.0 && level > 0.0) {
                dis = std::min({rem, plan.es_power_kw, level / dt_h});
                if (dis * dt_h >= level)
                    level = 0.0;
                else
                    level -= dis * dt_h;
            }
            const double p_net = p_st - pv_support - dis;
            double var_need = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double d = target - (base(i, t) - ps[i] * p_net);
                if (d > 0.0 && qs[i] > kEps) var_need = std::max(var_need, d / qs[i]);
            }
            charger_q = std::max(pf_q, std::min(var_need, qc_cap));
            pv_q = std::min(std::max(0.0, var_need - charger_q), pv_q_cap);
        } else if (in_band) {
            double var_need = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double d = target - (base(i, t) - ps[i] * p_st);
                if (d > 0.0 && qs[i] > kEps) var_need = std::max(var_need, d / qs[i]);
            }
            charger_q = std::max(pf_q, std::min(var_need, qc_cap));
            pv_q = std::min(std::max(0.0, var_need - charger_q), pv_q_cap);
            const double q_use = charger_q + pv_q;
            double resid = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double d = target - (base(i, t) - ps[i] * p_st) - qs[i] * q_use;
                if (d > 0.0 && ps[i] > kEps) resid = std::max(resid, d / ps[i]);
            }
            pv_support = std::min(avail, resid);
            const double rem = resid - pv_support;
            if (rem > 0.0 && plan.es_power_kw > 0.0 && level > 0.0) {
                dis = std::min({rem, plan.es_power_kw, level / dt_h});
                if (dis * dt_h >= level)
                    level = 0.0;
                else
                    level -= dis * dt_h;
            }
            const double surplus = avail - pv_support;
            if (dis == 0.0 && surplus > 0.0 && plan.es_power_kw > 0.0 && cap_e > 0.0 &&
                level < cap_e) {
                charge = std::min({surplus, plan.es_power_kw, (cap_e - level) / (eff * dt_h)});
                const double stored = charge * eff * dt_h;
                if (level + stored >= cap_e)
                    level = cap_e;
                else
                    level += stored;
            }
        } else if (avail > 0.0 && plan.es_power_kw > 0.0 && cap_e > 0.0 && level < cap_e) {
            charge = std::min({avail, plan.es_power_kw, (cap_e - level) / (eff * dt_h)});
            const double stored = charge * eff * dt_h;
            if (level + stored >= cap_e)
                level = cap_e;
            else
                level += stored;
        }

        double pv_to_grid = avail - charge;
        const double q_inj = charger_q + pv_q;
        double curtail_need = 0.0;
        {
            const double p_net = p_st - pv_to_grid - dis;
            for (size_t i = 0; i < n; ++i) {
                const double v = base(i, t) - ps[i] * p_net + qs[i] * q_inj;
                if (v > upper && ps[i] > kEps)
                    curtail_need = std::max(curtail_need, (v - upper) / ps[i]);
            }
        }
        const double curtail = std::min(pv_to_grid, curtail_need);
        pv_to_grid -= curtail;

        const double p_net = p_st - pv_to_grid - dis;
        double v_min = std::numeric_limits<double>::infinity();
        double v_max = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            const double v = base(i, t) - ps[i] * p_net + qs[i] * q_inj;
            v_min = std::min(v_min, v);
            v_max = std::max(v_max, v);
        }

        tr.station_p_kw.push_back(p_st);
        tr.pv_available_kw.push_back(avail);
        tr.pv_p_kw.push_back(avail - curtail);
        tr.pv_curtailed_kw.push_back(curtail);
        tr.pv_q_kvar.push_back(pv_q);
        tr.charger_q_kvar.push_back(charger_q);
        tr.es_kw.push_back(dis - charge);
        tr.soc.push_back(cap_e > 0.0 ? level / cap_e : 0.0);
        tr.grid_p_kw.push_back(p_net);
        tr.grid_q_kvar.push_back(-q_inj);
        tr.support_need.push_back(deficit ? 1 : 0);
        tr.predicted_min_v.push_back(v_min);
        tr.predicted_max_v.push_back(v_max);
    }
    return tr;
}

} // namespace

double pf_injection_kvar(double p_kw, double pf) {
    if (!(pf > 0.0) || pf > 1.0) raise(Errc::invalid_pf, "power factor must lie in (0, 1]");
    return p_kw * std::tan(std::acos(pf));
}

TimeSeries pf_control_series(const TimeSeries& station_p, double pf) {
    if (!(pf > 0.0) || pf > 1.0) raise(Errc::invalid_pf, "power factor must lie in (0, 1]");
    TimeSeries q = station_p;
    double tanphi = std::tan(std::acos(pf));
    for (double& v : q.values) v *= tanphi;
    return q;
}

DispatchTrace dispatch(const MitigationPlan& plan, const TimeSeries& station_p,
                       const TimeSeries& pv_profile, const Vlsm& vlsm,
                       const std::vector<double>& base_voltages) {
    if (base_voltages.size() != vlsm.bus_ids.size())
        raise(Errc::bad_config, "base voltage count does not match the sensitivity rows");
    return run_dispatch(plan, station_p, pv_profile, vlsm,
                        [&](size_t i, size_t) { return base_voltages[i]; });
}

DispatchTrace dispatch(const MitigationPlan& plan, const TimeSeries& station_p,
                       const TimeSeries& pv_profile, const Vlsm& vlsm,
                       const std::vector<std::vector<double>>& base_trajectory) {
    if (base_trajectory.size() != vlsm.bus_ids.size())
        raise(Errc::bad_config, "base trajectory rows do not match the sensitivity rows");
    for (const auto& row : base_trajectory)
        if (row.size() != station_p.values.size())
            raise(Errc::series_mismatch, "base trajectory length does not match the station series");
    return run_dispatch(plan, station_p, pv_profile, vlsm,
                        [&](size_t i, size_t t) { return base_trajectory[i][t]; });
}

double effective_pv_fraction(const DispatchTrace& trace) {
    return effective_pv_fraction(trace, trace.support_need);
}

double effective_pv_fraction(const DispatchTrace& trace, const std::vector<char>& support_need) {
    if (support_need.size() != trace.steps())
        raise(Errc::series_mismatch, "support-need flags do not match the trace length");
    const double dt_h = trace.step_minutes / 60.0;
    double level = trace.initial_soc * trace.es_energy_kwh;
    double pv_level = 0.0; // the slice of the store traceable to pv charging
    double available = 0.0, delivered = 0.0;
    for (size_t t = 0; t < trace.steps(); ++t) {
        available += trace.pv_available_kw[t] * dt_h;
        const double charge = std::max(0.0, -trace.es_kw[t]);
        const double dis = std::max(0.0, trace.es_kw[t]);
        const double stored = charge * trace.es_efficiency * dt_h;
        level += stored;
        pv_level += stored;
        double pv_out = 0.0;
        if (dis > 0.0 && level > 0.0) {
            const double out = std::min(dis * dt_h, level);
            pv_out = out * (pv_level / level);
            level -= out;
            pv_level -= pv_out;
        }
        if (support_need[t]) delivered += (trace.pv_p_kw[t] - charge) * dt_h + pv_out;
    }
    return available > 0.0 ? delivered / available : 0.0;
}

void save_dispatch_trace_csv(const std::string& path, const DispatchTrace& trace) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << "timestamp,station_p_kw,pv_available_kw,pv_p_kw,pv_curtailed_kw,pv_q_kvar,"
           "charger_q_kvar,es_kw,soc,grid_p_kw,grid_q_kvar,support_need,"
           "predicted_min_v,predicted_max_v\n";
    for (size_t t = 0; t < trace.steps(); ++t) {
        out << format_minute(trace.start_minute +
                             static_cast<std::int64_t>(t) * trace.step_minutes)
            << ',' << format_double(trace.station_p_kw[t]) << ','
            << format_double(trace.pv_available_kw[t]) << ',' << format_double(trace.pv_p_kw[t])
            << ',' << format_double(trace.pv_curtailed_kw[t]) << ','
            << format_double(trace.pv_q_kvar[t]) << ',' << format_double(trace.charger_q_kvar[t])
            << ',' << format_double(trace.es_kw[t]) << ',' << format_double(trace.soc[t]) << ','
            << format_double(trace.grid_p_kw[t]) << ',' << format_double(trace.grid_q_kvar[t])
            << ',' << int(trace.support_need[t]) << ',' << format_double(trace.predicted_min_v[t])
            << ',' << format_double(trace.predicted_max_v[t]) << '\n';
    }
    if (!out) raise(Errc::io_error, "failed writing " + path);
}

} // namespace evgrid
