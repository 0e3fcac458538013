#pragma once

#include "evgrid/powerflow.hpp"
#include "evgrid/sensitivity.hpp"
#include "evgrid/timeseries.hpp"

#include <string>
#include <vector>

namespace evgrid {

// Reactive power a charger at |pf| injects while drawing p kw.
double pf_injection_kvar(double p_kw, double pf);

// Per-step var injection for a charger running constant power-factor control:
// Q(t) = P(t) * tan(acos(pf)), zero when idle. Values are injections
// (voltage-raising). Throws InvalidPf outside (0, 1].
TimeSeries pf_control_series(const TimeSeries& station_p, double pf = 0.9);

// The mitigation assets co-located with a station and their operating rules.
struct MitigationPlan {
    std::string station_bus;
    bool pf_control = false;      // constant-pf charger var injection
    double pf = 0.9;
    double pv_capacity_kva = 0.0; // inverter rating; also caps real output
    double pv_eta = 1.0;          // reactive share cap Q_PV <= eta * S_PV
    double es_energy_kwh = 0.0;
    double es_power_kw = 0.0;
    double es_efficiency = 0.95;  // charging efficiency; discharge is lossless
    double es_initial_soc = 0.5;
    double charger_s_kva = 0.0;   // converter rating; 0 disables charger vars
    VoltageLimits limits;
    double margin_v = 0.002;      // support target above the lower limit
};

// Minute-by-minute operating record of the mitigation assets. All power in
// kW/kvar; es_kw is positive discharging, negative charging; pv_p_kw is array
// production (available minus curtailed), part of which may flow into the ES.
struct DispatchTrace {
    std::int64_t start_minute = 0;
    int step_minutes = 1;
    std::vector<double> station_p_kw;    // raw charger draw
    std::vector<double> pv_available_kw; // profile capped at the inverter rating
    std::vector<double> pv_p_kw;
    std::vector<double> pv_curtailed_kw;
    std::vector<double> pv_q_kvar;
    std::vector<double> charger_q_kvar;
    std::vector<double> es_kw;
    std::vector<double> soc;             // after the step
    std::vector<double> grid_p_kw;       // net draw at the connection point
    std::vector<double> grid_q_kvar;     // net reactive draw; negative = injection
    std::vector<char> support_need;      // unmitigated prediction below the lower limit
    std::vector<double> predicted_min_v; // post-mitigation estimates
    std::vector<double> predicted_max_v;
    double es_energy_kwh = 0.0;
    double es_efficiency = 1.0;
    double initial_soc = 0.0;

    size_t steps() const { return station_p_kw.size(); }
};

// Operates the plan against a fixed system operating point. Each step the
// linearized voltages classify the system as in deficit (below the lower
// limit), inside the safety band (below lower + margin), or clear. Deficit
// steps draw support in order PV real, ES discharge, charger vars, PV vars;
// band steps lean on converter vars first so surplus PV keeps charging the
// store; clear steps charge the ES from PV. PV injection is curtailed
// whenever it would push the predicted maximum past the upper limit.
DispatchTrace dispatch(const MitigationPlan& plan, const TimeSeries& station_p,
                       const TimeSeries& pv_profile, const Vlsm& vlsm,
                       const std::vector<double>& base_voltages);

// Same, but the station-free operating point moves per step: base_trajectory
// holds one voltage row per bus, indexed like vlsm.bus_ids, with one entry per
// dispatch step. Support windows then follow the system's own load shape.
DispatchTrace dispatch(const MitigationPlan& plan, const TimeSeries& station_p,
                       const TimeSeries& pv_profile, const Vlsm& vlsm,
                       const std::vector<std::vector<double>>& base_trajectory);

// Share of available PV energy that reached the grid while support was
// needed, directly or through a later ES discharge.
double effective_pv_fraction(const DispatchTrace& trace);
double effective_pv_fraction(const DispatchTrace& trace, const std::vector<char>& support_need);

void save_dispatch_trace_csv(const std::string& path, const DispatchTrace& trace);

} // namespace evgrid
