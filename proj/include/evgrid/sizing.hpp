#pragma once

#include "evgrid/timeseries.hpp"

#include <utility>
#include <vector>

namespace evgrid {

// Unit prices for the station hardware. pv_es_per_kva is the bundled price of
// one kVA of PV plus the storage that rides along with it (alpha kWh and beta
// kW per PV kVA); make_price_set derives it so the identity always holds.
struct PriceSet {
    double charger_per_kva = 0.0;
    double pv_per_kva = 0.0;
    double es_per_kwh = 0.0;
    double es_per_kw = 0.0;
    double pv_es_per_kva = 0.0;
};

PriceSet make_price_set(double charger_per_kva, double pv_per_kva, double es_per_kwh,
                        double es_per_kw, double alpha, double beta);

struct SizingInputs {
    double p_c_max_kw = 0.0;  // station peak real draw
    double q_ref_kvar = 0.0;  // reactive support target at peak
    double p_ref_kw = 0.0;    // real support target at peak
    double eta = 1.0;         // PV inverter reactive share Q_PV / S_PV, in (0, 1]
    double delta = 0.0;       // minimum onsite real generation, fraction of p_ref
    double alpha = 0.0;       // kWh of storage per kVA of PV
    double beta = 0.0;        // kW of storage per kVA of PV
};

struct SizingResult {
    double s_charger_kva = 0.0;
    double s_pv_kva = 0.0;
    double e_es_kwh = 0.0;
    double p_es_kw = 0.0;
    double cost = 0.0;
    int scenario = 0;               // price regime 1..5, see classify_scenario
    bool constraint_binding = false; // minimum-generation floor forced the PV size up
};

// Reactive headroom of a charger rated s_charger kVA while drawing its full
// p_c_max kW: sqrt(s^2 - p^2). Throws CapacityBelowPeak when s < p.
double charger_reactive_capacity(double s_charger_kva, double p_c_max_kw);

// Capital cost of a charger/PV pair; the storage paired with the PV is priced
// inside pv_es_per_kva.
double system_cost(double s_charger_kva, double s_pv_kva, const PriceSet& prices);

// Price regimes that shape the cost curve over charger size:
//   1  charger >> pv_es (ratio >= 10): cost only rises, buy the smallest charger
//   2  charger >  pv_es: interior optimum at optimal_charger_size
//   3  charger == pv_es: cost only falls, buy the largest useful charger
//   4  charger <  pv_es: same direction as 3
//   5  charger << pv_es (ratio >= 10, or a free charger): same direction as 3
int classify_scenario(const PriceSet& prices);

// Charger size minimizing total cost in regime 2, clamped to the size at
// which the charger alone covers q_ref. Throws DegeneratePrices outside the
// regime (charger price not above the bundled PV price).
double optimal_charger_size(const PriceSet& prices, double p_c_max_kw, double q_ref_kvar);

// Largest charger size worth buying: beyond it the charger alone meets q_ref.
double max_useful_charger_size(double p_c_max_kw, double q_ref_kvar);

// Full sizing chain: pick the charger for the price regime, cover the
// remaining reactive need with PV, enforce the minimum-generation floor, and
// attach storage via alpha/beta. Throws InfeasibleEta when the floor is
// active but the inverter is configured pure-var (eta == 1).
SizingResult size_system(const SizingInputs& in, const PriceSet& prices);

// cost as a function of charger size over [p_c_max, max useful size], with PV
// shrinking as the charger grows; for plots and monotonicity checks.
std::vector<std::pair<double, double>> cost_curve(const PriceSet& prices, double p_c_max_kw,
                                                  double q_ref_kvar, int points = 200);

// Analytic d(cost)/d(s_charger) along cost_curve, undefined at s == p_c_max.
double cost_slope(const PriceSet& prices, double s_charger_kva, double p_c_max_kw);

struct AlphaBeta {
    double alpha = 0.0; // kWh of storage per kVA of PV
    double beta = 0.0;  // kW of storage per kVA of PV
};

// Empirical storage-per-PV coefficients. For each candidate PV size on a grid
// (10%..200% of grid_ref_kva) and each day, an unbounded lossless store
// absorbs PV output beyond the concurrent need and releases it into later
// need; the peak stored energy and peak charge rate become one (size, E, P)
// sample, and both coefficients come from least squares through the origin.
// pv_days hold output per kVA of PV; need_days hold kW of support need.
AlphaBeta fit_alpha_beta(const std::vector<TimeSeries>& pv_days,
                         const std::vector<TimeSeries>& need_days, double grid_ref_kva);

} // namespace evgrid
