#pragma once

#include "evgrid/network.hpp"
#include "evgrid/powerflow.hpp"

#include <string>
#include <vector>

namespace evgrid {

struct VlsmOptions {
    double delta_p_kw = 10.0;
    double delta_q_kvar = 10.0;
    PowerFlowOptions pf;
    int threads = 0; // <= 0 picks hardware concurrency
};

// Voltage-load sensitivity matrices around a fixed operating point. Entry
// [i][a] is the per-unit voltage depression at bus i caused by one extra kW
// (or kvar) drawn at injection bus a; entries are nonnegative and the slack
// row is identically zero.
struct Vlsm {
    std::vector<std::string> bus_ids;         // rows, feeder order
    std::vector<std::string> injection_buses; // columns, load-eligible buses
    std::vector<double> base_v;               // operating-point solution
    std::vector<std::vector<double>> p_sens;  // [bus][column], p.u. per kW
    std::vector<std::vector<double>> q_sens;  // [bus][column], p.u. per kvar
    double delta_p_kw = 0.0;
    double delta_q_kvar = 0.0;

    int column(const std::string& bus) const; // throws UnknownBus
    int row(const std::string& bus) const;    // throws UnknownBus
};

Vlsm compute_vlsm(const Feeder& feeder, const std::vector<LoadPoint>& operating_point,
                  const VlsmOptions& opts = {});

// Linear estimate of all bus voltages when a station draws p_kw / q_kvar at
// the given injection column. Negative values model support injections.
std::vector<double> predict_station_voltage(const Vlsm& vlsm, int column, double p_kw,
                                            double q_kvar = 0.0);

// sum: adds up the per-bus compensation needs (can overestimate, since one
// injection helps every bus at once). max_deficit: the smallest support that
// lifts the most demanding bus, which under the linear model is also enough
// for all the others.
enum class RefEstimator { sum, max_deficit };

struct RefResult {
    double p_ref_kw = 0.0;    // compensation totals that would lift every
    double q_ref_kvar = 0.0;  // depressed bus back to the reference voltage
    std::vector<double> predicted_v;     // per bus at full station draw
    std::vector<double> deficit_v;       // min(0, predicted - v_ref), per bus
    int contributing_buses = 0;
};

// Aggregates per-bus compensation needs at full station draw p_c_max. Buses
// whose predicted voltage stays at or above v_ref contribute nothing. Under
// the sum estimator a depressed bus with a zero sensitivity entry raises
// ZeroSensitivity; the max estimator skips buses the station cannot reach.
RefResult compute_refs(const Vlsm& vlsm, int column, double p_c_max_kw, double v_ref = 0.95,
                       RefEstimator estimator = RefEstimator::sum);

enum class LocationClass { best, good, worst };

const char* location_class_name(LocationClass c);
LocationClass location_class_from_name(const std::string& name);

struct RankEntry {
    std::string bus;
    double score = 0.0; // total predicted depression at full draw, lower is better
    LocationClass cls = LocationClass::best;
};

struct Ranking {
    double p_c_max_kw = 0.0;
    std::vector<RankEntry> entries; // best first
    const RankEntry& representative(LocationClass cls) const; // median of the class
    std::vector<std::string> members(LocationClass cls) const;
};

// Orders candidate connection points by how little total voltage depression a
// station of p_c_max kW would cause, then splits the order into terciles.
Ranking rank_locations(const Vlsm& vlsm, double p_c_max_kw);
Ranking rank_locations(const Feeder& feeder, double p_c_max_kw,
                       const VlsmOptions& opts = {});

} // namespace evgrid
