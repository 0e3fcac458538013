#pragma once

#include "evgrid/network.hpp"
#include "evgrid/timeseries.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace evgrid {

// Positive p/q is consumption; support injections enter as negative values.
struct LoadPoint {
    std::string bus;
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

struct PowerFlowOptions {
    double slack_v = 1.0; // p.u.
    double tol = 1e-8;    // max per-bus voltage change between iterations
    int max_iter = 100;
};

struct PowerFlowResult {
    std::vector<std::string> bus_ids; // feeder bus order
    std::vector<double> v;            // p.u. magnitudes, same order
    int iterations = 0;

    double at(const std::string& bus) const;
    double min_v() const;
};

// Backward/forward sweep solver for radial feeders with constant-power loads.
// Compiles the feeder topology once so repeated solves only pay for sweeps.
class SweepSolver {
public:
    explicit SweepSolver(const Feeder& feeder);

    const std::vector<std::string>& bus_ids() const { return ids_; }
    int bus_index(const std::string& id) const; // throws UnknownBus
    int slack_index() const { return slack_; }
    std::size_t size() const { return ids_.size(); }

    PowerFlowResult solve(const std::vector<LoadPoint>& loads,
                          const PowerFlowOptions& opts = {}) const;

    // p/q per bus index in kW/kvar; initial may seed the iteration (warm start).
    std::vector<double> solve_indexed(const std::vector<double>& p_kw,
                                      const std::vector<double>& q_kvar,
                                      const PowerFlowOptions& opts,
                                      const std::vector<std::complex<double>>* initial = nullptr,
                                      int* iterations = nullptr) const;

private:
    std::vector<std::string> ids_;
    std::vector<int> parent_;                  // parent bus index, -1 at slack
    std::vector<std::complex<double>> z_;      // branch impedance to parent, p.u.
    std::vector<int> sweep_;                   // leaves first, slack last
    int slack_ = -1;
    double base_kva_ = 0.0;
};

PowerFlowResult solve(const Feeder& feeder, const std::vector<LoadPoint>& loads,
                      const PowerFlowOptions& opts = {});

// q_kvar = p_kw * tan(acos(pf)), lagging.
double reactive_for_pf(double p_kw, double pf);

// One LoadPoint per bus with peak_kw > 0, at the given lagging power factor.
std::vector<LoadPoint> peak_loads(const Feeder& feeder, double pf = 0.95);

struct BusSeries {
    std::string bus;
    TimeSeries p_kw;
    TimeSeries q_kvar; // empty means zero
};

struct VoltageLimits {
    double lower = 0.95;
    double upper = 1.05;
};

inline bool within_limits(double v, const VoltageLimits& lim) {
    return v >= lim.lower && v <= lim.upper;
}

struct Violation {
    int step = 0;
    int bus = 0; // feeder bus index
    double v = 0.0;
};

struct QstsOptions {
    PowerFlowOptions pf;
    VoltageLimits limits;
    bool keep_trajectories = false;
    std::size_t max_recorded_violations = 100000;
    // Steps whose power flow finds no solution (load beyond the feeder's
    // maximum transfer, i.e. voltage collapse) are counted instead of
    // aborting the run. Off by default: no convergence raises.
    bool ride_through_collapse = false;
};

using StepObserver = std::function<void(int step, const std::vector<double>& v)>;

struct QstsResult {
    std::vector<std::string> bus_ids;
    int steps = 0;
    std::int64_t start_minute = 0;
    int step_minutes = 1;
    std::vector<double> v_min;               // per bus over the horizon
    std::vector<double> v_max;
    std::vector<double> min_v_series;        // system minimum per step
    std::vector<int> violating_buses_per_step;
    long long violation_count = 0;           // bus-step pairs outside limits
    std::vector<Violation> violations;       // detail, capped
    std::vector<std::vector<double>> trajectories; // [bus][step] when kept
    Violation global_min{-1, -1, 1.0};       // lowest voltage seen anywhere
    Violation global_max{-1, -1, 1.0};       // highest voltage seen anywhere

    bool clean() const { return violation_count == 0; }
};

// Time-series power flow. All series must share start, step and length; the
// per-bus entries are summed when several target the same bus.
QstsResult qsts(const Feeder& feeder, const std::vector<BusSeries>& loads,
                const QstsOptions& opts = {}, const StepObserver& observe = {});

struct ViolationSummary {
    long long count = 0;
    int steps_with = 0;
    double worst_v = 0.0;
    int worst_step = -1;
    std::string worst_bus;
    bool any_low = false;
    bool any_high = false;
};

ViolationSummary violation_scan(const QstsResult& result, const VoltageLimits& limits);

} // namespace evgrid
