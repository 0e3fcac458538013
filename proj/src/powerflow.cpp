#include "evgrid/powerflow.hpp"
#include "evgrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace evgrid {

double PowerFlowResult::at(const std::string& bus) const {
    for (std::size_t i = 0; i < bus_ids.size(); ++i)
        if (bus_ids[i] == bus) return v[i];
    raise(Errc::unknown_bus, bus);
}

double PowerFlowResult::min_v() const {
    double best = std::numeric_limits<double>::infinity();
    for (double x : v) best = std::min(best, x);
    return best;
}

SweepSolver::SweepSolver(const Feeder& feeder) {
    std::vector<std::string> order = validate_radial(feeder);
    Feeder pu = to_per_unit(feeder);

    ids_.reserve(pu.buses.size());
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < pu.buses.size(); ++i) {
        ids_.push_back(pu.buses[i].id);
        index[pu.buses[i].id] = static_cast<int>(i);
        if (pu.buses[i].kind == BusKind::slack) slack_ = static_cast<int>(i);
    }
    base_kva_ = pu.base_power_mva * 1000.0;

    parent_.assign(ids_.size(), -1);
    z_.assign(ids_.size(), {0.0, 0.0});
    std::vector<std::vector<std::pair<int, const Branch*>>> adj(ids_.size());
    for (const auto& br : pu.branches) {
        int f = index.at(br.from);
        int t = index.at(br.to);
        adj[f].push_back({t, &br});
        adj[t].push_back({f, &br});
    }
    // order is leaves first, slack last; walk it backwards to assign parents
    std::vector<char> placed(ids_.size(), 0);
    placed[slack_] = 1;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int at = index.at(*it);
        for (auto [next, br] : adj[at]) {
            if (!placed[next]) {
                placed[next] = 1;
                parent_[next] = at;
                z_[next] = {br->r, br->x};
            }
        }
    }
    sweep_.reserve(order.size());
    for (const auto& id : order) sweep_.push_back(index.at(id));
}

int SweepSolver::bus_index(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (ids_[i] == id) return static_cast<int>(i);
    raise(Errc::unknown_bus, id);
}

std::vector<double> SweepSolver::solve_indexed(const std::vector<double>& p_kw,
                                               const std::vector<double>& q_kvar,
                                               const PowerFlowOptions& opts,
                                               const std::vector<std::complex<double>>* initial,
                                               int* iterations) const {
    const std::size_t n = ids_.size();
    std::vector<std::complex<double>> v(n, {opts.slack_v, 0.0});
    if (initial && initial->size() == n) v = *initial;
    v[slack_] = {opts.slack_v, 0.0};

    std::vector<std::complex<double>> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = {p_kw[i] / base_kva_, q_kvar[i] / base_kva_};

    std::vector<std::complex<double>> current(n);
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<int>(i) == slack_ || (s[i].real() == 0.0 && s[i].imag() == 0.0)) {
                current[i] = {0.0, 0.0};
                continue;
            }
            if (std::abs(v[i]) < 1e-6)
                raise(Errc::no_convergence, "voltage collapse at bus " + ids_[i]);
            current[i] = std::conj(s[i] / v[i]);
        }
        for (int i : sweep_)
            if (parent_[i] >= 0) current[parent_[i]] += current[i];

        double delta = 0.0;
        for (auto it = sweep_.rbegin(); it != sweep_.rend(); ++it) {
            int i = *it;
            if (parent_[i] < 0) continue;
            std::complex<double> next = v[parent_[i]] - z_[i] * current[i];
            delta = std::max(delta, std::abs(next - v[i]));
            v[i] = next;
        }
        if (delta < opts.tol) {
            if (iterations) *iterations = iter;
            std::vector<double> mag(n);
            for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(v[i]);
            return mag;
        }
    }
    raise(Errc::no_convergence,
          "no convergence after " + std::to_string(opts.max_iter) + " iterations");
}

PowerFlowResult SweepSolver::solve(const std::vector<LoadPoint>& loads,
                                   const PowerFlowOptions& opts) const {
    std::vector<double> p(ids_.size(), 0.0), q(ids_.size(), 0.0);
    for (const auto& ld : loads) {
        int i = bus_index(ld.bus);
        if (i == slack_) raise(Errc::invalid_bus, "load at slack bus " + ld.bus);
        p[i] += ld.p_kw;
        q[i] += ld.q_kvar;
    }
    PowerFlowResult out;
    out.bus_ids = ids_;
    out.v = solve_indexed(p, q, opts, nullptr, &out.iterations);
    return out;
}

PowerFlowResult solve(const Feeder& feeder, const std::vector<LoadPoint>& loads,
                      const PowerFlowOptions& opts) {
    return SweepSolver(feeder).solve(loads, opts);
}

double reactive_for_pf(double p_kw, double pf) {
    if (pf <= 0.0 || pf > 1.0)
        raise(Errc::invalid_pf, "power factor " + std::to_string(pf));
    return p_kw * std::tan(std::acos(pf));
}

std::vector<LoadPoint> peak_loads(const Feeder& feeder, double pf) {
    std::vector<LoadPoint> loads;
    for (const auto& b : feeder.buses)
        if (b.peak_kw > 0.0) loads.push_back({b.id, b.peak_kw, reactive_for_pf(b.peak_kw, pf)});
    return loads;
}

QstsResult qsts(const Feeder& feeder, const std::vector<BusSeries>& loads,
                const QstsOptions& opts, const StepObserver& observe) {
    if (loads.empty()) raise(Errc::empty_profiles, "qsts needs at least one load series");

    SweepSolver solver(feeder);
    const std::size_t n = solver.size();

    struct Mapped {
        int bus;
        const TimeSeries* p;
        const TimeSeries* q;
    };
    std::vector<Mapped> mapped;
    const TimeSeries& ref = loads.front().p_kw;
    if (ref.empty()) raise(Errc::empty_series, "load series for " + loads.front().bus);
    for (const auto& series : loads) {
        int bus = solver.bus_index(series.bus);
        if (bus == solver.slack_index())
            raise(Errc::invalid_bus, "load series at slack bus " + series.bus);
        require_aligned(ref, series.p_kw);
        if (!series.q_kvar.values.empty()) require_aligned(ref, series.q_kvar);
        mapped.push_back({bus, &series.p_kw, series.q_kvar.values.empty() ? nullptr : &series.q_kvar});
    }

    const int steps = static_cast<int>(ref.size());
    QstsResult out;
    out.bus_ids = solver.bus_ids();
    out.steps = steps;
    out.start_minute = ref.start_minute;
    out.step_minutes = ref.step_minutes;
    out.v_min.assign(n, std::numeric_limits<double>::infinity());
    out.v_max.assign(n, -std::numeric_limits<double>::infinity());
    out.min_v_series.assign(steps, 0.0);
    out.violating_buses_per_step.assign(steps, 0);
    out.global_min = {-1, -1, std::numeric_limits<double>::infinity()};
    out.global_max = {-1, -1, -std::numeric_limits<double>::infinity()};
    if (opts.keep_trajectories)
        out.trajectories.assign(n, std::vector<double>(steps, 0.0));

    std::vector<double> p(n), q(n);
    std::vector<std::complex<double>> warm;
    std::vector<double> v;
    for (int t = 0; t < steps; ++t) {
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(q.begin(), q.end(), 0.0);
        for (const auto& m : mapped) {
            p[m.bus] += m.p->values[t];
            if (m.q) q[m.bus] += m.q->values[t];
        }
        v = solver.solve_indexed(p, q, opts.pf, warm.empty() ? nullptr : &warm);
        warm.resize(n);
        for (std::size_t i = 0; i < n; ++i) warm[i] = {v[i], 0.0};

        double step_min = std::numeric_limits<double>::infinity();
        int step_violations = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double vi = v[i];
            out.v_min[i] = std::min(out.v_min[i], vi);
            out.v_max[i] = std::max(out.v_max[i], vi);
            step_min = std::min(step_min, vi);
            if (vi < out.global_min.v) out.global_min = {t, static_cast<int>(i), vi};
            if (vi > out.global_max.v) out.global_max = {t, static_cast<int>(i), vi};
            if (!within_limits(vi, opts.limits)) {
                ++step_violations;
                ++out.violation_count;
                if (out.violations.size() < opts.max_recorded_violations)
                    out.violations.push_back({t, static_cast<int>(i), vi});
            }
            if (opts.keep_trajectories) out.trajectories[i][t] = vi;
        }
        out.min_v_series[t] = step_min;
        out.violating_buses_per_step[t] = step_violations;
        if (observe) observe(t, v);
    }
    return out;
}

ViolationSummary violation_scan(const QstsResult& result, const VoltageLimits& limits) {
    ViolationSummary sum;
    sum.count = result.violation_count;
    for (int c : result.violating_buses_per_step)
        if (c > 0) ++sum.steps_with;
    double low_depth = limits.lower - result.global_min.v;
    double high_depth = result.global_max.v - limits.upper;
    sum.any_low = low_depth > 0.0;
    sum.any_high = high_depth > 0.0;
    const Violation& worst = high_depth > low_depth ? result.global_max : result.global_min;
    sum.worst_v = worst.v;
    sum.worst_step = worst.step;
    if (worst.bus >= 0 && worst.bus < static_cast<int>(result.bus_ids.size()))
        sum.worst_bus = result.bus_ids[worst.bus];
    return sum;
}

} // namespace evgrid
