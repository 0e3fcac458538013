#include "evgrid/sizing.hpp"

#include "evgrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evgrid {

namespace {

constexpr double kScenarioRatio = 10.0; // ">>" threshold between price regimes

void check_price_identity(const PriceSet& prices, double alpha, double beta) {
    double derived = prices.pv_per_kva + alpha * prices.es_per_kwh + beta * prices.es_per_kw;
    double scale = std::max(1.0, std::abs(derived));
    if (std::abs(prices.pv_es_per_kva - derived) > 1e-9 * scale)
        raise(Errc::bad_config, "pv_es_per_kva does not match its components for alpha=" +
                                    std::to_string(alpha) + " beta=" + std::to_string(beta));
}

void check_inputs(const SizingInputs& in) {
    if (in.p_c_max_kw <= 0.0) raise(Errc::bad_config, "p_c_max_kw must be positive");
    if (in.q_ref_kvar < 0.0) raise(Errc::bad_config, "q_ref_kvar must be nonnegative");
    if (in.p_ref_kw < 0.0) raise(Errc::bad_config, "p_ref_kw must be nonnegative");
    if (!(in.eta > 0.0) || in.eta > 1.0) raise(Errc::bad_config, "eta must lie in (0, 1]");
    if (in.delta < 0.0 || in.delta > 1.0) raise(Errc::bad_config, "delta must lie in [0, 1]");
    if (in.alpha < 0.0 || in.beta < 0.0) raise(Errc::bad_config, "alpha and beta must be nonnegative");
}

} // namespace

PriceSet make_price_set(double charger_per_kva, double pv_per_kva, double es_per_kwh,
                        double es_per_kw, double alpha, double beta) {
    if (charger_per_kva < 0.0 || pv_per_kva < 0.0 || es_per_kwh < 0.0 || es_per_kw < 0.0)
        raise(Errc::bad_config, "prices must be nonnegative");
    if (alpha < 0.0 || beta < 0.0) raise(Errc::bad_config, "alpha and beta must be nonnegative");
    PriceSet p;
    p.charger_per_kva = charger_per_kva;
    p.pv_per_kva = pv_per_kva;
    p.es_per_kwh = es_per_kwh;
    p.es_per_kw = es_per_kw;
    p.pv_es_per_kva = pv_per_kva + alpha * es_per_kwh + beta * es_per_kw;
    return p;
}

double charger_reactive_capacity(double s_charger_kva, double p_c_max_kw) {
    if (p_c_max_kw < 0.0 || s_charger_kva < p_c_max_kw)
        raise(Errc::capacity_below_peak, "charger rating " + std::to_string(s_charger_kva) +
                                             " kVA cannot carry peak " +
                                             std::to_string(p_c_max_kw) + " kW");
    return std::sqrt(s_charger_kva * s_charger_kva - p_c_max_kw * p_c_max_kw);
}

double system_cost(double s_charger_kva, double s_pv_kva, const PriceSet& prices) {
    return prices.charger_per_kva * s_charger_kva + prices.pv_es_per_kva * s_pv_kva;
}

int classify_scenario(const PriceSet& prices) {
    double lc = prices.charger_per_kva;
    double lpe = prices.pv_es_per_kva;
    if (lc < 0.0 || lpe < 0.0) raise(Errc::bad_config, "prices must be nonnegative");
    if (lc == lpe) return 3;
    if (lc > lpe) return (lpe == 0.0 || lc / lpe >= kScenarioRatio) ? 1 : 2;
    return (lc == 0.0 || lpe / lc >= kScenarioRatio) ? 5 : 4;
}

double max_useful_charger_size(double p_c_max_kw, double q_ref_kvar) {
    return std::hypot(p_c_max_kw, q_ref_kvar);
}

double optimal_charger_size(const PriceSet& prices, double p_c_max_kw, double q_ref_kvar) {
    if (p_c_max_kw <= 0.0) raise(Errc::bad_config, "p_c_max_kw must be positive");
    if (q_ref_kvar < 0.0) raise(Errc::bad_config, "q_ref_kvar must be nonnegative");
    double lc = prices.charger_per_kva;
    double lpe = prices.pv_es_per_kva;
    if (lc <= lpe)
        raise(Errc::degenerate_prices, "no interior optimum: charger price " +
                                           std::to_string(lc) + " not above bundled PV price " +
                                           std::to_string(lpe));
    double s_set = std::sqrt(lc * lc * p_c_max_kw * p_c_max_kw / (lc * lc - lpe * lpe));
    return std::min(s_set, max_useful_charger_size(p_c_max_kw, q_ref_kvar));
}

SizingResult size_system(const SizingInputs& in, const PriceSet& prices) {
    check_inputs(in);
    check_price_identity(prices, in.alpha, in.beta);

    SizingResult out;
    out.scenario = classify_scenario(prices);
    switch (out.scenario) {
    case 1: out.s_charger_kva = in.p_c_max_kw; break;
    case 2: out.s_charger_kva = optimal_charger_size(prices, in.p_c_max_kw, in.q_ref_kvar); break;
    default: out.s_charger_kva = max_useful_charger_size(in.p_c_max_kw, in.q_ref_kvar); break;
    }

    double q_charger = charger_reactive_capacity(out.s_charger_kva, in.p_c_max_kw);
    double q_pv = std::max(0.0, in.q_ref_kvar - q_charger);
    out.s_pv_kva = q_pv / in.eta;

    double p_pv = out.s_pv_kva * std::sqrt(std::max(0.0, 1.0 - in.eta * in.eta));
    double p_floor = in.delta * in.p_ref_kw;
    if (p_pv < p_floor) {
        if (in.eta >= 1.0)
            raise(Errc::infeasible_eta,
                  "a pure-var inverter (eta=1) cannot supply the required onsite generation of " +
                      std::to_string(p_floor) + " kW");
        out.s_pv_kva = p_floor / std::sqrt(1.0 - in.eta * in.eta);
        out.s_charger_kva = std::hypot(in.q_ref_kvar - in.eta * out.s_pv_kva, in.p_c_max_kw);
        out.constraint_binding = true;
    }

    out.e_es_kwh = in.alpha * out.s_pv_kva;
    out.p_es_kw = in.beta * out.s_pv_kva;
    out.cost = system_cost(out.s_charger_kva, out.s_pv_kva, prices);
    return out;
}

std::vector<std::pair<double, double>> cost_curve(const PriceSet& prices, double p_c_max_kw,
                                                  double q_ref_kvar, int points) {
    if (p_c_max_kw <= 0.0) raise(Errc::bad_config, "p_c_max_kw must be positive");
    if (q_ref_kvar < 0.0) raise(Errc::bad_config, "q_ref_kvar must be nonnegative");
    if (points < 2) raise(Errc::bad_config, "cost curve needs at least two points");
    double s_max = max_useful_charger_size(p_c_max_kw, q_ref_kvar);
    std::vector<std::pair<double, double>> curve;
    curve.reserve(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i) {
        double s = p_c_max_kw + (s_max - p_c_max_kw) * i / (points - 1);
        double q_pv = std::max(0.0, q_ref_kvar - charger_reactive_capacity(s, p_c_max_kw));
        curve.emplace_back(s, system_cost(s, q_pv, prices));
    }
    return curve;
}

double cost_slope(const PriceSet& prices, double s_charger_kva, double p_c_max_kw) {
    double q = charger_reactive_capacity(s_charger_kva, p_c_max_kw);
    if (q == 0.0) raise(Errc::bad_config, "cost slope is undefined at s_charger == p_c_max");
    return prices.charger_per_kva - prices.pv_es_per_kva * s_charger_kva / q;
}

AlphaBeta fit_alpha_beta(const std::vector<TimeSeries>& pv_days,
                         const std::vector<TimeSeries>& need_days, double grid_ref_kva) {
    if (pv_days.empty() || need_days.empty())
        raise(Errc::empty_profiles, "alpha/beta fitting needs at least one day of profiles");
    if (pv_days.size() != need_days.size())
        raise(Errc::series_length_mismatch, "pv and need day counts differ");
    if (grid_ref_kva <= 0.0) raise(Errc::bad_config, "grid_ref_kva must be positive");

    double se_sum = 0.0, sp_sum = 0.0, ss_sum = 0.0;
    for (size_t d = 0; d < pv_days.size(); ++d) {
        const TimeSeries& pv = pv_days[d];
        const TimeSeries& need = need_days[d];
        require_aligned(pv, need);
        double dt_h = pv.step_minutes / 60.0;
        for (int g = 1; g <= 20; ++g) {
            double size = grid_ref_kva * g / 10.0;
            double level = 0.0, e_req = 0.0, p_req = 0.0;
            for (size_t t = 0; t < pv.values.size(); ++t) {
                double spare = size * pv.values[t] - need.values[t];
                if (spare > 0.0) {
                    level += spare * dt_h;
                    e_req = std::max(e_req, level);
                    p_req = std::max(p_req, spare);
                } else {
                    level = std::max(0.0, level + spare * dt_h);
                }
            }
            se_sum += size * e_req;
            sp_sum += size * p_req;
            ss_sum += size * size;
        }
    }
    AlphaBeta ab;
    ab.alpha = se_sum / ss_sum;
    ab.beta = sp_sum / ss_sum;
    return ab;
}

} // namespace evgrid
