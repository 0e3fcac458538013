#pragma once

#include "evgrid/mitigation.hpp"
#include "evgrid/network.hpp"
#include "evgrid/powerflow.hpp"
#include "evgrid/profiles.hpp"
#include "evgrid/sensitivity.hpp"
#include "evgrid/sizing.hpp"
#include "evgrid/station.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evgrid {

enum class Mitigation { none, pf_control, pv_es_charger };

const char* mitigation_name(Mitigation m);
Mitigation mitigation_from_name(const std::string& name);

// One cell of the impact-analysis matrix: a station build-out placed at a
// ranked location under a chosen pair of load patterns.
struct Scenario {
    BundledFeeder feeder = BundledFeeder::ieee34_like;
    LocationClass location_class = LocationClass::best;
    int ports = 3;
    ChargingPattern charging = ChargingPattern::daytime;
    LoadPattern system_pattern = LoadPattern::residential;
    Mitigation mitigation = Mitigation::none;
    std::uint64_t seed = 7;

    std::string id() const;
};

// Rejects combinations outside the matrix: bad port counts, commercial
// system loads on the residential-only feeders, and anything but the fixed
// 3/6-port build-outs on the dedicated feeder.
void validate_scenario(const Scenario& s);

// All valid combinations for one feeder, mitigation left at none:
// 36 for ieee34_like, 18 for single_feeder and two_feeder, 4 for dedicated.
std::vector<Scenario> enumerate_scenarios(BundledFeeder which, std::uint64_t seed = 7);

struct ScenarioOptions {
    int days = 30;           // simulated horizon
    int mc_iterations = 10;  // station profile envelope width
    int threads = 0;
    double port_power_kw = 1200.0;
    VoltageLimits limits;
};

struct ScenarioReport {
    Scenario scenario;
    std::string station_bus;
    double station_peak_kw = 0.0;
    double min_v = 1.0;
    double max_v = 1.0;
    std::string worst_bus;
    long long violations = 0; // bus-step samples outside limits
    bool hosted = false;      // violations == 0
};

// Full pipeline for one scenario: synthesize system loads, build the station
// Monte Carlo envelope, place the station at the class representative bus,
// run the time-series power flow with the selected mitigation, scan limits.
ScenarioReport run_scenario(const Scenario& s, const ScenarioOptions& opts = {});

// Largest port count in {1, 3, 6} the bus can host with zero violating
// samples over the horizon; 0 when even one port (or the bare feeder)
// violates. Evaluated ascending, so the result is monotone by construction.
int hosting_capacity(BundledFeeder feeder, const std::string& bus, Mitigation mitigation,
                     std::uint64_t seed = 7, const ScenarioOptions& opts = {});

struct HostingBar {
    BundledFeeder feeder = BundledFeeder::ieee34_like;
    LocationClass location_class = LocationClass::best;
    std::string bus;
    Mitigation mitigation = Mitigation::none;
    int ports = 0;
};

struct MatrixConfig {
    std::vector<BundledFeeder> feeders{BundledFeeder::ieee34_like, BundledFeeder::single_feeder,
                                       BundledFeeder::two_feeder, BundledFeeder::dedicated};
    std::uint64_t seed = 7;
    ScenarioOptions options;
    bool hosting_bars = true; // per-location hosting with and without pf control
};

struct MatrixResult {
    std::vector<ScenarioReport> rows; // enumeration order, stable per seed
    std::vector<HostingBar> bars;
};

// Runs every enumerated scenario (a parallel work queue; results keep
// enumeration order) and, when asked, the paired hosting evaluations.
MatrixResult scenario_matrix(const MatrixConfig& cfg);

// CSV: scenario_id,feeder,location_class,ports,charging_pattern,
//      system_pattern,mitigation,min_v_pu,max_v_pu,violations,hosted
void save_matrix_csv(const MatrixResult& result, const std::string& path);

// Hosting-bar summary grouped per feeder and location.
std::string matrix_summary_json(const MatrixResult& result);

// Bundled 3-port reference case: the good-class representative on the
// single-feeder system with a 3,600 kW build-out, its sensitivities at system
// peak, and the support the placement needs (smallest-sufficient estimator).
struct ReferenceCase {
    Feeder feeder; // per-unit
    std::string bus;
    double p_c_max_kw = 3600.0;
    Vlsm vlsm;
    RefResult refs;
};

ReferenceCase reference_case();

// Seven days of PV output at a reference array size, paired with the real
// support power the reference station placement would ask of that array.
// Feed to fit_alpha_beta to derive storage-per-PV coupling ratios.
struct AbProfiles {
    std::vector<TimeSeries> pv_days;
    std::vector<TimeSeries> need_days;
    double grid_ref_kva = 0.0;
};

AbProfiles alpha_beta_fixture(std::uint64_t seed = 7);

// Week-long mitigation study of one placement: the PV-ES-charger system sized
// from the location's compensation needs, dispatched against the feeder's
// station-free voltage trajectory, with the share of PV energy that reached
// the grid during support windows accounted with and without the store.
struct DispatchStudy {
    Scenario scenario;
    std::string station_bus;
    SizingResult sizes;
    DispatchTrace trace; // dispatch of the full sized system
    double effective_with_es = 0.0;
    double effective_without_es = 0.0;
    ScenarioReport unmitigated;
    ScenarioReport mitigated;
};

DispatchStudy dispatch_study(const Scenario& scenario, const ScenarioOptions& options);

// The bundled study: a 3-port multishift station at the reference placement,
// one simulated week.
DispatchStudy dispatch_study(std::uint64_t seed = 7);

} // namespace evgrid
