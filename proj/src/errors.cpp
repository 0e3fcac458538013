#include "evgrid/errors.hpp"

namespace evgrid {

const char* errc_name(Errc c) noexcept {
    switch (c) {
    case Errc::cycle_detected: return "CycleDetected";
    case Errc::disconnected_bus: return "DisconnectedBus";
    case Errc::multiple_slack: return "MultipleSlack";
    case Errc::missing_base: return "MissingBase";
    case Errc::unknown_feeder: return "UnknownFeeder";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::invalid_bus: return "InvalidBus";
    case Errc::series_length_mismatch: return "SeriesLengthMismatch";
    case Errc::empty_series: return "EmptySeries";
    case Errc::zero_perturbation: return "ZeroPerturbation";
    case Errc::unknown_bus: return "UnknownBus";
    case Errc::zero_sensitivity: return "ZeroSensitivity";
    case Errc::no_load_buses: return "NoLoadBuses";
    case Errc::step_mismatch: return "StepMismatch";
    case Errc::negative_power: return "NegativePower";
    case Errc::capacity_below_peak: return "CapacityBelowPeak";
    case Errc::degenerate_prices: return "DegeneratePrices";
    case Errc::infeasible_eta: return "InfeasibleEta";
    case Errc::empty_profiles: return "EmptyProfiles";
    case Errc::invalid_pf: return "InvalidPf";
    case Errc::series_mismatch: return "SeriesMismatch";
    case Errc::bad_config: return "BadConfig";
    case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

} // namespace evgrid
