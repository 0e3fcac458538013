#pragma once

#include <stdexcept>
#include <string>

namespace evgrid {

// Every failure mode the library reports. Codes are stable; tests match on
// them rather than on message text.
enum class Errc {
    cycle_detected,
    disconnected_bus,
    multiple_slack,
    missing_base,
    unknown_feeder,
    no_convergence,
    invalid_bus,
    series_length_mismatch,
    empty_series,
    zero_perturbation,
    unknown_bus,
    zero_sensitivity,
    no_load_buses,
    step_mismatch,
    negative_power,
    capacity_below_peak,
    degenerate_prices,
    infeasible_eta,
    empty_profiles,
    invalid_pf,
    series_mismatch,
    bad_config,
    io_error,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace evgrid
