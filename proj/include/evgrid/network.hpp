#pragma once

#include <string>
#include <vector>

namespace evgrid {

enum class BusKind { slack, load };
enum class ImpedanceUnit { ohm, per_unit };

struct Bus {
    std::string id;
    BusKind kind = BusKind::load;
    double base_kv = 0.0;        // line-to-line kV
    bool load_connection = false; // eligible for load or station attachment
    double peak_kw = 0.0;         // attached peak system load, 0 if none
};

struct Branch {
    std::string from;
    std::string to;
    double r = 0.0; // ohms, or p.u. after to_per_unit
    double x = 0.0;
};

// Radial distribution feeder. Buses and branches form a tree rooted at the
// single slack bus. Branch impedances are carried in ohms by default;
// conversion to per-unit is explicit via to_per_unit.
struct Feeder {
    std::string name;
    double base_power_mva = 0.0;
    ImpedanceUnit unit = ImpedanceUnit::ohm;
    double system_peak_kw = 0.0; // calibration target for system load synthesis
    std::vector<Bus> buses;
    std::vector<Branch> branches;

    const Bus* find_bus(const std::string& id) const;
    int bus_index(const std::string& id) const; // -1 if absent
    std::vector<std::string> load_bus_ids() const;
    double total_peak_kw() const;
};

// Checks that the feeder is a tree rooted at exactly one slack bus and
// returns the sweep order: leaves first, slack last. Children always appear
// before their parents, so a backward sweep can walk the list front to back.
std::vector<std::string> validate_radial(const Feeder& feeder);

// Z_pu = Z_ohm * base_MVA / base_kV^2. Idempotent on already-normalized input.
Feeder to_per_unit(const Feeder& feeder);
// Inverse conversion; idempotent on ohmic input.
Feeder to_ohms(const Feeder& feeder);

enum class BundledFeeder { ieee34_like, single_feeder, two_feeder, dedicated };

BundledFeeder bundled_feeder_from_name(const std::string& name);
const char* bundled_feeder_name(BundledFeeder which);

// Deterministic synthetic test feeders:
//   ieee34_like   34 buses, long main line with laterals, 1.8 MW system peak
//   single_feeder ~120-bus long-main-line analog, 5 MW system peak
//   two_feeder    two radial subtrees on one substation bus, 6 MW system peak
//   dedicated     single_feeder topology with every system load removed
Feeder bundled_feeder(BundledFeeder which);
Feeder bundled_feeder(const std::string& name);

// Main-line bus ids of a bundled feeder, slack first (for trace inspection).
std::vector<std::string> bundled_main_line(BundledFeeder which);

// Fixed station bus used for the dedicated-feeder scenarios.
std::string dedicated_station_bus();

// JSON feeder file format:
//   {"base_power_mva": .., "buses": [{"id","kind","base_kv","load_connection"}...],
//    "branches": [{"from","to","r_ohm","x_ohm"}...]}
// plus optional "name", "system_peak_kw" and per-bus "peak_kw".
std::string feeder_to_json(const Feeder& feeder);
Feeder feeder_from_json(const std::string& text);
Feeder load_feeder_file(const std::string& path);
void save_feeder_file(const Feeder& feeder, const std::string& path);

// Loads a bundled feeder when `source` names one, else reads a JSON file.
Feeder resolve_feeder(const std::string& source);

} // namespace evgrid
