#include "evgrid/network.hpp"
#include "evgrid/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace evgrid {

const Bus* Feeder::find_bus(const std::string& id) const {
    for (const auto& b : buses)
        if (b.id == id) return &b;
    return nullptr;
}

int Feeder::bus_index(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> Feeder::load_bus_ids() const {
    std::vector<std::string> out;
    for (const auto& b : buses)
        if (b.kind == BusKind::load && b.load_connection) out.push_back(b.id);
    return out;
}

double Feeder::total_peak_kw() const {
    double sum = 0.0;
    for (const auto& b : buses) sum += b.peak_kw;
    return sum;
}

std::vector<std::string> validate_radial(const Feeder& feeder) {
    if (feeder.buses.empty()) raise(Errc::bad_config, "feeder has no buses");

    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < feeder.buses.size(); ++i) {
        auto [it, fresh] = index.emplace(feeder.buses[i].id, static_cast<int>(i));
        if (!fresh) raise(Errc::bad_config, "duplicate bus id " + feeder.buses[i].id);
    }

    int slack = -1;
    int slack_count = 0;
    for (std::size_t i = 0; i < feeder.buses.size(); ++i) {
        if (feeder.buses[i].kind == BusKind::slack) {
            slack = static_cast<int>(i);
            ++slack_count;
        }
    }
    if (slack_count != 1)
        raise(Errc::multiple_slack,
              "expected exactly one slack bus, found " + std::to_string(slack_count));

    std::vector<std::vector<int>> adj(feeder.buses.size());
    for (const auto& br : feeder.branches) {
        auto f = index.find(br.from);
        auto t = index.find(br.to);
        if (f == index.end()) raise(Errc::unknown_bus, "branch endpoint " + br.from);
        if (t == index.end()) raise(Errc::unknown_bus, "branch endpoint " + br.to);
        adj[f->second].push_back(t->second);
        adj[t->second].push_back(f->second);
    }

    std::vector<char> seen(feeder.buses.size(), 0);
    std::vector<int> order;
    order.reserve(feeder.buses.size());
    std::queue<int> frontier;
    frontier.push(slack);
    seen[slack] = 1;
    while (!frontier.empty()) {
        int at = frontier.front();
        frontier.pop();
        order.push_back(at);
        for (int next : adj[at]) {
            if (!seen[next]) {
                seen[next] = 1;
                frontier.push(next);
            }
        }
    }

    for (std::size_t i = 0; i < feeder.buses.size(); ++i)
        if (!seen[i]) raise(Errc::disconnected_bus, feeder.buses[i].id);

    if (feeder.branches.size() != feeder.buses.size() - 1)
        raise(Errc::cycle_detected,
              std::to_string(feeder.branches.size()) + " branches for " +
                  std::to_string(feeder.buses.size()) + " buses");

    std::vector<std::string> ids;
    ids.reserve(order.size());
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        ids.push_back(feeder.buses[*it].id);
    return ids;
}

namespace {

double z_base_ohm(const Feeder& feeder, const Branch& br) {
    if (feeder.base_power_mva <= 0.0)
        raise(Errc::missing_base, "feeder base power is " + std::to_string(feeder.base_power_mva));
    const Bus* to = feeder.find_bus(br.to);
    if (!to) raise(Errc::unknown_bus, "branch endpoint " + br.to);
    if (to->base_kv <= 0.0) raise(Errc::missing_base, "bus " + br.to + " has no base kV");
    return to->base_kv * to->base_kv / feeder.base_power_mva;
}

} // namespace

Feeder to_per_unit(const Feeder& feeder) {
    Feeder out = feeder;
    if (feeder.unit == ImpedanceUnit::per_unit) return out;
    for (auto& br : out.branches) {
        double zb = z_base_ohm(feeder, br);
        br.r /= zb;
        br.x /= zb;
    }
    out.unit = ImpedanceUnit::per_unit;
    return out;
}

Feeder to_ohms(const Feeder& feeder) {
    Feeder out = feeder;
    if (feeder.unit == ImpedanceUnit::ohm) return out;
    for (auto& br : out.branches) {
        double zb = z_base_ohm(feeder, br);
        br.r *= zb;
        br.x *= zb;
    }
    out.unit = ImpedanceUnit::ohm;
    return out;
}

BundledFeeder bundled_feeder_from_name(const std::string& name) {
    if (name == "ieee34_like") return BundledFeeder::ieee34_like;
    if (name == "single_feeder") return BundledFeeder::single_feeder;
    if (name == "two_feeder") return BundledFeeder::two_feeder;
    if (name == "dedicated") return BundledFeeder::dedicated;
    raise(Errc::unknown_feeder, name);
}

const char* bundled_feeder_name(BundledFeeder which) {
    switch (which) {
    case BundledFeeder::ieee34_like: return "ieee34_like";
    case BundledFeeder::single_feeder: return "single_feeder";
    case BundledFeeder::two_feeder: return "two_feeder";
    case BundledFeeder::dedicated: return "dedicated";
    }
    return "?";
}

namespace {

struct Builder {
    Feeder f;
    double kv = 0.0;

    void slack(const std::string& id) {
        Bus b;
        b.id = id;
        b.kind = BusKind::slack;
        b.base_kv = kv;
        f.buses.push_back(b);
    }
    void bus(const std::string& id, double peak_kw = 0.0) {
        Bus b;
        b.id = id;
        b.kind = BusKind::load;
        b.base_kv = kv;
        b.load_connection = peak_kw > 0.0;
        b.peak_kw = peak_kw;
        f.buses.push_back(b);
    }
    void link(const std::string& from, const std::string& to, double r, double x) {
        f.branches.push_back({from, to, r, x});
    }
    // chain of `count` buses hanging off `at`, ids prefix+"01".. ; returns last id
    std::string lateral(const std::string& at, const std::string& prefix, int count,
                        double peak_kw, double r, double x) {
        std::string prev = at;
        for (int i = 1; i <= count; ++i) {
            char id[32];
            std::snprintf(id, sizeof(id), "%s%02d", prefix.c_str(), i);
            bus(id, peak_kw);
            link(prev, id, r, x);
            prev = id;
        }
        return prev;
    }
};

std::string main_id(const char* prefix, int i) {
    char id[32];
    std::snprintf(id, sizeof(id), "%s%02d", prefix, i);
    return id;
}

Feeder make_ieee34_like() {
    Builder b;
    b.f.name = "ieee34_like";
    b.f.base_power_mva = 2.5;
    b.f.system_peak_kw = 1440.0;
    b.kv = 24.9;

    b.slack("sub");
    std::unordered_map<std::string, double> spot = {
        {"m06", 120.0}, {"m10", 160.0}, {"m14", 200.0}, {"m20", 240.0},
    };
    std::unordered_set<std::string> bare = {"m01", "m02", "m03", "m04",
                                            "m05", "m08", "m12", "m16"};
    std::string prev = "sub";
    for (int i = 1; i <= 20; ++i) {
        std::string id = main_id("m", i);
        double load = 32.0;
        if (auto it = spot.find(id); it != spot.end()) load = it->second;
        if (bare.count(id)) load = 0.0;
        b.bus(id, load);
        double r = 0.9, x = 1.2;
        if (i == 1) r = 0.4, x = 0.8;
        else if (i <= 6) r = 0.6, x = 1.0;
        else if (i >= 15) r = 1.2, x = 1.4;
        b.link(prev, id, r, x);
        prev = id;
    }
    b.lateral("m03", "la", 2, 24.0, 0.8, 0.9);
    auto lb_end = b.lateral("m08", "lb", 3, 24.0, 0.8, 0.9);
    auto lc_end = b.lateral("m12", "lc", 3, 24.0, 0.8, 0.9);
    b.lateral("m16", "ld", 3, 24.0, 0.8, 0.9);
    b.lateral("m19", "le", 2, 24.0, 0.8, 0.9);
    // spot loads at the two mid-feeder lateral ends
    for (auto& bus : b.f.buses) {
        if (bus.id == lb_end) bus.peak_kw = 120.0;
        if (bus.id == lc_end) bus.peak_kw = 80.0;
    }
    return b.f;
}

Feeder make_single_feeder() {
    Builder b;
    b.f.name = "single_feeder";
    b.f.base_power_mva = 10.0;
    b.f.system_peak_kw = 5000.0;
    b.kv = 12.47;

    b.slack("sub");
    std::string prev = "sub";
    for (int i = 1; i <= 40; ++i) {
        std::string id = main_id("m", i);
        double load = (i == 20 || i == 30 || i == 40) ? 200.0 : 0.0;
        b.bus(id, load);
        double r = (i <= 2) ? 0.05 : 0.035;
        b.link(prev, id, r, r * 1.5);
        prev = id;
    }
    const char* prefixes[] = {"la", "lb", "lc", "ld", "le", "lf", "lg", "lh"};
    for (int k = 0; k < 8; ++k)
        b.lateral(main_id("m", 5 * (k + 1)), prefixes[k], 10, 55.0, 0.05, 0.05);
    return b.f;
}

Feeder make_two_feeder() {
    Builder b;
    b.f.name = "two_feeder";
    b.f.base_power_mva = 10.0;
    b.f.system_peak_kw = 6000.0;
    b.kv = 12.47;

    b.slack("sub");
    auto build_side = [&](const char* mp, const char* lat1, const char* lat2,
                          double main_kw, double lat_kw, double end_kw) {
        std::string prev = "sub";
        for (int i = 1; i <= 20; ++i) {
            std::string id = main_id(mp, i);
            double load = (i >= 3) ? main_kw : 0.0;
            if (i == 20) load += end_kw;
            b.bus(id, load);
            b.link(prev, id, 0.1, 0.15);
            prev = id;
        }
        b.lateral(main_id(mp, 5), lat1, 5, lat_kw, 0.08, 0.08);
        b.lateral(main_id(mp, 15), lat2, 5, lat_kw, 0.08, 0.08);
    };
    build_side("a", "aa", "ab", 100.0, 100.0, 500.0);
    build_side("b", "ba", "bb", 75.0, 85.0, 500.0);
    return b.f;
}

Feeder make_dedicated() {
    Feeder f = make_single_feeder();
    f.name = "dedicated";
    f.system_peak_kw = 0.0;
    for (auto& bus : f.buses) bus.peak_kw = 0.0;
    return f;
}

} // namespace

Feeder bundled_feeder(BundledFeeder which) {
    switch (which) {
    case BundledFeeder::ieee34_like: return make_ieee34_like();
    case BundledFeeder::single_feeder: return make_single_feeder();
    case BundledFeeder::two_feeder: return make_two_feeder();
    case BundledFeeder::dedicated: return make_dedicated();
    }
    raise(Errc::unknown_feeder, "bad bundled feeder enum");
}

Feeder bundled_feeder(const std::string& name) {
    return bundled_feeder(bundled_feeder_from_name(name));
}

std::vector<std::string> bundled_main_line(BundledFeeder which) {
    std::vector<std::string> ids = {"sub"};
    int count = 0;
    const char* prefix = "m";
    switch (which) {
    case BundledFeeder::ieee34_like: count = 20; break;
    case BundledFeeder::single_feeder:
    case BundledFeeder::dedicated: count = 40; break;
    case BundledFeeder::two_feeder: count = 20; prefix = "a"; break;
    }
    for (int i = 1; i <= count; ++i) ids.push_back(main_id(prefix, i));
    return ids;
}

std::string dedicated_station_bus() { return "lc05"; }

namespace {

using json = nlohmann::json;

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) raise(Errc::bad_config, "unknown key \"" + it.key() + "\" in " + where);
    }
}

} // namespace

std::string feeder_to_json(const Feeder& feeder) {
    Feeder ohmic = to_ohms(feeder);
    json doc;
    doc["name"] = ohmic.name;
    doc["base_power_mva"] = ohmic.base_power_mva;
    doc["system_peak_kw"] = ohmic.system_peak_kw;
    doc["buses"] = json::array();
    for (const auto& b : ohmic.buses) {
        json jb;
        jb["id"] = b.id;
        jb["kind"] = b.kind == BusKind::slack ? "slack" : "load";
        jb["base_kv"] = b.base_kv;
        jb["load_connection"] = b.load_connection;
        jb["peak_kw"] = b.peak_kw;
        doc["buses"].push_back(jb);
    }
    doc["branches"] = json::array();
    for (const auto& br : ohmic.branches) {
        json jb;
        jb["from"] = br.from;
        jb["to"] = br.to;
        jb["r_ohm"] = br.r;
        jb["x_ohm"] = br.x;
        doc["branches"].push_back(jb);
    }
    return doc.dump(2) + "\n";
}

Feeder feeder_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::io_error, std::string("feeder json: ") + e.what());
    }
    try {
        require_keys(doc, {"name", "base_power_mva", "system_peak_kw", "buses", "branches"},
                     "feeder");
        Feeder f;
        f.name = doc.value("name", "feeder");
        if (!doc.contains("base_power_mva")) raise(Errc::missing_base, "base_power_mva");
        f.base_power_mva = doc.at("base_power_mva").get<double>();
        f.system_peak_kw = doc.value("system_peak_kw", 0.0);
        for (const auto& jb : doc.at("buses")) {
            require_keys(jb, {"id", "kind", "base_kv", "load_connection", "peak_kw"}, "bus");
            Bus b;
            b.id = jb.at("id").get<std::string>();
            std::string kind = jb.at("kind").get<std::string>();
            if (kind == "slack") b.kind = BusKind::slack;
            else if (kind == "load") b.kind = BusKind::load;
            else raise(Errc::bad_config, "bus kind \"" + kind + "\"");
            b.base_kv = jb.at("base_kv").get<double>();
            b.load_connection = jb.value("load_connection", false);
            b.peak_kw = jb.value("peak_kw", 0.0);
            f.buses.push_back(b);
        }
        for (const auto& jb : doc.at("branches")) {
            require_keys(jb, {"from", "to", "r_ohm", "x_ohm"}, "branch");
            Branch br;
            br.from = jb.at("from").get<std::string>();
            br.to = jb.at("to").get<std::string>();
            br.r = jb.at("r_ohm").get<double>();
            br.x = jb.at("x_ohm").get<double>();
            f.branches.push_back(br);
        }
        return f;
    } catch (const json::exception& e) {
        raise(Errc::bad_config, std::string("feeder json: ") + e.what());
    }
}

Feeder load_feeder_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return feeder_from_json(buf.str());
}

void save_feeder_file(const Feeder& feeder, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << feeder_to_json(feeder);
    if (!out) raise(Errc::io_error, "short write to " + path);
}

Feeder resolve_feeder(const std::string& source) {
    if (source == "ieee34_like" || source == "single_feeder" || source == "two_feeder" ||
        source == "dedicated")
        return bundled_feeder(source);
    return load_feeder_file(source);
}

} // namespace evgrid
