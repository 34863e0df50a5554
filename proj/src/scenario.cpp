#include "evwarn/scenario.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "evwarn/grid.hpp"

namespace evwarn::sim {

using nlohmann::json;

LatencySpec LatencySpec::constant(double ms) {
    if (!(ms >= 0.0)) {
        throw std::invalid_argument("latency constant must be >= 0");
    }
    LatencySpec s;
    s.kind = LatencyKind::Constant;
    s.value_ms = ms;
    return s;
}

LatencySpec LatencySpec::uniform(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi >= lo)) {
        throw std::invalid_argument("latency uniform needs 0 <= lo <= hi");
    }
    LatencySpec s;
    s.kind = LatencyKind::Uniform;
    s.lo_ms = lo;
    s.hi_ms = hi;
    return s;
}

LatencySpec LatencySpec::normal(double mean, double std) {
    if (!(std >= 0.0)) {
        throw std::invalid_argument("latency normal needs std >= 0");
    }
    LatencySpec s;
    s.kind = LatencyKind::Normal;
    s.mean_ms = mean;
    s.std_ms = std;
    return s;
}

LatencySpec LatencySpec::empirical(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open latency sample file: " + path);
    }
    LatencySpec s;
    s.kind = LatencyKind::Empirical;
    s.path = path;
    std::string line;
    while (std::getline(in, line)) {
        // tolerate a header row and blank lines
        try {
            std::size_t pos = 0;
            double v = std::stod(line, &pos);
            if (v >= 0.0) s.samples.push_back(v);
        } catch (const std::exception&) {
            continue;
        }
    }
    if (s.samples.empty()) {
        throw std::invalid_argument("latency sample file holds no numbers: " + path);
    }
    return s;
}

namespace {

void check_spec(const LatencySpec& s, const std::string& name) {
    switch (s.kind) {
        case LatencyKind::Constant:
            if (!(s.value_ms >= 0.0)) {
                throw std::invalid_argument(name + ": constant must be >= 0");
            }
            break;
        case LatencyKind::Uniform:
            if (!(s.lo_ms >= 0.0) || !(s.hi_ms >= s.lo_ms)) {
                throw std::invalid_argument(name + ": uniform needs 0 <= lo <= hi");
            }
            break;
        case LatencyKind::Normal:
            if (!(s.std_ms >= 0.0)) {
                throw std::invalid_argument(name + ": normal needs std >= 0");
            }
            break;
        case LatencyKind::Empirical:
            if (s.samples.empty()) {
                throw std::invalid_argument(name + ": empirical spec has no samples");
            }
            break;
    }
}

}  // namespace

void Scenario::validate() const {
    if (!grid_origin.valid() || std::abs(grid_origin.lat) >= 85.0) {
        throw std::invalid_argument("scenario: grid origin out of range");
    }
    if (!(cell_size_m > 0.0)) {
        throw std::invalid_argument("scenario: cell_size_m must be > 0");
    }
    if (!(t_max_ms > 0.0)) {
        throw std::invalid_argument("scenario: t_max_ms must be > 0");
    }
    if (runs < 1) {
        throw std::invalid_argument("scenario: runs must be >= 1");
    }
    if (!(duration_s > 0.0) || !(frame_interval_ms > 0.0)) {
        throw std::invalid_argument("scenario: duration and frame interval must be > 0");
    }
    if (!(detection_range_m > 0.0)) {
        throw std::invalid_argument("scenario: detection_range_m must be > 0");
    }
    if (!(k_impact >= 0.0) || !(assumed_object_speed_mps >= 0.0)) {
        throw std::invalid_argument("scenario: rates must be >= 0");
    }
    if (frame_width <= 0 || frame_height <= 0) {
        throw std::invalid_argument("scenario: frame dimensions must be > 0");
    }
    if (!(edge_band > 0.0) || !(edge_band < 1.0)) {
        throw std::invalid_argument("scenario: edge_band must lie in (0, 1)");
    }
    if (sensors.empty()) {
        throw std::invalid_argument("scenario: at least one sensor is required");
    }

    std::set<std::string> ids;
    auto claim = [&ids](const std::string& id, const char* what) {
        if (id.empty()) {
            throw std::invalid_argument(std::string("scenario: empty ") + what + " id");
        }
        if (!ids.insert(id).second) {
            throw std::invalid_argument("scenario: duplicate id: " + id);
        }
    };
    for (const auto& s : sensors) {
        claim(s.id, "sensor");
        if (s.position.x < 0.0 || s.position.y < 0.0) {
            throw std::invalid_argument("scenario: sensor outside the grid: " + s.id);
        }
    }
    for (const auto& u : users) {
        claim(u.id, "user");
        u.trajectory();  // throws on negative speed
        if (u.position.x < 0.0 || u.position.y < 0.0) {
            throw std::invalid_argument("scenario: user outside the grid: " + u.id);
        }
    }
    for (const auto& v : vehicles) {
        claim(v.id, "vehicle");
        v.trajectory();
    }

    check_spec(latency.t_s, "t_s");
    check_spec(latency.t_eval, "t_eval");
    check_spec(latency.t_p_ai, "t_p_ai");
    check_spec(latency.t_p_tc, "t_p_tc");
    check_spec(latency.t_exe, "t_exe");
    check_spec(latency.t_c, "t_c");
    check_spec(latency.t_act, "t_act");
}

Scenario default_scenario() {
    Scenario sc;

    SensorSpec sensor;
    sensor.id = "s-01";
    sensor.position = CartPoint{1500.0, 3250.0};
    sensor.camera_bearing_deg = 0.0;  // faces north, so approaching traffic heads south
    // image halves: approaching lane on the left, departing lane on the right
    const double w = sc.frame_width, h = sc.frame_height;
    sensor.lane_zones.push_back(LaneZone{
        {{0.0, 0.0}, {w / 2.0, 0.0}, {w / 2.0, h}, {0.0, h}}, +1});
    sensor.lane_zones.push_back(LaneZone{
        {{w / 2.0, 0.0}, {w, 0.0}, {w, h}, {w / 2.0, h}}, -1});
    sc.sensors.push_back(std::move(sensor));

    // crossing user: eastbound, meets the object's path inside the shared cell
    sc.users.push_back(UserSpec{"v2", CartPoint{1100.0, 3200.0}, 90.0, 20.0});
    // lead user: southbound on the same lane, never crosses the object ray
    sc.users.push_back(UserSpec{"v1", CartPoint{1500.0, 3100.0}, 180.0, 20.0});

    sc.vehicles.push_back(
        VehicleSpec{"e1", "emergency", CartPoint{1500.0, 3600.0}, 180.0, 20.0});

    sc.latency.t_s = LatencySpec::constant(22.0);
    sc.latency.t_eval = LatencySpec::constant(25.20);
    sc.latency.t_p_ai = LatencySpec::constant(75.49);
    sc.latency.t_p_tc = LatencySpec::constant(0.90);
    sc.latency.t_exe = LatencySpec::constant(25.20);
    sc.latency.t_c = LatencySpec::constant(1.2);
    sc.latency.t_act = LatencySpec::constant(0.0);
    return sc;
}

Scenario table2_scenario(const std::string& ai_samples_path) {
    Scenario sc = default_scenario();
    sc.runs = 200;
    sc.duration_s = 1.0;
    sc.latency.t_p_ai = LatencySpec::empirical(ai_samples_path);
    sc.latency.t_p_ai.path = ai_samples_path;
    sc.latency.t_p_tc = LatencySpec::normal(0.95, 0.21);
    return sc;
}

namespace {

json point_to_json(CartPoint p) { return json{{"x", p.x}, {"y", p.y}}; }

CartPoint point_from_json(const json& j, const GeoPoint& origin,
                          const std::string& where) {
    if (!j.is_object()) {
        throw std::invalid_argument("scenario: " + where + ": position must be an object");
    }
    if (j.contains("x") && j.contains("y")) {
        return CartPoint{j.at("x").get<double>(), j.at("y").get<double>()};
    }
    if (j.contains("lat") && j.contains("lon")) {
        GeoPoint g{j.at("lat").get<double>(), j.at("lon").get<double>()};
        return to_cartesian(g, origin);
    }
    throw std::invalid_argument("scenario: " + where +
                                ": position needs {x,y} or {lat,lon}");
}

json spec_to_json(const LatencySpec& s) {
    switch (s.kind) {
        case LatencyKind::Constant:
            return json{{"kind", "constant"}, {"value_ms", s.value_ms}};
        case LatencyKind::Uniform:
            return json{{"kind", "uniform"}, {"lo_ms", s.lo_ms}, {"hi_ms", s.hi_ms}};
        case LatencyKind::Normal:
            return json{{"kind", "normal"}, {"mean_ms", s.mean_ms}, {"std_ms", s.std_ms}};
        case LatencyKind::Empirical:
            return json{{"kind", "empirical"}, {"path", s.path}};
    }
    throw std::logic_error("unreachable latency kind");
}

LatencySpec spec_from_json(const json& j, const std::string& name,
                           const std::filesystem::path& base_dir) {
    if (!j.is_object() || !j.contains("kind")) {
        throw std::invalid_argument("scenario: latency." + name + " needs a kind");
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        return LatencySpec::constant(j.at("value_ms").get<double>());
    }
    if (kind == "uniform") {
        return LatencySpec::uniform(j.at("lo_ms").get<double>(),
                                    j.at("hi_ms").get<double>());
    }
    if (kind == "normal") {
        return LatencySpec::normal(j.at("mean_ms").get<double>(),
                                   j.at("std_ms").get<double>());
    }
    if (kind == "empirical") {
        std::filesystem::path p = j.at("path").get<std::string>();
        std::filesystem::path resolved =
            (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
        LatencySpec s = LatencySpec::empirical(resolved.string());
        s.path = j.at("path").get<std::string>();
        return s;
    }
    throw std::invalid_argument("scenario: latency." + name +
                                ": unknown kind: " + kind);
}

json zones_to_json(const std::vector<LaneZone>& zones) {
    json arr = json::array();
    for (const auto& z : zones) {
        json poly = json::array();
        for (const auto& pt : z.polygon) poly.push_back(json::array({pt.x, pt.y}));
        arr.push_back(json{{"polygon", poly}, {"vote", z.vote}});
    }
    return arr;
}

std::vector<LaneZone> zones_from_json(const json& arr) {
    std::vector<LaneZone> zones;
    if (arr.is_null()) return zones;
    for (const auto& jz : arr) {
        LaneZone z;
        for (const auto& jp : jz.at("polygon")) {
            z.polygon.push_back(
                PixelPoint{jp.at(0).get<double>(), jp.at(1).get<double>()});
        }
        z.vote = jz.at("vote").get<int>();
        if (z.vote != 1 && z.vote != -1) {
            throw std::invalid_argument("scenario: lane zone vote must be +1 or -1");
        }
        zones.push_back(std::move(z));
    }
    return zones;
}

}  // namespace

std::string scenario_to_json(const Scenario& s, int indent) {
    json j;
    j["grid"] = {{"origin", {{"lat", s.grid_origin.lat}, {"lon", s.grid_origin.lon}}},
                 {"cell_size_m", s.cell_size_m}};
    j["t_max_ms"] = s.t_max_ms;
    j["seed"] = s.seed;
    j["runs"] = s.runs;
    j["duration_s"] = s.duration_s;
    j["frame_interval_ms"] = s.frame_interval_ms;
    j["detection_range_m"] = s.detection_range_m;
    j["k_impact"] = s.k_impact;
    j["assumed_object_speed_mps"] = s.assumed_object_speed_mps;
    j["emergency_class"] = s.emergency_class;
    j["frame"] = {{"width", s.frame_width},
                  {"height", s.frame_height},
                  {"edge_band", s.edge_band}};

    j["sensors"] = json::array();
    for (const auto& sn : s.sensors) {
        j["sensors"].push_back(json{{"id", sn.id},
                                    {"position", point_to_json(sn.position)},
                                    {"camera_bearing_deg", sn.camera_bearing_deg},
                                    {"lane_zones", zones_to_json(sn.lane_zones)}});
    }
    j["users"] = json::array();
    for (const auto& u : s.users) {
        j["users"].push_back(json{{"id", u.id},
                                  {"position", point_to_json(u.position)},
                                  {"bearing_deg", u.bearing_deg},
                                  {"speed_mps", u.speed_mps}});
    }
    j["vehicles"] = json::array();
    for (const auto& v : s.vehicles) {
        j["vehicles"].push_back(json{{"id", v.id},
                                     {"class", v.class_label},
                                     {"position", point_to_json(v.position)},
                                     {"bearing_deg", v.bearing_deg},
                                     {"speed_mps", v.speed_mps}});
    }
    j["latency"] = {{"t_s", spec_to_json(s.latency.t_s)},
                    {"t_eval", spec_to_json(s.latency.t_eval)},
                    {"t_p_ai", spec_to_json(s.latency.t_p_ai)},
                    {"t_p_tc", spec_to_json(s.latency.t_p_tc)},
                    {"t_exe", spec_to_json(s.latency.t_exe)},
                    {"t_c", spec_to_json(s.latency.t_c)},
                    {"t_act", spec_to_json(s.latency.t_act)}};
    return j.dump(indent) + "\n";
}

Scenario scenario_from_json(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario: bad JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw std::invalid_argument("scenario: top level must be an object");
    }

    Scenario s = default_scenario();
    s.sensors.clear();
    s.users.clear();
    s.vehicles.clear();

    if (j.contains("grid")) {
        const auto& jg = j.at("grid");
        if (jg.contains("origin")) {
            s.grid_origin = GeoPoint{jg.at("origin").at("lat").get<double>(),
                                     jg.at("origin").at("lon").get<double>()};
        }
        if (jg.contains("cell_size_m")) {
            s.cell_size_m = jg.at("cell_size_m").get<double>();
        }
    }
    if (j.contains("t_max_ms")) s.t_max_ms = j.at("t_max_ms").get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("runs")) s.runs = j.at("runs").get<int>();
    if (j.contains("duration_s")) s.duration_s = j.at("duration_s").get<double>();
    if (j.contains("frame_interval_ms")) {
        s.frame_interval_ms = j.at("frame_interval_ms").get<double>();
    }
    if (j.contains("detection_range_m")) {
        s.detection_range_m = j.at("detection_range_m").get<double>();
    }
    if (j.contains("k_impact")) s.k_impact = j.at("k_impact").get<double>();
    if (j.contains("assumed_object_speed_mps")) {
        s.assumed_object_speed_mps = j.at("assumed_object_speed_mps").get<double>();
    }
    if (j.contains("emergency_class")) {
        s.emergency_class = j.at("emergency_class").get<std::string>();
    }
    if (j.contains("frame")) {
        const auto& jf = j.at("frame");
        if (jf.contains("width")) s.frame_width = jf.at("width").get<int>();
        if (jf.contains("height")) s.frame_height = jf.at("height").get<int>();
        if (jf.contains("edge_band")) s.edge_band = jf.at("edge_band").get<double>();
    }

    for (const auto& js : j.value("sensors", json::array())) {
        SensorSpec sn;
        sn.id = js.at("id").get<std::string>();
        sn.position = point_from_json(js.at("position"), s.grid_origin, sn.id);
        sn.camera_bearing_deg = js.value("camera_bearing_deg", 0.0);
        sn.lane_zones = zones_from_json(js.value("lane_zones", json()));
        s.sensors.push_back(std::move(sn));
    }
    for (const auto& ju : j.value("users", json::array())) {
        UserSpec u;
        u.id = ju.at("id").get<std::string>();
        u.position = point_from_json(ju.at("position"), s.grid_origin, u.id);
        u.bearing_deg = ju.value("bearing_deg", 0.0);
        u.speed_mps = ju.value("speed_mps", 0.0);
        s.users.push_back(std::move(u));
    }
    for (const auto& jv : j.value("vehicles", json::array())) {
        VehicleSpec v;
        v.id = jv.at("id").get<std::string>();
        v.class_label = jv.value("class", std::string("emergency"));
        v.position = point_from_json(jv.at("position"), s.grid_origin, v.id);
        v.bearing_deg = jv.value("bearing_deg", 0.0);
        v.speed_mps = jv.value("speed_mps", 0.0);
        s.vehicles.push_back(std::move(v));
    }

    std::filesystem::path base(base_dir);
    if (j.contains("latency")) {
        const auto& jl = j.at("latency");
        auto pick = [&](const char* name, LatencySpec& slot) {
            if (jl.contains(name)) {
                slot = spec_from_json(jl.at(name), name, base);
            }
        };
        pick("t_s", s.latency.t_s);
        pick("t_eval", s.latency.t_eval);
        pick("t_p_ai", s.latency.t_p_ai);
        pick("t_p_tc", s.latency.t_p_tc);
        pick("t_exe", s.latency.t_exe);
        pick("t_c", s.latency.t_c);
        pick("t_act", s.latency.t_act);
    }

    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open scenario file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str(),
                              std::filesystem::path(path).parent_path().string());
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::invalid_argument("cannot write scenario file: " + path);
    }
    out << scenario_to_json(s);
    if (!out) {
        throw std::runtime_error("short write on scenario file: " + path);
    }
}

}  // namespace evwarn::sim
