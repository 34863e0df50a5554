#include "evwarn/protocol.hpp"

#include <array>
#include <cmath>

namespace evwarn::proto {

const char* to_string(MsgType t) {
    switch (t) {
        case MsgType::RegisterSensor: return "register_sensor";
        case MsgType::RegisterUser: return "register_user";
        case MsgType::UpdateZone: return "update_zone";
        case MsgType::Frame: return "frame";
        case MsgType::Event: return "event";
        case MsgType::Ack: return "ack";
        case MsgType::Error: return "error";
    }
    return "error";
}

std::optional<MsgType> msg_type_from_string(std::string_view s) {
    if (s == "register_sensor") return MsgType::RegisterSensor;
    if (s == "register_user") return MsgType::RegisterUser;
    if (s == "update_zone") return MsgType::UpdateZone;
    if (s == "frame") return MsgType::Frame;
    if (s == "event") return MsgType::Event;
    if (s == "ack") return MsgType::Ack;
    if (s == "error") return MsgType::Error;
    return std::nullopt;
}

std::string encode(const WireMessage& m) {
    json j{{"v", m.v},
           {"type", to_string(m.type)},
           {"ts", m.ts_ms},
           {"body", m.body}};
    std::string line = j.dump();
    if (line.find('\n') != std::string::npos) {
        throw ProtocolError("encode: message contains an embedded newline", 0);
    }
    line.push_back('\n');
    return line;
}

WireMessage decode(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
        line.remove_suffix(1);
    }
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("decode: ") + e.what(), e.byte);
    }
    if (!j.is_object()) {
        throw ProtocolError("decode: top-level value is not an object", 0);
    }
    if (!j.contains("v") || !j["v"].is_number_integer() ||
        j["v"].get<int>() != kProtocolVersion) {
        throw ProtocolError("decode: missing or unsupported protocol version", 0);
    }
    if (!j.contains("type") || !j["type"].is_string()) {
        throw ProtocolError("decode: missing message type", 0);
    }
    const auto type = msg_type_from_string(j["type"].get<std::string>());
    if (!type) {
        throw ProtocolError("decode: unknown message type '" +
                                j["type"].get<std::string>() + "'",
                            0);
    }
    if (!j.contains("ts") || !j["ts"].is_number()) {
        throw ProtocolError("decode: missing timestamp", 0);
    }
    if (!j.contains("body") || !j["body"].is_object()) {
        throw ProtocolError("decode: missing body object", 0);
    }
    return WireMessage{kProtocolVersion, *type, j["ts"].get<double>(),
                       j["body"]};
}

namespace {

json lane_zones_to_json(const std::vector<LaneZone>& zones) {
    json arr = json::array();
    for (const auto& z : zones) {
        json poly = json::array();
        for (const auto& p : z.polygon) poly.push_back(json::array({p.x, p.y}));
        arr.push_back(json{{"polygon", poly}, {"vote", z.vote}});
    }
    return arr;
}

std::vector<LaneZone> lane_zones_from_json(const json& arr) {
    std::vector<LaneZone> zones;
    for (const auto& z : arr) {
        LaneZone zone;
        for (const auto& p : z.at("polygon")) {
            zone.polygon.push_back(
                PixelPoint{p.at(0).get<double>(), p.at(1).get<double>()});
        }
        zone.vote = z.at("vote").get<int>();
        zones.push_back(std::move(zone));
    }
    return zones;
}

const json& require(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw ProtocolError(std::string("body missing field '") + key + "'", 0);
    }
    return j.at(key);
}

}  // namespace

json to_json(const SensorRegistration& r) {
    json j{{"device_id", r.device_id},
           {"socket_in", r.socket_in},
           {"trajectory", r.trajectory_deg},
           {"zone", r.zone}};
    if (!r.lane_zones.empty()) j["lane_zones"] = lane_zones_to_json(r.lane_zones);
    if (r.position) {
        j["position"] = json{{"lat", r.position->lat}, {"lon", r.position->lon}};
    }
    return j;
}

SensorRegistration sensor_registration_from_json(const json& j) {
    SensorRegistration r;
    r.device_id = require(j, "device_id").get<std::string>();
    r.socket_in = require(j, "socket_in").get<std::string>();
    r.trajectory_deg = require(j, "trajectory").get<double>();
    r.zone = require(j, "zone").get<std::string>();
    if (j.contains("lane_zones")) r.lane_zones = lane_zones_from_json(j["lane_zones"]);
    if (j.contains("position")) {
        r.position = GeoPoint{j["position"].at("lat").get<double>(),
                              j["position"].at("lon").get<double>()};
    }
    return r;
}

json to_json(const UserRegistration& r) {
    return json{{"device_id", r.device_id},
                {"socket_in", r.socket_in},
                {"zone", r.zone}};
}

UserRegistration user_registration_from_json(const json& j) {
    UserRegistration r;
    r.device_id = require(j, "device_id").get<std::string>();
    r.socket_in = require(j, "socket_in").get<std::string>();
    r.zone = require(j, "zone").get<std::string>();
    return r;
}

json to_json(const ZoneUpdate& u) {
    return json{{"device_id", u.device_id}, {"zone", u.zone}};
}

ZoneUpdate zone_update_from_json(const json& j) {
    return ZoneUpdate{require(j, "device_id").get<std::string>(),
                      require(j, "zone").get<std::string>()};
}

json to_json(const EventNotification& e) {
    return json{{"event_id", e.event_id},
                {"sensor_id", e.sensor_id},
                {"sensor_position",
                 json{{"lat", e.sensor_position.lat}, {"lon", e.sensor_position.lon}}},
                {"object_bearing", e.object_bearing},
                {"object_class", e.object_class},
                {"heading", to_string(e.heading)},
                {"zone", e.zone},
                {"t_detect", e.t_detect_ms},
                {"severity_hint", e.severity_hint}};
}

EventNotification event_from_json(const json& j) {
    EventNotification e;
    e.event_id = require(j, "event_id").get<std::string>();
    e.sensor_id = require(j, "sensor_id").get<std::string>();
    const json& pos = require(j, "sensor_position");
    e.sensor_position = GeoPoint{pos.at("lat").get<double>(),
                                 pos.at("lon").get<double>()};
    e.object_bearing = require(j, "object_bearing").get<double>();
    e.object_class = require(j, "object_class").get<std::string>();
    e.heading = require(j, "heading").get<std::string>() == "toward"
                    ? Heading::Toward
                    : Heading::Away;
    e.zone = require(j, "zone").get<std::string>();
    e.t_detect_ms = require(j, "t_detect").get<double>();
    e.severity_hint = require(j, "severity_hint").get<std::string>();
    return e;
}

json to_json(const AckBody& a) {
    return json{{"ref", a.ref}, {"t_receive", a.t_receive_ms}};
}

AckBody ack_from_json(const json& j) {
    return AckBody{require(j, "ref").get<std::string>(),
                   require(j, "t_receive").get<double>()};
}

json to_json(const ErrorBody& e) {
    return json{{"code", e.code}, {"message", e.message}};
}

ErrorBody error_from_json(const json& j) {
    return ErrorBody{require(j, "code").get<std::string>(),
                     require(j, "message").get<std::string>()};
}

json to_json(const DetectionFrame& f) {
    json boxes = json::array();
    for (const auto& b : f.boxes) {
        json box{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h},
                 {"class", b.class_label}};
        if (b.view) box["view"] = to_string(*b.view);
        boxes.push_back(std::move(box));
    }
    return json{{"frame_id", f.frame_id}, {"sensor_id", f.sensor_id},
                {"timestamp", f.timestamp_ms}, {"width", f.width},
                {"height", f.height}, {"boxes", boxes}};
}

DetectionFrame frame_from_json(const json& j) {
    DetectionFrame f;
    f.frame_id = require(j, "frame_id").get<std::uint64_t>();
    f.sensor_id = require(j, "sensor_id").get<std::string>();
    f.timestamp_ms = require(j, "timestamp").get<std::int64_t>();
    f.width = require(j, "width").get<int>();
    f.height = require(j, "height").get<int>();
    for (const auto& b : require(j, "boxes")) {
        BoundingBox box;
        box.x = b.at("x").get<double>();
        box.y = b.at("y").get<double>();
        box.w = b.at("w").get<double>();
        box.h = b.at("h").get<double>();
        box.class_label = b.at("class").get<std::string>();
        if (b.contains("view")) {
            box.view = b["view"].get<std::string>() == "front" ? ViewLabel::Front
                                                               : ViewLabel::Rear;
        }
        f.boxes.push_back(std::move(box));
    }
    return f;
}

namespace {

bool privacy_key(std::string_view key) {
    // Exact names plus snake_case compounds (bearing_deg, speed_mps,
    // sensor_position, ...). Short aliases only match whole segments so
    // harmless keys like "latency_ms" stay clean.
    static constexpr std::array<std::string_view, 9> kSubstring{
        "latitude", "longitude", "bearing",  "speed",   "heading",
        "position", "trajectory", "velocity", "location"};
    for (auto f : kSubstring) {
        if (key.find(f) != std::string_view::npos) return true;
    }
    static constexpr std::array<std::string_view, 7> kSegment{
        "lat", "lon", "lng", "x", "y", "coords", "coordinates"};
    std::size_t start = 0;
    while (start <= key.size()) {
        std::size_t end = key.find('_', start);
        if (end == std::string_view::npos) end = key.size();
        const std::string_view seg = key.substr(start, end - start);
        for (auto f : kSegment) {
            if (seg == f) return true;
        }
        start = end + 1;
    }
    return false;
}

}  // namespace

bool contains_privacy_fields(const json& j) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            if (privacy_key(key)) return true;
            if (contains_privacy_fields(value)) return true;
        }
    } else if (j.is_array()) {
        for (const auto& value : j) {
            if (contains_privacy_fields(value)) return true;
        }
    }
    return false;
}

WireMessage make_message(MsgType type, double ts_ms, json body) {
    return WireMessage{kProtocolVersion, type, ts_ms, std::move(body)};
}

std::string make_event_id(double ts_ms, std::uint64_t random_hi,
                          std::uint64_t random_lo) {
    static const char* kAlphabet = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
    const auto ts = static_cast<std::uint64_t>(std::llround(std::max(0.0, ts_ms)));
    std::string id(26, '0');
    // 48-bit timestamp in 10 chars, 80 random bits in 16 chars
    std::uint64_t t = ts & ((1ULL << 48) - 1);
    for (int i = 9; i >= 0; --i) {
        id[static_cast<std::size_t>(i)] = kAlphabet[t & 31];
        t >>= 5;
    }
    std::uint64_t hi = random_hi & ((1ULL << 16) - 1);
    std::uint64_t lo = random_lo;
    for (int i = 25; i >= 13; --i) {
        id[static_cast<std::size_t>(i)] = kAlphabet[lo & 31];
        lo >>= 5;
    }
    for (int i = 12; i >= 10; --i) {
        id[static_cast<std::size_t>(i)] = kAlphabet[hi & 31];
        hi >>= 5;
    }
    return id;
}

}  // namespace evwarn::proto
