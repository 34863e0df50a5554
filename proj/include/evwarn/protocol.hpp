#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evwarn/direction.hpp"
#include "evwarn/geo.hpp"

namespace evwarn::proto {

using nlohmann::json;

inline constexpr int kProtocolVersion = 1;

enum class MsgType {
    RegisterSensor,
    RegisterUser,
    UpdateZone,
    Frame,
    Event,
    Ack,
    Error,
};

const char* to_string(MsgType t);
std::optional<MsgType> msg_type_from_string(std::string_view s);

struct ProtocolError : std::runtime_error {
    ProtocolError(const std::string& what, std::size_t offset)
        : std::runtime_error(what), byte_offset(offset) {}
    std::size_t byte_offset;
};

/// Envelope of every line on the wire. `ts_ms` is the sender's epoch clock
/// in (fractional) milliseconds; bodies are type-specific objects.
struct WireMessage {
    int v = kProtocolVersion;
    MsgType type = MsgType::Error;
    double ts_ms = 0.0;
    json body = json::object();

    bool operator==(const WireMessage& other) const {
        return v == other.v && type == other.type && ts_ms == other.ts_ms &&
               body == other.body;
    }
};

/// One newline-terminated JSON line, UTF-8, lowercase snake_case keys.
std::string encode(const WireMessage& m);

/// Parse one line (without or with trailing newline). Throws ProtocolError
/// carrying the offending byte offset.
WireMessage decode(std::string_view line);

struct SensorRegistration {
    std::string device_id;
    std::string socket_in;
    double trajectory_deg = 0.0;  // camera facing, compass degrees
    std::string zone;
    std::vector<LaneZone> lane_zones;
    // Sensor location, forwarded to consumers inside event notifications.
    std::optional<GeoPoint> position;
};

struct UserRegistration {
    std::string device_id;
    std::string socket_in;
    std::string zone;
};

struct ZoneUpdate {
    std::string device_id;
    std::string zone;
};

struct EventNotification {
    std::string event_id;
    std::string sensor_id;
    GeoPoint sensor_position;
    double object_bearing = 0.0;
    std::string object_class;
    Heading heading = Heading::Toward;
    std::string zone;
    double t_detect_ms = 0.0;
    std::string severity_hint;  // "proximity" or "intersection"
};

struct AckBody {
    std::string ref;           // message or event id being acknowledged
    double t_receive_ms = 0.0; // receiver clock, for hop-latency accounting
};

struct ErrorBody {
    std::string code;
    std::string message;
};

json to_json(const SensorRegistration& r);
json to_json(const UserRegistration& r);
json to_json(const ZoneUpdate& u);
json to_json(const EventNotification& e);
json to_json(const AckBody& a);
json to_json(const ErrorBody& e);
json to_json(const DetectionFrame& f);

SensorRegistration sensor_registration_from_json(const json& j);
UserRegistration user_registration_from_json(const json& j);
ZoneUpdate zone_update_from_json(const json& j);
EventNotification event_from_json(const json& j);
AckBody ack_from_json(const json& j);
ErrorBody error_from_json(const json& j);
DetectionFrame frame_from_json(const json& j);

/// Recursive scan for keys that would leak a user's position or movement
/// (lat/lon/bearing/speed and common aliases). User-module senders run
/// this on every outbound message.
bool contains_privacy_fields(const json& j);

WireMessage make_message(MsgType type, double ts_ms, json body);

/// Sortable unique id: millisecond timestamp plus random tail, Crockford
/// base32 (ULID layout).
std::string make_event_id(double ts_ms, std::uint64_t random_hi,
                          std::uint64_t random_lo);

}  // namespace evwarn::proto
