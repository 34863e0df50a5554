#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "evwarn/protocol.hpp"

using namespace evwarn;
using namespace evwarn::proto;

namespace {

SensorRegistration demo_sensor_reg() {
    SensorRegistration r;
    r.device_id = "cam-07";
    r.socket_in = "10.0.0.7:9000";
    r.trajectory_deg = 0.0;
    r.zone = "B3";
    r.lane_zones = {
        LaneZone{{{0, 0}, {960, 0}, {960, 1080}, {0, 1080}}, +1},
        LaneZone{{{960, 0}, {1920, 0}, {1920, 1080}, {960, 1080}}, -1},
    };
    r.position = GeoPoint{46.633, 14.32};
    return r;
}

EventNotification demo_event() {
    EventNotification e;
    e.event_id = "01J8ZZX0000000000000000000";
    e.sensor_id = "cam-07";
    e.sensor_position = GeoPoint{46.633, 14.32};
    e.object_bearing = 180.0;
    e.object_class = "emergency";
    e.heading = Heading::Toward;
    e.zone = "B3";
    e.t_detect_ms = 1723717000123.5;
    e.severity_hint = "intersection";
    return e;
}

}  // namespace

TEST_CASE("message type names round trip") {
    for (MsgType t : {MsgType::RegisterSensor, MsgType::RegisterUser,
                      MsgType::UpdateZone, MsgType::Frame, MsgType::Event,
                      MsgType::Ack, MsgType::Error}) {
        const auto back = msg_type_from_string(to_string(t));
        REQUIRE(back.has_value());
        CHECK(*back == t);
    }
    CHECK_FALSE(msg_type_from_string("bogus").has_value());
}

TEST_CASE("user registration encodes to one flat line") {
    UserRegistration r;
    r.device_id = "u-01";
    r.socket_in = "127.0.0.1:0";
    r.zone = "B3";
    const std::string line =
        encode(make_message(MsgType::RegisterUser, 1000.0, to_json(r)));
    CHECK(line.find("\"type\":\"register_user\"") != std::string::npos);
    CHECK(line.find("\"zone\":\"B3\"") != std::string::npos);
    CHECK(line.back() == '\n');
    CHECK(line.find('\n') == line.size() - 1);  // single line
}

TEST_CASE("every message type round trips through the codec") {
    std::vector<WireMessage> corpus;
    corpus.push_back(make_message(MsgType::RegisterSensor, 1.5,
                                  to_json(demo_sensor_reg())));
    UserRegistration ur;
    ur.device_id = "u-9";
    ur.socket_in = "127.0.0.1:0";
    ur.zone = "AA17";
    corpus.push_back(make_message(MsgType::RegisterUser, 2.25, to_json(ur)));
    ZoneUpdate zu;
    zu.device_id = "u-9";
    zu.zone = "G17";
    corpus.push_back(make_message(MsgType::UpdateZone, 3.0, to_json(zu)));
    DetectionFrame f;
    f.frame_id = 41;
    f.sensor_id = "cam-07";
    f.timestamp_ms = 1723717000000;
    f.width = 1920;
    f.height = 1080;
    BoundingBox b;
    b.x = 100;
    b.y = 220;
    b.w = 80;
    b.h = 64;
    b.class_label = "emergency";
    b.view = ViewLabel::Front;
    f.boxes.push_back(b);
    corpus.push_back(make_message(MsgType::Frame, 4.0, to_json(f)));
    corpus.push_back(make_message(MsgType::Event, 5.0, to_json(demo_event())));
    corpus.push_back(
        make_message(MsgType::Ack, 6.0, to_json(AckBody{"frame:41", 1234.5})));
    corpus.push_back(make_message(
        MsgType::Error, 7.0, to_json(ErrorBody{"bad_frame", "went sideways"})));

    for (const WireMessage& m : corpus) {
        const WireMessage back = decode(encode(m));
        CHECK(back == m);
    }
}

TEST_CASE("typed bodies survive the round trip") {
    const auto reg = demo_sensor_reg();
    const auto reg2 = sensor_registration_from_json(to_json(reg));
    CHECK(reg2.device_id == reg.device_id);
    CHECK(reg2.zone == reg.zone);
    CHECK(reg2.lane_zones.size() == 2);
    CHECK(reg2.lane_zones[1].vote == -1);
    CHECK(reg2.lane_zones[0].polygon.size() == 4);
    REQUIRE(reg2.position.has_value());
    CHECK(reg2.position->lat == doctest::Approx(46.633));

    const auto ev = demo_event();
    const auto ev2 = event_from_json(to_json(ev));
    CHECK(ev2.event_id == ev.event_id);
    CHECK(ev2.heading == Heading::Toward);
    CHECK(ev2.severity_hint == "intersection");
    CHECK(ev2.t_detect_ms == doctest::Approx(ev.t_detect_ms));
}

TEST_CASE("malformed lines raise protocol errors") {
    CHECK_THROWS_AS(decode("{\"v\":1,\"type\":\"ack\""), ProtocolError);
    CHECK_THROWS_AS(decode("not json at all"), ProtocolError);
    CHECK_THROWS_AS(decode(""), ProtocolError);
    CHECK_THROWS_AS(decode("{\"v\":1}"), ProtocolError);  // missing type
    CHECK_THROWS_AS(decode("{\"v\":99,\"type\":\"ack\",\"ts\":0,\"body\":{}}"),
                    ProtocolError);
    CHECK_THROWS_AS(
        decode("{\"v\":1,\"type\":\"nope\",\"ts\":0,\"body\":{}}"),
        ProtocolError);
}

TEST_CASE("protocol errors carry a byte offset") {
    try {
        decode("not json at all");
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(e.byte_offset < std::string("not json at all").size() + 1);
    }
}

TEST_CASE("privacy scan flags position and movement keys at any depth") {
    CHECK(contains_privacy_fields(json{{"lat", 46.0}}));
    CHECK(contains_privacy_fields(json{{"latitude", 46.0}}));
    CHECK(contains_privacy_fields(json{{"lon", 14.0}}));
    CHECK(contains_privacy_fields(json{{"lng", 14.0}}));
    CHECK(contains_privacy_fields(json{{"bearing", 90.0}}));
    CHECK(contains_privacy_fields(json{{"bearing_deg", 90.0}}));
    CHECK(contains_privacy_fields(json{{"speed", 20.0}}));
    CHECK(contains_privacy_fields(json{{"speed_mps", 20.0}}));
    CHECK(contains_privacy_fields(json{{"position", json{{"x", 1.0}}}}));
    CHECK(contains_privacy_fields(json{{"trajectory", 90.0}}));
    CHECK(contains_privacy_fields(
        json{{"outer", json{{"inner", json{{"lat", 1.0}}}}}}));
    CHECK(contains_privacy_fields(
        json{{"list", json::array({json{{"heading", 12.0}}})}}));

    CHECK_FALSE(contains_privacy_fields(json{{"zone", "B3"}}));
    CHECK_FALSE(contains_privacy_fields(
        json{{"device_id", "u-1"}, {"socket_in", "h:1"}, {"zone", "A0"}}));
    CHECK_FALSE(contains_privacy_fields(json{{"ref", "frame:1"}}));
}

TEST_CASE("user-module message bodies never leak movement data") {
    UserRegistration r;
    r.device_id = "u-42";
    r.socket_in = "127.0.0.1:64001";
    r.zone = "C9";
    CHECK_FALSE(contains_privacy_fields(to_json(r)));

    ZoneUpdate u;
    u.device_id = "u-42";
    u.zone = "C10";
    CHECK_FALSE(contains_privacy_fields(to_json(u)));

    CHECK_FALSE(contains_privacy_fields(to_json(AckBody{"some-event", 99.0})));
}

TEST_CASE("event ids are sortable and unique") {
    std::set<std::string> ids;
    std::string prev;
    for (int i = 0; i < 100; ++i) {
        const std::string id =
            make_event_id(1700000000000.0 + i, 0x1234 + i, 0x9876 + i);
        CHECK(id.size() == 26);
        for (char c : id) {
            CHECK(std::string("0123456789ABCDEFGHJKMNPQRSTVWXYZ").find(c) !=
                  std::string::npos);
        }
        if (!prev.empty()) CHECK(prev < id);
        ids.insert(id);
        prev = id;
    }
    CHECK(ids.size() == 100);
}
