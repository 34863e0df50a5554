#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "evwarn/direction.hpp"
#include "evwarn/geo.hpp"
#include "evwarn/grid.hpp"
#include "evwarn/net.hpp"
#include "evwarn/protocol.hpp"

using namespace evwarn;
using namespace evwarn::net;

namespace {

constexpr double kW = 1920.0;
constexpr double kH = 1080.0;
const GeoPoint kOrigin{46.62, 14.30};

std::vector<LaneZone> two_lane_zones() {
    std::vector<LaneZone> zones;
    zones.push_back(LaneZone{
        {{0.0, 0.0}, {kW / 2.0, 0.0}, {kW / 2.0, kH}, {0.0, kH}}, +1});
    zones.push_back(LaneZone{
        {{kW / 2.0, 0.0}, {kW, 0.0}, {kW, kH}, {kW / 2.0, kH}}, -1});
    return zones;
}

proto::SensorRegistration sensor_reg(const std::string& device) {
    proto::SensorRegistration reg;
    reg.device_id = device;
    reg.socket_in = "127.0.0.1:0";
    reg.trajectory_deg = 0.0;  // camera faces north
    reg.zone = "B3";
    reg.lane_zones = two_lane_zones();
    reg.position = from_cartesian(CartPoint{1500.0, 3250.0}, kOrigin);
    return reg;
}

BoundingBox toward_box() {
    BoundingBox b;
    b.class_label = "emergency";
    b.x = 432.0;  // inbound (left) half
    b.y = 0.40 * kH - 86.4;
    b.w = 96.0;
    b.h = 86.4;
    b.view = ViewLabel::Front;
    return b;
}

BoundingBox away_box() {
    BoundingBox b = toward_box();
    b.x = 1392.0;         // outbound half
    b.y = 0.93 * kH - b.h;  // inside the exit band
    b.view = ViewLabel::Rear;
    return b;
}

DetectionFrame make_frame(std::uint64_t id, const std::string& sensor,
                          std::vector<BoundingBox> boxes) {
    DetectionFrame f;
    f.frame_id = id;
    f.sensor_id = sensor;
    f.timestamp_ms = static_cast<std::int64_t>(now_ms_epoch());
    f.width = static_cast<int>(kW);
    f.height = static_cast<int>(kH);
    f.boxes = std::move(boxes);
    return f;
}

ConsumerOptions consumer_opts(std::uint16_t port, const std::string& device,
                              const std::string& zone) {
    ConsumerOptions o;
    o.connect = Endpoint{"127.0.0.1", port};
    o.registration = proto::UserRegistration{device, "127.0.0.1:0", zone};
    o.local_trajectory =
        Trajectory::from_bearing(CartPoint{1100.0, 3200.0}, 90.0, 20.0);
    o.grid_origin = kOrigin;
    return o;
}

template <typename Pred>
bool eventually(Pred pred, int timeout_ms = 3000) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        if (pred()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return pred();
}

}  // namespace

TEST_CASE("endpoint parsing accepts host:port and rejects the rest") {
    const Endpoint a = parse_endpoint("127.0.0.1:8080");
    CHECK(a.host == "127.0.0.1");
    CHECK(a.port == 8080);
    CHECK(a.str() == "127.0.0.1:8080");

    const Endpoint b = parse_endpoint("example.test:0");
    CHECK(b.port == 0);

    CHECK_THROWS_AS((void)parse_endpoint("localhost"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_endpoint(":80"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_endpoint("host:"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_endpoint("host:abc"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_endpoint("host:70000"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_endpoint("host:-1"), std::invalid_argument);
}

TEST_CASE("log lines carry the pipe-separated fields") {
    CHECK(log_line(1000.0, "hub", "frame", "cam-07", "B3", 1.5) ==
          "1000.000 | hub | frame | cam-07 | B3 | 1.500");
    CHECK(log_line(2.5, "sensor", "ack", "", "", std::nullopt) ==
          "2.500 | sensor | ack | - | - | -");
}

TEST_CASE("hop latency accounting flags clock disagreement") {
    SUBCASE("empty input") {
        const HopStats h = measure_hop_latency({});
        CHECK(h.stats.n == 0);
        CHECK(h.negatives == 0);
        CHECK(!h.clock_warning);
    }
    SUBCASE("all positive") {
        const std::vector<double> v{1.0, 2.0, 3.0};
        const HopStats h = measure_hop_latency(v);
        CHECK(h.stats.mean == doctest::Approx(2.0));
        CHECK(h.stats.max == 3.0);
        CHECK(h.negatives == 0);
        CHECK(!h.clock_warning);
    }
    SUBCASE("exactly one percent negative stays quiet") {
        std::vector<double> v(100, 1.0);
        v[7] = -0.2;
        const HopStats h = measure_hop_latency(v);
        CHECK(h.negatives == 1);
        CHECK(!h.clock_warning);
    }
    SUBCASE("above one percent warns") {
        std::vector<double> v(100, 1.0);
        v[7] = -0.2;
        v[42] = -0.1;
        const HopStats h = measure_hop_latency(v);
        CHECK(h.negatives == 2);
        CHECK(h.clock_warning);
    }
}

TEST_CASE("frame to verdict roundtrip over loopback") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    po.grid_origin = kOrigin;
    ProcessingNode node(std::move(po));
    REQUIRE(node.port() != 0);

    SensorOptions so;
    so.connect = Endpoint{"127.0.0.1", node.port()};
    so.registration = sensor_reg("cam-07");
    SensorSession sensor(std::move(so));

    ConsumerSession consumer(consumer_opts(node.port(), "v2", "B3"));
    REQUIRE(consumer.connected());

    sensor.send_frame(make_frame(1, "cam-07", {toward_box()}));

    const auto verdict = consumer.wait_event(5000);
    REQUIRE(verdict.has_value());
    CHECK(verdict->level == ThreatLevel::Alarm);
    CHECK(verdict->event.sensor_id == "cam-07");
    CHECK(verdict->event.zone == "B3");
    CHECK(verdict->event.object_class == "emergency");
    CHECK(verdict->event.heading == Heading::Toward);
    CHECK(verdict->event.object_bearing == doctest::Approx(180.0));
    CHECK(verdict->event.severity_hint == "proximity");  // same zone as sensor
    CHECK(verdict->event.event_id.size() == 26);
    CHECK(verdict->hop_latency_ms > -5.0);
    CHECK(verdict->hop_latency_ms < 5000.0);
    CHECK(consumer.history().size() == 1);
    CHECK(consumer.hop_latencies_ms().size() == 1);

    CHECK(eventually([&] { return node.frames_seen() == 1; }));
    CHECK(eventually([&] { return node.events_sent() == 1; }));
    CHECK(node.events_dropped() == 0);
    // the consumer's ack closes the execution-latency measurement
    CHECK(eventually([&] { return node.exe_latencies_ms().size() == 1; }));
    REQUIRE(node.eval_latencies_ms().size() == 1);
    CHECK(node.eval_latencies_ms()[0] > -5.0);

    // the hub acked both the registration and the frame
    CHECK(eventually([&] {
        for (const auto& m : sensor.drain_replies()) {
            if (m.type != proto::MsgType::Ack) continue;
            const auto ack = proto::ack_from_json(m.body);
            if (ack.ref == "frame:1") return true;
        }
        return false;
    }));

    consumer.close();
    sensor.close();
    node.stop();
}

TEST_CASE("departing and non-emergency detections raise no event") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    ProcessingNode node(std::move(po));

    SensorOptions so;
    so.connect = Endpoint{"127.0.0.1", node.port()};
    so.registration = sensor_reg("cam-07");
    SensorSession sensor(std::move(so));
    ConsumerSession consumer(consumer_opts(node.port(), "v2", "B3"));

    sensor.send_frame(make_frame(1, "cam-07", {away_box()}));

    BoundingBox civilian = toward_box();
    civilian.class_label = "car";
    sensor.send_frame(make_frame(2, "cam-07", {civilian}));

    CHECK(!consumer.wait_event(400).has_value());
    CHECK(eventually([&] { return node.frames_seen() == 2; }));
    CHECK(node.events_sent() == 0);

    consumer.close();
    sensor.close();
    node.stop();
}

TEST_CASE("zone updates re-route event dissemination") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    ProcessingNode node(std::move(po));

    SensorOptions so;
    so.connect = Endpoint{"127.0.0.1", node.port()};
    so.registration = sensor_reg("cam-07");
    SensorSession sensor(std::move(so));
    ConsumerSession consumer(consumer_opts(node.port(), "v2", "B3"));

    // move far outside the sensor's 3x3 neighborhood: no delivery
    consumer.update_zone("E9");
    sensor.send_frame(make_frame(1, "cam-07", {toward_box()}));
    CHECK(!consumer.wait_event(400).has_value());

    // neighboring cell: delivered, hinted as a crossing-style threat
    consumer.update_zone("C3");
    sensor.send_frame(make_frame(2, "cam-07", {toward_box()}));
    const auto verdict = consumer.wait_event(5000);
    REQUIRE(verdict.has_value());
    CHECK(verdict->event.severity_hint == "intersection");

    CHECK_THROWS_AS(consumer.update_zone("not-a-zone"), std::invalid_argument);

    consumer.close();
    sensor.close();
    node.stop();
}

TEST_CASE("frames from unregistered sensors are rejected") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    ProcessingNode node(std::move(po));

    LineSocket raw = LineSocket::connect_to(Endpoint{"127.0.0.1", node.port()});
    const auto msg =
        proto::make_message(proto::MsgType::Frame, now_ms_epoch(),
                            proto::to_json(make_frame(9, "ghost", {})));
    REQUIRE(raw.send_line(proto::encode(msg)));

    const auto line = raw.recv_line(3000);
    REQUIRE(line.has_value());
    const auto reply = proto::decode(*line);
    REQUIRE(reply.type == proto::MsgType::Error);
    const auto err = proto::error_from_json(reply.body);
    CHECK(err.code == "unregistered_sensor");
    CHECK(err.message == "ghost");

    raw.close();
    node.stop();
}

TEST_CASE("malformed registrations are rejected with an error reply") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    ProcessingNode node(std::move(po));

    SensorOptions so;
    so.connect = Endpoint{"127.0.0.1", node.port()};
    so.registration = sensor_reg("cam-07");
    so.registration.zone = "nonsense";
    so.handshake_timeout_ms = 3000.0;
    try {
        SensorSession bad(std::move(so));
        FAIL("registration with a malformed zone must be rejected");
    } catch (const SocketError& e) {
        CHECK(std::string(e.what()).find("bad_zone") != std::string::npos);
    }

    node.stop();
}

TEST_CASE("device ids are exclusive while their connection lives") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    ProcessingNode node(std::move(po));

    SensorOptions so;
    so.connect = Endpoint{"127.0.0.1", node.port()};
    so.registration = sensor_reg("cam-07");
    SensorSession first(std::move(so));

    SensorOptions dup;
    dup.connect = Endpoint{"127.0.0.1", node.port()};
    dup.registration = sensor_reg("cam-07");
    dup.handshake_timeout_ms = 3000.0;
    try {
        SensorSession second(std::move(dup));
        FAIL("duplicate device id must be rejected while the first is live");
    } catch (const SocketError& e) {
        CHECK(std::string(e.what()).find("duplicate_device") != std::string::npos);
    }

    // after the first connection goes away the id becomes available again
    first.close();
    bool reregistered = false;
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (std::chrono::steady_clock::now() < deadline) {
        try {
            SensorOptions retry;
            retry.connect = Endpoint{"127.0.0.1", node.port()};
            retry.registration = sensor_reg("cam-07");
            retry.handshake_timeout_ms = 1000.0;
            SensorSession third(std::move(retry));
            reregistered = true;
            third.close();
            break;
        } catch (const SocketError&) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    }
    CHECK(reregistered);

    node.stop();
}

TEST_CASE("consumers in a different neighborhood never hear the event") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    ProcessingNode node(std::move(po));

    SensorOptions so;
    so.connect = Endpoint{"127.0.0.1", node.port()};
    so.registration = sensor_reg("cam-07");
    SensorSession sensor(std::move(so));

    ConsumerSession near(consumer_opts(node.port(), "v-near", "C4"));
    ConsumerSession far(consumer_opts(node.port(), "v-far", "G9"));

    sensor.send_frame(make_frame(1, "cam-07", {toward_box()}));

    REQUIRE(near.wait_event(5000).has_value());
    CHECK(!far.wait_event(400).has_value());
    CHECK(eventually([&] { return node.events_sent() == 1; }));

    near.close();
    far.close();
    sensor.close();
    node.stop();
}

TEST_CASE("consumer verdicts depend on the local trajectory") {
    ProcessingOptions po;
    po.listen = Endpoint{"127.0.0.1", 0};
    ProcessingNode node(std::move(po));

    SensorOptions so;
    so.connect = Endpoint{"127.0.0.1", node.port()};
    so.registration = sensor_reg("cam-07");
    SensorSession sensor(std::move(so));

    // same registration zone, but driving away from the crossing: the path
    // meets the object line behind the user, so no alarm fires locally
    ConsumerOptions away = consumer_opts(node.port(), "v9", "B3");
    away.local_trajectory =
        Trajectory::from_bearing(CartPoint{1100.0, 3200.0}, 270.0, 20.0);
    ConsumerSession consumer(std::move(away));

    sensor.send_frame(make_frame(1, "cam-07", {toward_box()}));
    const auto verdict = consumer.wait_event(5000);
    REQUIRE(verdict.has_value());
    CHECK(verdict->level != ThreatLevel::Alarm);

    consumer.close();
    sensor.close();
    node.stop();
}
