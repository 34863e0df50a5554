#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "evwarn/protocol.hpp"
#include "evwarn/stats.hpp"
#include "evwarn/threat.hpp"

namespace evwarn::net {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

/// "host:port"; square-bracket IPv6 is out of scope. Throws
/// std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

double now_ms_epoch();

struct SocketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Blocking line-oriented TCP stream with an internal read buffer.
class LineSocket {
public:
    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    ~LineSocket();
    LineSocket(LineSocket&& other) noexcept;
    LineSocket& operator=(LineSocket&& other) noexcept;
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;

    static LineSocket connect_to(const Endpoint& ep);  // throws SocketError

    bool open() const { return fd_ >= 0; }
    bool closed_by_peer() const { return eof_; }

    /// Sends the full buffer; returns false when the peer is gone.
    bool send_line(const std::string& line);

    /// Next full line without its newline. timeout_ms < 0 blocks. Returns
    /// nullopt on timeout or on EOF (check closed_by_peer()).
    std::optional<std::string> recv_line(int timeout_ms = -1);

    void close();
    int fd() const { return fd_; }

private:
    int fd_ = -1;
    bool eof_ = false;
    std::string buf_;
};

class Listener {
public:
    explicit Listener(const Endpoint& ep);  // throws SocketError
    ~Listener();
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;

    std::uint16_t port() const { return port_; }
    std::optional<LineSocket> accept_client();  // nullopt once closed
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

using LogFn = std::function<void(const std::string&)>;

/// `ts | role | msg_type | device | zone | latency_ms`; latency prints "-"
/// when not applicable.
std::string log_line(double ts_ms, const std::string& role,
                     const std::string& msg_type, const std::string& device,
                     const std::string& zone, std::optional<double> latency_ms);

struct HopStats {
    SummaryStats stats;
    std::size_t negatives = 0;
    /// Set when negative one-way latencies exceed 1% of samples, which on
    /// distinct hosts means the clocks disagree.
    bool clock_warning = false;
};

HopStats measure_hop_latency(std::span<const double> latencies_ms);

struct ProcessingOptions {
    Endpoint listen{};  // port 0 binds an ephemeral port
    GeoPoint grid_origin{46.62, 14.30};
    double cell_size_m = 1000.0;
    std::string emergency_class = "emergency";
    double edge_band = 0.2;
    LogFn log;  // optional
};

/// Registry-holding hub: accepts sensor and user registrations, votes
/// direction on incoming detection frames, and fans approaching-emergency
/// events out to every user registered in the sensor's 3x3 neighborhood.
/// Starts its accept thread on construction.
class ProcessingNode {
public:
    explicit ProcessingNode(ProcessingOptions opts);
    ~ProcessingNode();
    ProcessingNode(const ProcessingNode&) = delete;
    ProcessingNode& operator=(const ProcessingNode&) = delete;

    std::uint16_t port() const;
    void stop();  // idempotent; joins all session threads

    std::size_t frames_seen() const;
    std::size_t events_sent() const;
    std::size_t events_dropped() const;
    std::vector<double> eval_latencies_ms() const;  // frame receipt minus send ts
    std::vector<double> exe_latencies_ms() const;   // ack t_receive minus event ts

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct SensorOptions {
    Endpoint connect{};
    proto::SensorRegistration registration;
    double handshake_timeout_ms = 5000.0;
    LogFn log;
};

/// Sensor-side client: registers on construction and streams detection
/// frames down the same connection.
class SensorSession {
public:
    explicit SensorSession(SensorOptions opts);  // throws SocketError
    ~SensorSession();

    void send_frame(const DetectionFrame& f);  // throws SocketError when gone
    /// Non-blocking drain of acks/errors the hub pushed back.
    std::vector<proto::WireMessage> drain_replies();
    void close();

private:
    SensorOptions opts_;
    LineSocket sock_;
};

struct ConsumerOptions {
    Endpoint connect{};
    proto::UserRegistration registration;
    /// Held locally only; the privacy rule forbids sending it anywhere.
    Trajectory local_trajectory;
    GeoPoint grid_origin{46.62, 14.30};
    double cell_size_m = 1000.0;
    double assumed_object_speed_mps = 20.0;
    double handshake_timeout_ms = 5000.0;
    LogFn log;
};

struct ConsumerVerdict {
    proto::EventNotification event;
    ThreatLevel level = ThreatLevel::None;
    double t_receive_ms = 0.0;
    double hop_latency_ms = 0.0;  // t_receive minus the event envelope ts
};

/// User-side client: registers, then turns incoming event notifications
/// into locally classified verdicts. Every outbound message is checked
/// against the privacy schema before it leaves the process.
class ConsumerSession {
public:
    explicit ConsumerSession(ConsumerOptions opts);  // throws SocketError
    ~ConsumerSession();

    void update_zone(const std::string& zone);

    /// Blocks up to timeout_ms for the next event; acks it, classifies it,
    /// and returns the verdict. nullopt on timeout or closed connection.
    std::optional<ConsumerVerdict> wait_event(int timeout_ms);

    const std::vector<ConsumerVerdict>& history() const { return history_; }
    std::vector<double> hop_latencies_ms() const;
    bool connected() const { return sock_.open() && !sock_.closed_by_peer(); }
    void close();

private:
    void send_checked(const proto::WireMessage& m);

    ConsumerOptions opts_;
    LineSocket sock_;
    UserState self_;
    std::vector<ConsumerVerdict> history_;
};

}  // namespace evwarn::net
