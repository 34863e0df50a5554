#include "evwarn/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <utility>

#include "evwarn/direction.hpp"
#include "evwarn/grid.hpp"

namespace evwarn::net {

using nlohmann::json;

namespace {

std::string errno_text(const char* what) {
    return std::string(what) + ": " + std::strerror(errno);
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument("endpoint must be host:port: " + text);
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    const std::string port_str = text.substr(colon + 1);
    std::size_t pos = 0;
    long port = 0;
    try {
        port = std::stol(port_str, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("endpoint port is not a number: " + text);
    }
    if (pos != port_str.size() || port < 0 || port > 65535) {
        throw std::invalid_argument("endpoint port out of range: " + text);
    }
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

double now_ms_epoch() {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    return std::chrono::duration<double, std::milli>(now).count();
}

LineSocket::~LineSocket() { close(); }

LineSocket::LineSocket(LineSocket&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      eof_(other.eof_),
      buf_(std::move(other.buf_)) {}

LineSocket& LineSocket::operator=(LineSocket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
        eof_ = other.eof_;
        buf_ = std::move(other.buf_);
    }
    return *this;
}

LineSocket LineSocket::connect_to(const Endpoint& ep) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port_str = std::to_string(ep.port);
    const int rc = ::getaddrinfo(ep.host.c_str(), port_str.c_str(), &hints, &res);
    if (rc != 0) {
        throw SocketError("resolve " + ep.str() + ": " + gai_strerror(rc));
    }
    int fd = -1;
    int last_errno = ECONNREFUSED;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_errno = errno;
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        last_errno = errno;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) {
        errno = last_errno;
        throw SocketError(errno_text(("connect " + ep.str()).c_str()));
    }
    set_nodelay(fd);
    return LineSocket(fd);
}

bool LineSocket::send_line(const std::string& line) {
    if (fd_ < 0) return false;
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t n =
            ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

std::optional<std::string> LineSocket::recv_line(int timeout_ms) {
    while (fd_ >= 0) {
        const auto nl = buf_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buf_.substr(0, nl);
            buf_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (eof_) return std::nullopt;

        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, timeout_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw SocketError(errno_text("poll"));
        }
        if (rc == 0) return std::nullopt;  // timeout

        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            eof_ = true;
            return std::nullopt;
        }
        if (n == 0) {
            eof_ = true;  // a trailing partial line is dropped: not a message
            return std::nullopt;
        }
        buf_.append(chunk, static_cast<std::size_t>(n));
    }
    return std::nullopt;
}

void LineSocket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Listener::Listener(const Endpoint& ep) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port_str = std::to_string(ep.port);
    const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(),
                                 port_str.c_str(), &hints, &res);
    if (rc != 0) {
        throw SocketError("resolve " + ep.str() + ": " + gai_strerror(rc));
    }
    int last_errno = EADDRINUSE;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd_ < 0) {
            last_errno = errno;
            continue;
        }
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd_, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd_, 64) == 0) {
            break;
        }
        last_errno = errno;
        ::close(fd_);
        fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) {
        errno = last_errno;
        throw SocketError(errno_text(("listen " + ep.str()).c_str()));
    }
    sockaddr_storage addr{};
    socklen_t alen = sizeof addr;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &alen) == 0) {
        if (addr.ss_family == AF_INET) {
            port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
        } else if (addr.ss_family == AF_INET6) {
            port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
        }
    }
}

Listener::~Listener() { close(); }

std::optional<LineSocket> Listener::accept_client() {
    while (fd_ >= 0) {
        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 200);
        if (rc < 0) {
            if (errno == EINTR) continue;
            return std::nullopt;
        }
        if (rc == 0) continue;  // periodic wakeup so close() is noticed
        if (p.revents & (POLLNVAL | POLLERR)) return std::nullopt;
        const int cfd = ::accept(fd_, nullptr, nullptr);
        if (cfd < 0) {
            if (errno == EINTR || errno == ECONNABORTED) continue;
            return std::nullopt;  // EINVAL after shutdown
        }
        set_nodelay(cfd);
        return LineSocket(cfd);
    }
    return std::nullopt;
}

void Listener::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

std::string log_line(double ts_ms, const std::string& role,
                     const std::string& msg_type, const std::string& device,
                     const std::string& zone, std::optional<double> latency_ms) {
    char lat[48];
    if (latency_ms) {
        std::snprintf(lat, sizeof lat, "%.3f", *latency_ms);
    } else {
        std::snprintf(lat, sizeof lat, "-");
    }
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.3f | %s | %s | %s | %s | %s", ts_ms,
                  role.c_str(), msg_type.c_str(),
                  device.empty() ? "-" : device.c_str(),
                  zone.empty() ? "-" : zone.c_str(), lat);
    return buf;
}

HopStats measure_hop_latency(std::span<const double> latencies_ms) {
    HopStats h;
    if (latencies_ms.empty()) return h;
    h.stats = summarize_samples(latencies_ms);
    for (double v : latencies_ms) {
        if (v < 0.0) ++h.negatives;
    }
    h.clock_warning = static_cast<double>(h.negatives) >
                      0.01 * static_cast<double>(latencies_ms.size());
    return h;
}

// ---------------------------------------------------------------------------
// processing node

namespace {

struct ClientConn {
    explicit ClientConn(LineSocket s) : sock(std::move(s)) {}
    LineSocket sock;
    std::mutex send_mu;

    bool send(const std::string& line) {
        std::lock_guard<std::mutex> lk(send_mu);
        return sock.send_line(line);
    }
    void wake() { ::shutdown(sock.fd(), SHUT_RDWR); }
};

}  // namespace

struct ProcessingNode::Impl {
    explicit Impl(ProcessingOptions o) : opts(std::move(o)), listener(opts.listen) {}

    ProcessingOptions opts;
    Listener listener;
    std::atomic<bool> stopping{false};

    std::thread accept_thread;
    std::mutex conns_mu;
    std::vector<std::shared_ptr<ClientConn>> conns;
    std::vector<std::thread> session_threads;

    struct SensorEntry {
        proto::SensorRegistration reg;
        Cell zone;
        std::shared_ptr<ClientConn> conn;
    };
    struct UserEntry {
        proto::UserRegistration reg;
        Cell zone;
        std::shared_ptr<ClientConn> conn;
        std::deque<std::string> pending;  // at most one queued event line
    };
    std::mutex reg_mu;
    std::map<std::string, SensorEntry> sensors;
    std::map<std::string, std::shared_ptr<UserEntry>> users;

    std::mutex stats_mu;
    std::vector<double> eval_ms;
    std::vector<double> exe_ms;
    std::map<std::string, double> event_send_ts;
    std::size_t frames = 0;
    std::size_t events = 0;
    std::size_t dropped = 0;

    std::mutex id_mu;
    std::mt19937_64 id_rng{std::random_device{}()};

    void log(const std::string& line) {
        if (opts.log) opts.log(line);
    }
    void log_msg(const std::string& type, const std::string& device,
                 const std::string& zone, std::optional<double> latency) {
        log(log_line(now_ms_epoch(), "processing", type, device, zone, latency));
    }

    void reply(const std::shared_ptr<ClientConn>& conn, proto::MsgType type,
               json body) {
        const auto msg = proto::make_message(type, now_ms_epoch(), std::move(body));
        conn->send(proto::encode(msg));
    }
    void reply_error(const std::shared_ptr<ClientConn>& conn,
                     const std::string& code, const std::string& message) {
        reply(conn, proto::MsgType::Error, proto::to_json(proto::ErrorBody{code, message}));
        log_msg("error", code, "", std::nullopt);
    }

    std::string next_event_id(double ts) {
        std::lock_guard<std::mutex> lk(id_mu);
        return proto::make_event_id(ts, id_rng(), id_rng());
    }

    bool device_taken(const std::string& id) {
        if (const auto it = sensors.find(id); it != sensors.end()) {
            return it->second.conn && it->second.conn->sock.open() &&
                   !it->second.conn->sock.closed_by_peer();
        }
        if (const auto it = users.find(id); it != users.end()) {
            return it->second->conn && it->second->conn->sock.open() &&
                   !it->second->conn->sock.closed_by_peer();
        }
        return false;
    }
    bool device_known(const std::string& id) {
        return sensors.count(id) > 0 || users.count(id) > 0;
    }

    void accept_loop() {
        while (!stopping) {
            auto client = listener.accept_client();
            if (!client) break;
            auto conn = std::make_shared<ClientConn>(std::move(*client));
            std::lock_guard<std::mutex> lk(conns_mu);
            conns.push_back(conn);
            session_threads.emplace_back([this, conn] { session_loop(conn); });
        }
    }

    void session_loop(const std::shared_ptr<ClientConn>& conn) {
        while (!stopping) {
            std::optional<std::string> line;
            try {
                line = conn->sock.recv_line(-1);
            } catch (const SocketError&) {
                break;
            }
            if (!line) break;  // EOF or shutdown
            try {
                handle_line(conn, *line);
            } catch (const std::exception& e) {
                reply_error(conn, "internal_error", e.what());
            }
        }
        detach_registrations(conn);
    }

    void detach_registrations(const std::shared_ptr<ClientConn>& conn) {
        std::lock_guard<std::mutex> lk(reg_mu);
        for (auto& [id, entry] : sensors) {
            if (entry.conn == conn) entry.conn.reset();
        }
        for (auto& [id, entry] : users) {
            if (entry->conn == conn) entry->conn.reset();
        }
    }

    void handle_line(const std::shared_ptr<ClientConn>& conn,
                     const std::string& line) {
        proto::WireMessage msg;
        try {
            msg = proto::decode(line);
        } catch (const proto::ProtocolError& e) {
            reply_error(conn, "protocol_error",
                        std::string(e.what()) + " at byte " +
                            std::to_string(e.byte_offset));
            return;
        }
        switch (msg.type) {
            case proto::MsgType::RegisterSensor: return on_register_sensor(conn, msg);
            case proto::MsgType::RegisterUser: return on_register_user(conn, msg);
            case proto::MsgType::UpdateZone: return on_update_zone(conn, msg);
            case proto::MsgType::Frame: return on_frame(conn, msg);
            case proto::MsgType::Ack: return on_ack(msg);
            case proto::MsgType::Event:
            case proto::MsgType::Error:
                log_msg(proto::to_string(msg.type), "", "", std::nullopt);
                return;
        }
    }

    void on_register_sensor(const std::shared_ptr<ClientConn>& conn,
                            const proto::WireMessage& msg) {
        proto::SensorRegistration reg;
        try {
            reg = proto::sensor_registration_from_json(msg.body);
        } catch (const std::exception& e) {
            return reply_error(conn, "bad_registration", e.what());
        }
        Cell zone;
        try {
            zone = parse_cell_name(reg.zone, opts.cell_size_m);
        } catch (const std::exception& e) {
            return reply_error(conn, "bad_zone", e.what());
        }
        {
            std::lock_guard<std::mutex> lk(reg_mu);
            if (device_taken(reg.device_id)) {
                return reply_error(conn, "duplicate_device", reg.device_id);
            }
            sensors[reg.device_id] = SensorEntry{reg, zone, conn};
        }
        reply(conn, proto::MsgType::Ack,
              proto::to_json(proto::AckBody{"register_sensor:" + reg.device_id,
                                            now_ms_epoch()}));
        log_msg("register_sensor", reg.device_id, reg.zone, std::nullopt);
    }

    void on_register_user(const std::shared_ptr<ClientConn>& conn,
                          const proto::WireMessage& msg) {
        proto::UserRegistration reg;
        try {
            reg = proto::user_registration_from_json(msg.body);
        } catch (const std::exception& e) {
            return reply_error(conn, "bad_registration", e.what());
        }
        Cell zone;
        try {
            zone = parse_cell_name(reg.zone, opts.cell_size_m);
        } catch (const std::exception& e) {
            return reply_error(conn, "bad_zone", e.what());
        }
        {
            std::lock_guard<std::mutex> lk(reg_mu);
            if (device_taken(reg.device_id)) {
                return reply_error(conn, "duplicate_device", reg.device_id);
            }
            auto entry = std::make_shared<UserEntry>();
            entry->reg = reg;
            entry->zone = zone;
            entry->conn = conn;
            users[reg.device_id] = std::move(entry);
        }
        reply(conn, proto::MsgType::Ack,
              proto::to_json(proto::AckBody{"register_user:" + reg.device_id,
                                            now_ms_epoch()}));
        log_msg("register_user", reg.device_id, reg.zone, std::nullopt);
    }

    void on_update_zone(const std::shared_ptr<ClientConn>& conn,
                        const proto::WireMessage& msg) {
        proto::ZoneUpdate up;
        try {
            up = proto::zone_update_from_json(msg.body);
        } catch (const std::exception& e) {
            return reply_error(conn, "bad_update", e.what());
        }
        Cell zone;
        try {
            zone = parse_cell_name(up.zone, opts.cell_size_m);
        } catch (const std::exception& e) {
            return reply_error(conn, "bad_zone", e.what());
        }
        {
            std::lock_guard<std::mutex> lk(reg_mu);
            if (auto it = users.find(up.device_id); it != users.end()) {
                it->second->zone = zone;
                it->second->reg.zone = up.zone;
            } else if (auto jt = sensors.find(up.device_id); jt != sensors.end()) {
                jt->second.zone = zone;
                jt->second.reg.zone = up.zone;
            } else {
                return reply_error(conn, "unknown_device", up.device_id);
            }
        }
        // the ack is sent after the registry write: every event processed
        // afterwards filters against the new zone only
        reply(conn, proto::MsgType::Ack,
              proto::to_json(
                  proto::AckBody{"update_zone:" + up.device_id, now_ms_epoch()}));
        log_msg("update_zone", up.device_id, up.zone, std::nullopt);
    }

    void on_ack(const proto::WireMessage& msg) {
        proto::AckBody ack;
        try {
            ack = proto::ack_from_json(msg.body);
        } catch (const std::exception&) {
            return;
        }
        std::optional<double> hop;
        {
            std::lock_guard<std::mutex> lk(stats_mu);
            if (const auto it = event_send_ts.find(ack.ref);
                it != event_send_ts.end()) {
                hop = ack.t_receive_ms - it->second;
                exe_ms.push_back(*hop);
            }
        }
        log_msg("ack", ack.ref, "", hop);
    }

    void on_frame(const std::shared_ptr<ClientConn>& conn,
                  const proto::WireMessage& msg) {
        DetectionFrame frame;
        try {
            frame = proto::frame_from_json(msg.body);
        } catch (const std::exception& e) {
            return reply_error(conn, "bad_frame", e.what());
        }
        const double t_in = now_ms_epoch();
        {
            std::lock_guard<std::mutex> lk(stats_mu);
            ++frames;
            eval_ms.push_back(t_in - msg.ts_ms);
        }

        SensorEntry sensor;
        {
            std::lock_guard<std::mutex> lk(reg_mu);
            const auto it = sensors.find(frame.sensor_id);
            if (it == sensors.end()) {
                // release the lock before replying
            } else {
                sensor = it->second;
            }
        }
        if (sensor.reg.device_id.empty()) {
            return reply_error(conn, "unregistered_sensor", frame.sensor_id);
        }

        // direction vote per box; the frame triggers an event when an
        // emergency-class detection heads toward the camera
        std::string event_class;
        for (const auto& box : frame.boxes) {
            if (box.class_label != opts.emergency_class) continue;
            Heading heading;
            try {
                heading = classify_box(box, sensor.reg.lane_zones, frame.height,
                                       opts.edge_band);
            } catch (const std::invalid_argument& e) {
                return reply_error(conn, "no_lane_zones", e.what());
            }
            if (heading == Heading::Toward) {
                event_class = box.class_label;
                break;
            }
        }

        reply(conn, proto::MsgType::Ack,
              proto::to_json(proto::AckBody{
                  "frame:" + std::to_string(frame.frame_id), t_in}));
        log_msg("frame", frame.sensor_id, sensor.reg.zone, t_in - msg.ts_ms);
        if (event_class.empty()) return;

        proto::EventNotification ev;
        ev.event_id = next_event_id(t_in);
        ev.sensor_id = sensor.reg.device_id;
        if (sensor.reg.position) {
            ev.sensor_position = *sensor.reg.position;
        } else {
            const CartPoint center{sensor.zone.x_min() + sensor.zone.size / 2.0,
                                   sensor.zone.y_min() + sensor.zone.size / 2.0};
            ev.sensor_position = from_cartesian(center, opts.grid_origin);
        }
        ev.object_bearing =
            object_bearing(sensor.reg.trajectory_deg, Heading::Toward);
        ev.object_class = event_class;
        ev.heading = Heading::Toward;
        ev.zone = sensor.reg.zone;
        ev.t_detect_ms = msg.ts_ms;

        // snapshot the recipients while holding the registry lock
        struct Recipient {
            std::shared_ptr<UserEntry> user;
            std::string severity;
        };
        std::vector<Recipient> recipients;
        {
            std::lock_guard<std::mutex> lk(reg_mu);
            const Neighborhood hood = neighborhood(sensor.zone);
            for (auto& [id, user] : users) {
                if (user->zone == sensor.zone) {
                    recipients.push_back({user, "proximity"});
                } else if (hood.contains(user->zone)) {
                    recipients.push_back({user, "intersection"});
                }
            }
        }

        for (auto& rcpt : recipients) {
            ev.severity_hint = rcpt.severity;
            const auto out =
                proto::make_message(proto::MsgType::Event, now_ms_epoch(),
                                    proto::to_json(ev));
            {
                std::lock_guard<std::mutex> lk(stats_mu);
                event_send_ts[ev.event_id] = out.ts_ms;
            }
            deliver(*rcpt.user, proto::encode(out));
        }
    }

    void deliver(UserEntry& user, const std::string& line) {
        // locking order is always reg_mu-free here; pending is guarded by
        // reg_mu since UserEntry lives in the registry
        std::lock_guard<std::mutex> lk(reg_mu);
        auto try_send = [&user](const std::string& l) {
            return user.conn && user.conn->send(l);
        };
        while (!user.pending.empty()) {
            if (try_send(user.pending.front())) {
                user.pending.pop_front();
                std::lock_guard<std::mutex> sk(stats_mu);
                ++events;
            } else {
                break;
            }
        }
        if (try_send(line)) {
            std::lock_guard<std::mutex> sk(stats_mu);
            ++events;
            log_msg("event", user.reg.device_id, user.reg.zone, std::nullopt);
            return;
        }
        // unreachable user: queue the line once; an already queued event is
        // dropped in its favor
        if (!user.pending.empty()) {
            user.pending.pop_front();
            {
                std::lock_guard<std::mutex> sk(stats_mu);
                ++dropped;
            }
            log_msg("event_dropped", user.reg.device_id, user.reg.zone,
                    std::nullopt);
        }
        user.pending.push_back(line);
        log_msg("event_queued", user.reg.device_id, user.reg.zone, std::nullopt);
    }
};

ProcessingNode::ProcessingNode(ProcessingOptions opts)
    : impl_(std::make_unique<Impl>(std::move(opts))) {
    impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

ProcessingNode::~ProcessingNode() { stop(); }

std::uint16_t ProcessingNode::port() const { return impl_->listener.port(); }

void ProcessingNode::stop() {
    bool expected = false;
    if (!impl_->stopping.compare_exchange_strong(expected, true)) return;
    impl_->listener.close();
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
    // accept_thread owned conns/session_threads growth; both are stable now
    for (auto& conn : impl_->conns) conn->wake();
    for (auto& t : impl_->session_threads) {
        if (t.joinable()) t.join();
    }
    for (auto& conn : impl_->conns) conn->sock.close();
}

std::size_t ProcessingNode::frames_seen() const {
    std::lock_guard<std::mutex> lk(impl_->stats_mu);
    return impl_->frames;
}
std::size_t ProcessingNode::events_sent() const {
    std::lock_guard<std::mutex> lk(impl_->stats_mu);
    return impl_->events;
}
std::size_t ProcessingNode::events_dropped() const {
    std::lock_guard<std::mutex> lk(impl_->stats_mu);
    return impl_->dropped;
}
std::vector<double> ProcessingNode::eval_latencies_ms() const {
    std::lock_guard<std::mutex> lk(impl_->stats_mu);
    return impl_->eval_ms;
}
std::vector<double> ProcessingNode::exe_latencies_ms() const {
    std::lock_guard<std::mutex> lk(impl_->stats_mu);
    return impl_->exe_ms;
}

// ---------------------------------------------------------------------------
// sensor session

namespace {

/// Waits for the registration ack; throws on an error reply or timeout.
void await_registration_ack(LineSocket& sock, double timeout_ms,
                            const std::string& who) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double, std::milli>(timeout_ms);
    while (true) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            throw SocketError(who + ": registration ack timed out");
        }
        auto line = sock.recv_line(static_cast<int>(remaining.count()));
        if (!line) {
            if (sock.closed_by_peer()) {
                throw SocketError(who + ": connection closed during registration");
            }
            continue;
        }
        proto::WireMessage msg;
        try {
            msg = proto::decode(*line);
        } catch (const proto::ProtocolError&) {
            continue;
        }
        if (msg.type == proto::MsgType::Ack) return;
        if (msg.type == proto::MsgType::Error) {
            const auto err = proto::error_from_json(msg.body);
            throw SocketError(who + ": registration rejected: " + err.code + ": " +
                              err.message);
        }
    }
}

}  // namespace

SensorSession::SensorSession(SensorOptions opts) : opts_(std::move(opts)) {
    sock_ = LineSocket::connect_to(opts_.connect);
    const auto msg =
        proto::make_message(proto::MsgType::RegisterSensor, now_ms_epoch(),
                            proto::to_json(opts_.registration));
    if (!sock_.send_line(proto::encode(msg))) {
        throw SocketError("sensor: registration send failed");
    }
    await_registration_ack(sock_, opts_.handshake_timeout_ms, "sensor");
    if (opts_.log) {
        opts_.log(log_line(now_ms_epoch(), "sensor", "register_sensor",
                           opts_.registration.device_id, opts_.registration.zone,
                           std::nullopt));
    }
}

SensorSession::~SensorSession() { close(); }

void SensorSession::send_frame(const DetectionFrame& f) {
    const auto msg = proto::make_message(proto::MsgType::Frame, now_ms_epoch(),
                                         proto::to_json(f));
    if (!sock_.send_line(proto::encode(msg))) {
        throw SocketError("sensor: frame send failed (connection gone)");
    }
    if (opts_.log) {
        opts_.log(log_line(msg.ts_ms, "sensor", "frame",
                           opts_.registration.device_id, opts_.registration.zone,
                           std::nullopt));
    }
}

std::vector<proto::WireMessage> SensorSession::drain_replies() {
    std::vector<proto::WireMessage> replies;
    while (true) {
        auto line = sock_.recv_line(0);
        if (!line) break;
        try {
            replies.push_back(proto::decode(*line));
        } catch (const proto::ProtocolError&) {
            continue;
        }
    }
    return replies;
}

void SensorSession::close() { sock_.close(); }

// ---------------------------------------------------------------------------
// consumer session

ConsumerSession::ConsumerSession(ConsumerOptions opts) : opts_(std::move(opts)) {
    self_.id = opts_.registration.device_id;
    self_.trajectory = opts_.local_trajectory;
    self_.cell = cell_of(opts_.local_trajectory.origin, opts_.cell_size_m);

    sock_ = LineSocket::connect_to(opts_.connect);
    send_checked(proto::make_message(proto::MsgType::RegisterUser, now_ms_epoch(),
                                     proto::to_json(opts_.registration)));
    await_registration_ack(sock_, opts_.handshake_timeout_ms, "consumer");
    if (opts_.log) {
        opts_.log(log_line(now_ms_epoch(), "consumer", "register_user", self_.id,
                           opts_.registration.zone, std::nullopt));
    }
}

ConsumerSession::~ConsumerSession() { close(); }

void ConsumerSession::send_checked(const proto::WireMessage& m) {
    // the privacy rule: nothing that leaves the user device may describe its
    // position or movement
    if (proto::contains_privacy_fields(m.body)) {
        throw std::logic_error("consumer: outbound message leaks position data");
    }
    if (!sock_.send_line(proto::encode(m))) {
        throw SocketError("consumer: send failed (connection gone)");
    }
}

void ConsumerSession::update_zone(const std::string& zone) {
    parse_cell_name(zone, opts_.cell_size_m);  // reject malformed names locally
    send_checked(proto::make_message(
        proto::MsgType::UpdateZone, now_ms_epoch(),
        proto::to_json(proto::ZoneUpdate{self_.id, zone})));
    opts_.registration.zone = zone;
}

std::optional<ConsumerVerdict> ConsumerSession::wait_event(int timeout_ms) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(timeout_ms);
    while (true) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (timeout_ms >= 0 && remaining.count() <= 0) return std::nullopt;
        auto line = sock_.recv_line(
            timeout_ms < 0 ? -1 : static_cast<int>(remaining.count()));
        if (!line) {
            if (sock_.closed_by_peer()) return std::nullopt;
            continue;
        }

        proto::WireMessage msg;
        try {
            msg = proto::decode(*line);
        } catch (const proto::ProtocolError& e) {
            if (opts_.log) {
                opts_.log(log_line(now_ms_epoch(), "consumer", "protocol_error",
                                   self_.id, "", std::nullopt));
            }
            (void)e;
            continue;
        }
        if (msg.type != proto::MsgType::Event) {
            if (opts_.log) {
                opts_.log(log_line(now_ms_epoch(), "consumer",
                                   proto::to_string(msg.type), self_.id, "",
                                   std::nullopt));
            }
            continue;
        }

        const double t_receive = now_ms_epoch();
        proto::EventNotification ev;
        try {
            ev = proto::event_from_json(msg.body);
        } catch (const std::exception&) {
            if (opts_.log) {
                opts_.log(log_line(t_receive, "consumer", "bad_event", self_.id,
                                   "", std::nullopt));
            }
            continue;
        }

        send_checked(proto::make_message(
            proto::MsgType::Ack, now_ms_epoch(),
            proto::to_json(proto::AckBody{ev.event_id, t_receive})));

        ConsumerVerdict verdict;
        verdict.event = ev;
        verdict.t_receive_ms = t_receive;
        verdict.hop_latency_ms = t_receive - msg.ts_ms;

        Cell sensor_zone;
        try {
            sensor_zone = parse_cell_name(ev.zone, opts_.cell_size_m);
        } catch (const std::exception&) {
            if (opts_.log) {
                opts_.log(log_line(t_receive, "consumer", "bad_zone", self_.id,
                                   ev.zone, std::nullopt));
            }
            continue;  // no verdict for an event on an unknown grid
        }

        if (ev.heading != Heading::Toward) {
            // no active emergency: nothing to warn about
            verdict.level = ThreatLevel::None;
        } else {
            try {
                SensorState ss;
                ss.id = ev.sensor_id;
                ss.trajectory = Trajectory::from_bearing(
                    to_cartesian(ev.sensor_position, opts_.grid_origin),
                    ev.object_bearing, opts_.assumed_object_speed_mps);
                ss.cell = sensor_zone;
                ss.event_active = true;
                verdict.level = classify(self_, ss).level;
            } catch (const std::exception&) {
                if (opts_.log) {
                    opts_.log(log_line(t_receive, "consumer", "bad_event",
                                       self_.id, ev.zone, std::nullopt));
                }
                continue;
            }
        }

        if (opts_.log) {
            opts_.log(log_line(t_receive, "consumer",
                               std::string("verdict:") + to_string(verdict.level),
                               self_.id, ev.zone, verdict.hop_latency_ms));
        }
        history_.push_back(verdict);
        return verdict;
    }
}

std::vector<double> ConsumerSession::hop_latencies_ms() const {
    std::vector<double> v;
    v.reserve(history_.size());
    for (const auto& h : history_) v.push_back(h.hop_latency_ms);
    return v;
}

void ConsumerSession::close() { sock_.close(); }

}  // namespace evwarn::net
