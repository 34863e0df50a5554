// evwarn: command-line front end for the collision-warning toolkit.
//
// One subcommand per capability: geometry (intersect), threat grading
// (classify), latency budgeting (budget), impact velocity (impact), the
// discrete-event pipeline simulator (simulate / scenario / report), and the
// three networked roles (serve / sensor / consumer).
//
// Exit codes: 0 success or no threat, 1 internal error, 2 infeasible
// budget, 3 connection failure, 4 validation error, 5 alarm raised while
// --fail-on-alarm is set.

#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "evwarn/direction.hpp"
#include "evwarn/geo.hpp"
#include "evwarn/grid.hpp"
#include "evwarn/latency.hpp"
#include "evwarn/net.hpp"
#include "evwarn/protocol.hpp"
#include "evwarn/scenario.hpp"
#include "evwarn/sim.hpp"
#include "evwarn/threat.hpp"

using nlohmann::json;
using namespace evwarn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitConnection = 3;
constexpr int kExitValidation = 4;
constexpr int kExitAlarmRaised = 5;

std::mutex g_log_mu;

net::LogFn stdout_logger(bool quiet) {
    if (quiet) return nullptr;
    return [](const std::string& line) {
        std::lock_guard<std::mutex> lk(g_log_mu);
        std::cout << line << "\n" << std::flush;
    };
}

std::atomic<bool> g_stop{false};

void handle_stop_signal(int) { g_stop.store(true); }

void install_stop_handlers() {
    std::signal(SIGINT, handle_stop_signal);
    std::signal(SIGTERM, handle_stop_signal);
}

// --- shared argument bundles -----------------------------------------------

struct TrajectoryArgs {
    double x = 0.0, y = 0.0;
    double lat = std::numeric_limits<double>::quiet_NaN();
    double lon = std::numeric_limits<double>::quiet_NaN();
    double bearing = 0.0;
    double speed = 0.0;

    Trajectory resolve(const GeoPoint& origin) const {
        const bool has_lat = !std::isnan(lat);
        const bool has_lon = !std::isnan(lon);
        if (has_lat != has_lon) {
            throw std::invalid_argument("latitude and longitude must be given together");
        }
        CartPoint p{x, y};
        if (has_lat) p = to_cartesian(GeoPoint{lat, lon}, origin);
        return Trajectory::from_bearing(p, bearing, speed);
    }
};

void add_trajectory_flags(CLI::App* cmd, const std::string& prefix,
                          TrajectoryArgs& args, const std::string& who) {
    cmd->add_option("--" + prefix + "-x", args.x, who + " east offset, m")
        ->capture_default_str();
    cmd->add_option("--" + prefix + "-y", args.y, who + " north offset, m")
        ->capture_default_str();
    cmd->add_option("--" + prefix + "-lat", args.lat, who + " latitude, deg");
    cmd->add_option("--" + prefix + "-lon", args.lon, who + " longitude, deg");
    cmd->add_option("--" + prefix + "-bearing", args.bearing,
                    who + " compass bearing, deg")
        ->capture_default_str();
    cmd->add_option("--" + prefix + "-speed", args.speed, who + " speed, m/s")
        ->capture_default_str();
}

struct ScenarioArgs {
    std::string file;
    std::string profile = "default";
    std::string ai_samples = "data/ai_latency_ms.csv";
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& args) {
    cmd->add_option("--scenario", args.file, "scenario JSON file (overrides --profile)");
    cmd->add_option("--profile", args.profile, "built-in scenario: default or table2")
        ->check(CLI::IsMember({"default", "table2"}))
        ->capture_default_str();
    cmd->add_option("--ai-samples", args.ai_samples,
                    "detector latency sample file for the table2 profile")
        ->capture_default_str();
}

sim::Scenario resolve_scenario(const ScenarioArgs& args) {
    if (!args.file.empty()) return sim::load_scenario(args.file);
    if (args.profile == "table2") return sim::table2_scenario(args.ai_samples);
    return sim::default_scenario();
}

json point_json(CartPoint p) { return json{{"x", p.x}, {"y", p.y}}; }

json intersect_json(const IntersectResult& res) {
    json j{{"kind", to_string(res.kind)}};
    if (res.solution) {
        j["point"] = point_json(res.solution->point);
        j["t_u"] = res.solution->t_u;
        j["t_s"] = res.solution->t_s;
        if (res.solution->eta_u) j["eta_u_s"] = *res.solution->eta_u;
        if (res.solution->eta_s) j["eta_s_s"] = *res.solution->eta_s;
    }
    return j;
}

std::string fmt(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

// --- intersect ---------------------------------------------------------------

struct IntersectCmd {
    TrajectoryArgs user, sensor;
    double origin_lat = 46.62, origin_lon = 14.30;
    bool as_json = false;

    int run() const {
        const GeoPoint origin{origin_lat, origin_lon};
        const Trajectory u = user.resolve(origin);
        const Trajectory s = sensor.resolve(origin);
        const IntersectResult res = intersect(u, s);
        if (as_json) {
            std::cout << intersect_json(res).dump(2) << "\n";
            return kExitOk;
        }
        std::cout << "kind: " << to_string(res.kind) << "\n";
        if (res.solution) {
            std::cout << "point: (" << fmt(res.solution->point.x) << ", "
                      << fmt(res.solution->point.y) << ")\n"
                      << "distance along user ray: " << fmt(res.solution->t_u)
                      << " m\ndistance along object ray: " << fmt(res.solution->t_s)
                      << " m\n";
            if (res.solution->eta_u) {
                std::cout << "user eta: " << fmt(*res.solution->eta_u) << " s\n";
            }
            if (res.solution->eta_s) {
                std::cout << "object eta: " << fmt(*res.solution->eta_s) << " s\n";
            }
        }
        return kExitOk;
    }
};

// --- classify ----------------------------------------------------------------

struct ClassifyCmd {
    TrajectoryArgs user, sensor;
    double origin_lat = 46.62, origin_lon = 14.30;
    double cell_size = kDefaultCellSizeM;
    bool event_active = false;
    bool as_json = false;

    int run() const {
        const GeoPoint origin{origin_lat, origin_lon};
        UserState us;
        us.id = "user";
        us.trajectory = user.resolve(origin);
        us.cell = cell_of(us.trajectory.origin, cell_size);
        SensorState ss;
        ss.id = "sensor";
        ss.trajectory = sensor.resolve(origin);
        ss.cell = cell_of(ss.trajectory.origin, cell_size);
        ss.event_active = event_active;

        const ThreatVerdict verdict = classify(us, ss);
        const Applicability app = applicability(us, ss);

        if (as_json) {
            json j{{"level", to_string(verdict.level)},
                   {"rationale", verdict.rationale},
                   {"applicability", to_string(app)},
                   {"user_cell", cell_name(us.cell)},
                   {"sensor_cell", cell_name(ss.cell)},
                   {"event_active", event_active}};
            if (verdict.intersection) {
                j["intersection"] = point_json(verdict.intersection->point);
            }
            std::cout << j.dump(2) << "\n";
            return kExitOk;
        }
        std::cout << "level: " << to_string(verdict.level) << "\n"
                  << "rationale: " << verdict.rationale << "\n"
                  << "applicability: " << to_string(app) << "\n"
                  << "user cell: " << cell_name(us.cell)
                  << "  sensor cell: " << cell_name(ss.cell) << "\n";
        if (verdict.intersection) {
            std::cout << "crossing point: (" << fmt(verdict.intersection->point.x)
                      << ", " << fmt(verdict.intersection->point.y) << ")\n";
        }
        return kExitOk;
    }
};

// --- budget ------------------------------------------------------------------

struct BudgetCmd {
    double t_tot = LatencyConstants{}.t_max;
    double t_s = LatencyConstants{}.t_s();
    double t_p = LatencyConstants{}.t_p();
    double t_c = LatencyConstants{}.t_c;
    double eval_share = 0.5;
    bool as_json = false;

    int run() const {
        try {
            const BudgetResult r = solve_network_budget(t_tot, t_s, t_p, t_c, eval_share);
            if (as_json) {
                json j{{"feasible", true},
                       {"t_tot_ms", r.t_tot_target},
                       {"compute_ms", r.compute_sum},
                       {"network_allowance_ms", r.network_allowance_total},
                       {"t_eval_ms", r.t_eval_alloc},
                       {"t_exe_ms", r.t_exe_alloc}};
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << "deadline budget      " << fmt(r.t_tot_target) << " ms\n"
                          << "compute stages       " << fmt(r.compute_sum) << " ms\n"
                          << "network allowance    " << fmt(r.network_allowance_total)
                          << " ms\n"
                          << "t_eval allocation    " << fmt(r.t_eval_alloc) << " ms\n"
                          << "t_exe allocation     " << fmt(r.t_exe_alloc) << " ms\n";
            }
            return kExitOk;
        } catch (const BudgetInfeasible& e) {
            if (as_json) {
                json j{{"feasible", false}, {"deficit_ms", e.deficit_ms}};
                std::cout << j.dump(2) << "\n";
            } else {
                std::cerr << "infeasible: compute stages exceed the budget by "
                          << fmt(e.deficit_ms) << " ms\n";
            }
            return kExitInfeasible;
        }
    }
};

// --- impact ------------------------------------------------------------------

struct ImpactCmd {
    std::string latencies = "150,200,250,300,350,400";
    double k = LatencyConstants{}.k_impact;
    bool as_json = false;

    int run() const {
        std::vector<double> values;
        std::stringstream ss(latencies);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(item, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("bad latency value: " + item);
            }
            if (pos != item.size()) {
                throw std::invalid_argument("bad latency value: " + item);
            }
            values.push_back(v);
        }
        if (values.empty()) {
            throw std::invalid_argument("--latencies needs at least one value");
        }

        json rows = json::array();
        for (double ms : values) {
            const ImpactVelocity iv = impact_velocity(ms, k);
            rows.push_back(json{{"latency_ms", ms},
                                {"impact_mps", iv.mps},
                                {"impact_kmh", iv.kmh}});
        }
        if (as_json) {
            std::cout << json{{"k_impact", k}, {"rows", rows}}.dump(2) << "\n";
            return kExitOk;
        }
        std::cout << "latency_ms  impact_mps  impact_kmh\n";
        for (const auto& row : rows) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%10.1f  %10.4f  %10.4f\n",
                          row["latency_ms"].get<double>(),
                          row["impact_mps"].get<double>(),
                          row["impact_kmh"].get<double>());
            std::cout << buf;
        }
        return kExitOk;
    }
};

// --- simulate ----------------------------------------------------------------

struct SimulateCmd {
    ScenarioArgs scenario;
    std::string out_csv;
    int runs = -1;
    std::int64_t seed = -1;
    double duration = -1.0;
    double frame_interval = -1.0;
    double t_max = -1.0;
    bool as_json = false;

    int run() const {
        sim::Scenario sc = resolve_scenario(scenario);
        if (runs >= 1) sc.runs = runs;
        if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
        if (duration > 0.0) sc.duration_s = duration;
        if (frame_interval > 0.0) sc.frame_interval_ms = frame_interval;
        if (t_max > 0.0) sc.t_max_ms = t_max;

        const sim::SimOutput out = sim::run(sc);
        if (!out_csv.empty()) {
            sim::export_csv_file(out.records, out_csv);
        }
        if (as_json) {
            json j = json::parse(sim::summary_to_json(out.summary, 2));
            if (!out_csv.empty()) j["csv"] = out_csv;
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << sim::summary_text(out.summary);
            if (!out_csv.empty()) {
                std::cout << "\ncsv written to " << out_csv << "\n";
            }
        }
        return kExitOk;
    }
};

// --- scenario ----------------------------------------------------------------

struct ScenarioInitCmd {
    std::string profile = "default";
    std::string ai_samples = "data/ai_latency_ms.csv";
    std::string out;

    int run() const {
        sim::Scenario sc = profile == "table2" ? sim::table2_scenario(ai_samples)
                                               : sim::default_scenario();
        if (out.empty()) {
            std::cout << sim::scenario_to_json(sc);
        } else {
            sim::save_scenario(sc, out);
            std::cout << "scenario written to " << out << "\n";
        }
        return kExitOk;
    }
};

// --- report ------------------------------------------------------------------

struct ReportCmd {
    std::string csv;
    bool as_json = false;

    int run() const {
        const auto records = sim::import_csv_file(csv);
        const sim::SimSummary summary = sim::summarize(records);
        if (as_json) {
            std::cout << sim::summary_to_json(summary, 2);
        } else {
            std::cout << sim::summary_text(summary);
        }
        return kExitOk;
    }
};

// --- serve -------------------------------------------------------------------

struct ServeCmd {
    std::string listen = "127.0.0.1:0";
    double grid_lat = 46.62, grid_lon = 14.30;
    double cell_size = kDefaultCellSizeM;
    std::string emergency_class = "emergency";
    double edge_band = 0.2;
    double run_seconds = 0.0;  // 0 = until SIGINT/SIGTERM
    bool quiet = false;
    bool as_json = false;

    int run() const {
        install_stop_handlers();
        net::ProcessingOptions opts;
        opts.listen = net::parse_endpoint(listen);
        opts.grid_origin = GeoPoint{grid_lat, grid_lon};
        opts.cell_size_m = cell_size;
        opts.emergency_class = emergency_class;
        opts.edge_band = edge_band;
        opts.log = stdout_logger(quiet);

        net::ProcessingNode node(opts);
        {
            std::lock_guard<std::mutex> lk(g_log_mu);
            std::cout << "listening on " << opts.listen.host << ":" << node.port()
                      << "\n"
                      << std::flush;
        }

        const auto started = std::chrono::steady_clock::now();
        while (!g_stop.load()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
            if (run_seconds > 0.0) {
                const std::chrono::duration<double> elapsed =
                    std::chrono::steady_clock::now() - started;
                if (elapsed.count() >= run_seconds) break;
            }
        }
        node.stop();

        const auto eval = node.eval_latencies_ms();
        const auto exe = node.exe_latencies_ms();
        const net::HopStats eval_stats = net::measure_hop_latency(eval);
        const net::HopStats exe_stats = net::measure_hop_latency(exe);
        auto hop_json = [](const net::HopStats& h) {
            return json{{"n", h.stats.n},
                        {"mean_ms", h.stats.mean},
                        {"median_ms", h.stats.median},
                        {"stddev_ms", h.stats.stddev},
                        {"min_ms", h.stats.min},
                        {"max_ms", h.stats.max},
                        {"negatives", h.negatives},
                        {"clock_warning", h.clock_warning}};
        };
        if (as_json) {
            json j{{"frames", node.frames_seen()},
                   {"events_sent", node.events_sent()},
                   {"events_dropped", node.events_dropped()},
                   {"t_eval", hop_json(eval_stats)},
                   {"t_exe", hop_json(exe_stats)}};
            std::lock_guard<std::mutex> lk(g_log_mu);
            std::cout << j.dump(2) << "\n";
        } else {
            std::lock_guard<std::mutex> lk(g_log_mu);
            std::cout << "frames " << node.frames_seen() << ", events "
                      << node.events_sent() << ", dropped "
                      << node.events_dropped() << "\n";
            if (eval_stats.stats.n > 0) {
                std::cout << "t_eval mean " << fmt(eval_stats.stats.mean)
                          << " ms, median " << fmt(eval_stats.stats.median)
                          << " ms over " << eval_stats.stats.n << " frames\n";
            }
            if (exe_stats.stats.n > 0) {
                std::cout << "t_exe mean " << fmt(exe_stats.stats.mean)
                          << " ms, median " << fmt(exe_stats.stats.median)
                          << " ms over " << exe_stats.stats.n << " acks\n";
            }
            if (eval_stats.clock_warning || exe_stats.clock_warning) {
                std::cout << "warning: negative hop latencies exceed 1%; "
                             "clocks are not synchronized\n";
            }
        }
        return kExitOk;
    }
};

// --- sensor ------------------------------------------------------------------

struct SensorCmd {
    std::string connect;
    ScenarioArgs scenario;
    std::string sensor_id;
    int frames = 0;  // 0 = derive from scenario duration
    double interval_ms = -1.0;
    bool fast = false;
    bool quiet = false;
    bool as_json = false;

    int run() const {
        const sim::Scenario sc = resolve_scenario(scenario);
        const sim::SensorSpec* spec = nullptr;
        for (const auto& s : sc.sensors) {
            if (sensor_id.empty() || s.id == sensor_id) {
                spec = &s;
                break;
            }
        }
        if (spec == nullptr) {
            throw std::invalid_argument("sensor id not in scenario: " + sensor_id);
        }

        const double interval =
            interval_ms > 0.0 ? interval_ms : sc.frame_interval_ms;
        const int n_frames =
            frames > 0
                ? frames
                : static_cast<int>(std::ceil(sc.duration_s * 1000.0 / interval - 1e-9));

        proto::SensorRegistration reg;
        reg.device_id = spec->id;
        reg.socket_in = "127.0.0.1:0";  // replies ride the registration stream
        reg.trajectory_deg = spec->camera_bearing_deg;
        reg.zone = cell_name(cell_of(spec->position, sc.cell_size_m));
        reg.lane_zones = spec->lane_zones;
        reg.position = from_cartesian(spec->position, sc.grid_origin);

        net::SensorOptions opts;
        opts.connect = net::parse_endpoint(connect);
        opts.registration = reg;
        opts.log = stdout_logger(quiet);

        net::SensorSession session(opts);
        std::size_t replies = 0;
        for (int fi = 0; fi < n_frames; ++fi) {
            const double t_s = fi * interval / 1000.0;
            DetectionFrame frame = sim::synthesize_frame(
                sc, *spec, t_s, static_cast<std::uint64_t>(fi), net::now_ms_epoch());
            session.send_frame(frame);
            replies += session.drain_replies().size();
            if (!fast && fi + 1 < n_frames) {
                std::this_thread::sleep_for(
                    std::chrono::duration<double, std::milli>(interval));
            }
        }
        // give the hub a moment to flush the last acks
        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(300);
        while (std::chrono::steady_clock::now() < deadline) {
            const auto got = session.drain_replies();
            replies += got.size();
            if (got.empty()) {
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
            }
        }
        session.close();

        if (as_json) {
            json j{{"frames_sent", n_frames}, {"replies", replies}};
            std::cout << j.dump(2) << "\n";
        } else if (!quiet) {
            std::cout << "sent " << n_frames << " frames, " << replies
                      << " replies\n";
        }
        return kExitOk;
    }
};

// --- consumer ----------------------------------------------------------------

struct ConsumerCmd {
    std::string connect;
    ScenarioArgs scenario;
    std::string user_id;
    std::string device_id;
    int expect_events = 0;    // 0 = unlimited
    double run_seconds = 0.0; // 0 = until closed / expectation met
    bool fail_on_alarm = false;
    bool quiet = false;
    bool as_json = false;

    int run() const {
        install_stop_handlers();
        const sim::Scenario sc = resolve_scenario(scenario);
        const sim::UserSpec* spec = nullptr;
        for (const auto& u : sc.users) {
            if (user_id.empty() || u.id == user_id) {
                spec = &u;
                break;
            }
        }
        if (spec == nullptr) {
            throw std::invalid_argument("user id not in scenario: " + user_id);
        }

        net::ConsumerOptions opts;
        opts.connect = net::parse_endpoint(connect);
        opts.registration.device_id =
            device_id.empty() ? "u-" + spec->id : device_id;
        opts.registration.socket_in = "127.0.0.1:0";
        opts.registration.zone = cell_name(cell_of(spec->position, sc.cell_size_m));
        opts.local_trajectory = spec->trajectory();
        opts.grid_origin = sc.grid_origin;
        opts.cell_size_m = sc.cell_size_m;
        opts.assumed_object_speed_mps = sc.assumed_object_speed_mps;
        opts.log = stdout_logger(quiet);

        net::ConsumerSession session(opts);
        std::map<std::string, std::size_t> verdicts;
        std::size_t alarms = 0;
        const auto started = std::chrono::steady_clock::now();
        while (!g_stop.load()) {
            if (expect_events > 0 &&
                session.history().size() >= static_cast<std::size_t>(expect_events)) {
                break;
            }
            if (run_seconds > 0.0) {
                const std::chrono::duration<double> elapsed =
                    std::chrono::steady_clock::now() - started;
                if (elapsed.count() >= run_seconds) break;
            }
            const auto verdict = session.wait_event(250);
            if (!verdict) {
                if (!session.connected()) break;
                continue;
            }
            ++verdicts[to_string(verdict->level)];
            if (verdict->level == ThreatLevel::Alarm) ++alarms;
        }
        session.close();

        const auto hops = session.hop_latencies_ms();
        const net::HopStats hop_stats = net::measure_hop_latency(hops);
        if (as_json) {
            json j{{"events", session.history().size()},
                   {"verdicts", verdicts},
                   {"alarms", alarms},
                   {"t_exe",
                    json{{"n", hop_stats.stats.n},
                         {"mean_ms", hop_stats.stats.mean},
                         {"median_ms", hop_stats.stats.median},
                         {"stddev_ms", hop_stats.stats.stddev},
                         {"min_ms", hop_stats.stats.min},
                         {"max_ms", hop_stats.stats.max},
                         {"negatives", hop_stats.negatives},
                         {"clock_warning", hop_stats.clock_warning}}}};
            std::lock_guard<std::mutex> lk(g_log_mu);
            std::cout << j.dump(2) << "\n";
        } else {
            std::lock_guard<std::mutex> lk(g_log_mu);
            std::cout << "events " << session.history().size() << "\n";
            for (const auto& [name, count] : verdicts) {
                std::cout << "  " << name << " " << count << "\n";
            }
            if (hop_stats.stats.n > 0) {
                std::cout << "t_exe mean " << fmt(hop_stats.stats.mean)
                          << " ms, median " << fmt(hop_stats.stats.median)
                          << " ms over " << hop_stats.stats.n << " events\n";
            }
            if (hop_stats.clock_warning) {
                std::cout << "warning: negative hop latencies exceed 1%; "
                             "clocks are not synchronized\n";
            }
        }
        if (fail_on_alarm && alarms > 0) return kExitAlarmRaised;
        return kExitOk;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"collision-warning toolkit: geometry, threat grading, latency "
                 "budgeting, pipeline simulation, and networked roles"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    IntersectCmd intersect_cmd;
    auto* c_intersect = app.add_subcommand(
        "intersect", "forward-ray crossing of a user and a detected object");
    add_trajectory_flags(c_intersect, "user", intersect_cmd.user, "user");
    add_trajectory_flags(c_intersect, "sensor", intersect_cmd.sensor, "object");
    c_intersect->add_option("--origin-lat", intersect_cmd.origin_lat,
                            "grid origin latitude for lat/lon inputs");
    c_intersect->add_option("--origin-lon", intersect_cmd.origin_lon,
                            "grid origin longitude for lat/lon inputs");
    c_intersect->add_flag("--json", intersect_cmd.as_json, "machine-readable output");

    ClassifyCmd classify_cmd;
    auto* c_classify = app.add_subcommand(
        "classify", "threat level for one user against one sensor detection");
    add_trajectory_flags(c_classify, "user", classify_cmd.user, "user");
    add_trajectory_flags(c_classify, "sensor", classify_cmd.sensor,
                         "detected object (anchored at the sensor)");
    c_classify->add_option("--origin-lat", classify_cmd.origin_lat,
                           "grid origin latitude for lat/lon inputs");
    c_classify->add_option("--origin-lon", classify_cmd.origin_lon,
                           "grid origin longitude for lat/lon inputs");
    c_classify->add_option("--cell-size", classify_cmd.cell_size,
                           "grid cell edge length, m");
    c_classify->add_flag("--event-active", classify_cmd.event_active,
                         "an approaching emergency vehicle is confirmed");
    c_classify->add_flag("--json", classify_cmd.as_json, "machine-readable output");

    BudgetCmd budget_cmd;
    auto* c_budget = app.add_subcommand(
        "budget", "split the deadline into per-hop network allowances");
    c_budget->add_option("--t-tot", budget_cmd.t_tot, "end-to-end deadline, ms");
    c_budget->add_option("--t-s", budget_cmd.t_s, "sensor stage (capture+encode), ms");
    c_budget->add_option("--t-p", budget_cmd.t_p,
                         "processing stage (decode+detector+classifier), ms");
    c_budget->add_option("--t-c", budget_cmd.t_c, "consumer stage, ms");
    c_budget->add_option("--eval-share", budget_cmd.eval_share,
                         "fraction of the allowance given to the sensor hop");
    c_budget->add_flag("--json", budget_cmd.as_json, "machine-readable output");

    ImpactCmd impact_cmd;
    auto* c_impact = app.add_subcommand(
        "impact", "impact velocity attributable to notification latency");
    c_impact->add_option("--latencies", impact_cmd.latencies,
                         "comma-separated latencies, ms");
    c_impact->add_option("--k", impact_cmd.k, "impact coefficient, m/s per s");
    c_impact->add_flag("--json", impact_cmd.as_json, "machine-readable output");

    SimulateCmd simulate_cmd;
    auto* c_simulate = app.add_subcommand(
        "simulate", "deterministic discrete-event pipeline simulation");
    add_scenario_flags(c_simulate, simulate_cmd.scenario);
    c_simulate->add_option("--runs", simulate_cmd.runs, "override scenario run count");
    c_simulate->add_option("--seed", simulate_cmd.seed, "override scenario seed");
    c_simulate->add_option("--duration", simulate_cmd.duration,
                           "override scenario duration, s");
    c_simulate->add_option("--frame-interval", simulate_cmd.frame_interval,
                           "override frame interval, ms");
    c_simulate->add_option("--t-max", simulate_cmd.t_max,
                           "override the delivery deadline, ms");
    c_simulate->add_option("--out", simulate_cmd.out_csv, "write per-event CSV here");
    c_simulate->add_flag("--json", simulate_cmd.as_json, "machine-readable output");

    auto* c_scenario =
        app.add_subcommand("scenario", "scenario file management");
    c_scenario->require_subcommand(1);
    ScenarioInitCmd scenario_init_cmd;
    auto* c_scenario_init = c_scenario->add_subcommand(
        "init", "emit a scenario file with all defaults");
    c_scenario_init->add_option("--profile", scenario_init_cmd.profile,
                                "built-in scenario: default or table2")
        ->check(CLI::IsMember({"default", "table2"}));
    c_scenario_init->add_option("--ai-samples", scenario_init_cmd.ai_samples,
                                "detector latency sample file for table2");
    c_scenario_init->add_option("--out", scenario_init_cmd.out,
                                "output path (stdout when omitted)");

    ReportCmd report_cmd;
    auto* c_report = app.add_subcommand(
        "report", "summarize a simulation CSV (stats + histograms)");
    c_report->add_option("--csv", report_cmd.csv, "CSV produced by simulate")
        ->required();
    c_report->add_flag("--json", report_cmd.as_json, "machine-readable output");

    ServeCmd serve_cmd;
    auto* c_serve = app.add_subcommand(
        "serve", "run the processing hub (registrations, frames, events)");
    c_serve->add_option("--listen", serve_cmd.listen, "bind endpoint; port 0 = any");
    c_serve->add_option("--grid-lat", serve_cmd.grid_lat, "grid origin latitude");
    c_serve->add_option("--grid-lon", serve_cmd.grid_lon, "grid origin longitude");
    c_serve->add_option("--cell-size", serve_cmd.cell_size, "grid cell edge, m");
    c_serve->add_option("--emergency-class", serve_cmd.emergency_class,
                        "detector class that triggers events");
    c_serve->add_option("--edge-band", serve_cmd.edge_band,
                        "bottom-of-frame exit band fraction");
    c_serve->add_option("--run-seconds", serve_cmd.run_seconds,
                        "stop after this many seconds (0 = until signal)");
    c_serve->add_flag("--quiet", serve_cmd.quiet, "suppress per-message logs");
    c_serve->add_flag("--json", serve_cmd.as_json, "final stats as JSON");

    SensorCmd sensor_cmd;
    auto* c_sensor = app.add_subcommand(
        "sensor", "stream scenario detection frames to a processing hub");
    c_sensor->add_option("--connect", sensor_cmd.connect, "hub endpoint host:port")
        ->required();
    add_scenario_flags(c_sensor, sensor_cmd.scenario);
    c_sensor->add_option("--sensor-id", sensor_cmd.sensor_id,
                         "scenario sensor to play (default: first)");
    c_sensor->add_option("--frames", sensor_cmd.frames,
                         "number of frames (0 = scenario duration)");
    c_sensor->add_option("--interval-ms", sensor_cmd.interval_ms,
                         "frame pacing override, ms");
    c_sensor->add_flag("--fast", sensor_cmd.fast, "send frames without pacing");
    c_sensor->add_flag("--quiet", sensor_cmd.quiet, "suppress per-message logs");
    c_sensor->add_flag("--json", sensor_cmd.as_json, "final stats as JSON");

    ConsumerCmd consumer_cmd;
    auto* c_consumer = app.add_subcommand(
        "consumer", "receive events and classify them against local state");
    c_consumer->add_option("--connect", consumer_cmd.connect,
                           "hub endpoint host:port")
        ->required();
    add_scenario_flags(c_consumer, consumer_cmd.scenario);
    c_consumer->add_option("--user-id", consumer_cmd.user_id,
                           "scenario user to play (default: first)");
    c_consumer->add_option("--device-id", consumer_cmd.device_id,
                           "wire device id (default: u-<user-id>)");
    c_consumer->add_option("--expect-events", consumer_cmd.expect_events,
                           "exit after this many events (0 = unlimited)");
    c_consumer->add_option("--run-seconds", consumer_cmd.run_seconds,
                           "stop after this many seconds (0 = until closed)");
    c_consumer->add_flag("--fail-on-alarm", consumer_cmd.fail_on_alarm,
                         "exit 5 if any Alarm verdict is raised");
    c_consumer->add_flag("--quiet", consumer_cmd.quiet, "suppress per-message logs");
    c_consumer->add_flag("--json", consumer_cmd.as_json, "final stats as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (c_intersect->parsed()) return intersect_cmd.run();
        if (c_classify->parsed()) return classify_cmd.run();
        if (c_budget->parsed()) return budget_cmd.run();
        if (c_impact->parsed()) return impact_cmd.run();
        if (c_simulate->parsed()) return simulate_cmd.run();
        if (c_scenario->parsed() && c_scenario_init->parsed()) {
            return scenario_init_cmd.run();
        }
        if (c_report->parsed()) return report_cmd.run();
        if (c_serve->parsed()) return serve_cmd.run();
        if (c_sensor->parsed()) return sensor_cmd.run();
        if (c_consumer->parsed()) return consumer_cmd.run();
        std::cerr << "no subcommand\n";
        return kExitValidation;
    } catch (const net::SocketError& e) {
        std::cerr << "connection error: " << e.what() << "\n";
        return kExitConnection;
    } catch (const proto::ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}
