#include "evwarn/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "evwarn/grid.hpp"

namespace evwarn::sim {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

double LatencySampler::uniform01() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double LatencySampler::standard_normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double LatencySampler::sample(const LatencySpec& spec, const std::string& stage) {
    switch (spec.kind) {
        case LatencyKind::Constant:
            return spec.value_ms;
        case LatencyKind::Uniform:
            return spec.lo_ms + uniform01() * (spec.hi_ms - spec.lo_ms);
        case LatencyKind::Normal: {
            auto& cs = clips_[stage];
            for (int i = 0; i < 1000; ++i) {
                ++cs.attempts;
                const double v = spec.mean_ms + spec.std_ms * standard_normal();
                if (v >= 0.0) return v;
                ++cs.rejected;
            }
            throw std::runtime_error(
                "sampler: 1000 consecutive negative draws for stage " + stage);
        }
        case LatencyKind::Empirical: {
            const std::size_t n = spec.samples.size();
            auto idx = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
            if (idx >= n) idx = n - 1;
            return spec.samples[idx];
        }
    }
    throw std::logic_error("unreachable latency kind");
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, int run) {
    return splitmix64(base_seed +
                      0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(run) + 1));
}

DetectionFrame synthesize_frame(const Scenario& sc, const SensorSpec& sensor,
                                double sim_time_s, std::uint64_t frame_index,
                                double timestamp_ms) {
    DetectionFrame f;
    f.frame_id = frame_index;
    f.sensor_id = sensor.id;
    f.timestamp_ms = static_cast<std::int64_t>(std::llround(timestamp_ms));
    f.width = sc.frame_width;
    f.height = sc.frame_height;

    const double W = sc.frame_width;
    const double H = sc.frame_height;
    const double wbox = W * 0.05;
    const double hbox = H * 0.08;
    int n_in = 0, n_out = 0;

    for (const auto& v : sc.vehicles) {
        const Trajectory t = v.trajectory();
        const CartPoint pos = t.position_at(sim_time_s);
        if (distance(pos, sensor.position) > sc.detection_range_m) continue;

        const double vx = std::cos(t.theta) * t.speed_mps;
        const double vy = std::sin(t.theta) * t.speed_mps;
        const double rx = pos.x - sensor.position.x;
        const double ry = pos.y - sensor.position.y;
        const bool approaching = (rx * vx + ry * vy) < 0.0;

        BoundingBox b;
        b.class_label = v.class_label;
        b.w = wbox;
        b.h = hbox;
        if (approaching) {
            // mid-height box in the inbound (left) half of the image
            double cx = W * 0.25 + n_in * wbox * 1.2;
            cx = std::min(cx, W / 2.0 - wbox / 2.0 - 1.0);
            b.x = cx - wbox / 2.0;
            b.y = H * 0.40 - hbox;
            b.view = ViewLabel::Front;
            ++n_in;
        } else {
            // low box in the outbound (right) half, inside the exit band
            double cx = W * 0.75 + n_out * wbox * 1.2;
            cx = std::min(cx, W - wbox / 2.0 - 1.0);
            b.x = cx - wbox / 2.0;
            b.y = H * 0.93 - hbox;
            b.view = ViewLabel::Rear;
            ++n_out;
        }
        f.boxes.push_back(std::move(b));
    }
    return f;
}

SimOutput run(const Scenario& sc) {
    sc.validate();

    std::vector<RunRecord> records;
    std::map<std::string, LatencySampler::ClipStats> clip_acc;

    const auto n_frames = static_cast<std::uint64_t>(
        std::ceil(sc.duration_s * 1000.0 / sc.frame_interval_ms - 1e-9));

    for (int run_idx = 0; run_idx < sc.runs; ++run_idx) {
        LatencySampler sampler(derive_run_seed(sc.seed, run_idx));

        for (std::uint64_t fi = 0; fi < n_frames; ++fi) {
            const double ft_ms = static_cast<double>(fi) * sc.frame_interval_ms;
            const double ft_s = ft_ms / 1000.0;

            for (const auto& sensor : sc.sensors) {
                const DetectionFrame frame =
                    synthesize_frame(sc, sensor, ft_s, fi, ft_ms);
                bool active = false;
                for (const auto& b : frame.boxes) {
                    if (b.class_label != sc.emergency_class) continue;
                    if (classify_box(b, sensor.lane_zones, frame.height,
                                     sc.edge_band) == Heading::Toward) {
                        active = true;
                        break;
                    }
                }
                if (!active) continue;

                // stage draws shared by every recipient of this frame's event
                const double t_s = sampler.sample(sc.latency.t_s, "t_s");
                const double t_eval = sampler.sample(sc.latency.t_eval, "t_eval");
                const double t_p_ai = sampler.sample(sc.latency.t_p_ai, "t_p_ai");

                SensorState ss;
                ss.id = sensor.id;
                ss.trajectory = Trajectory::from_bearing(
                    sensor.position,
                    object_bearing(sensor.camera_bearing_deg, Heading::Toward),
                    sc.assumed_object_speed_mps);
                ss.cell = cell_of(sensor.position, sc.cell_size_m);
                ss.event_active = true;
                const Neighborhood hood = neighborhood(ss.cell);

                for (const auto& uspec : sc.users) {
                    CartPoint upos;
                    Cell ucell;
                    try {
                        upos = uspec.trajectory().position_at(ft_s);
                        ucell = cell_of(upos, sc.cell_size_m);
                    } catch (const OutOfGridError&) {
                        continue;  // user left the covered grid
                    }
                    if (!(ucell == ss.cell) && !hood.contains(ucell)) continue;

                    const double t_p_tc = sampler.sample(sc.latency.t_p_tc, "t_p_tc");
                    const double t_exe = sampler.sample(sc.latency.t_exe, "t_exe");
                    const double t_c = sampler.sample(sc.latency.t_c, "t_c");
                    const double t_act = sampler.sample(sc.latency.t_act, "t_act");

                    UserState us;
                    us.id = uspec.id;
                    us.trajectory = Trajectory::from_bearing(upos, uspec.bearing_deg,
                                                             uspec.speed_mps);
                    us.cell = ucell;

                    const ThreatVerdict verdict = classify(us, ss);

                    RunRecord r;
                    r.run = run_idx;
                    r.frame_index = fi;
                    r.sim_time_ms = ft_ms;
                    r.sensor_id = sensor.id;
                    r.user_id = uspec.id;
                    r.event_id = "r" + std::to_string(run_idx) + "-f" +
                                 std::to_string(fi) + "-" + sensor.id + "-" +
                                 uspec.id;
                    r.t_s = t_s;
                    r.t_eval = t_eval;
                    r.t_p_ai = t_p_ai;
                    r.t_p_tc = t_p_tc;
                    r.t_exe = t_exe;
                    r.t_c = t_c;
                    r.t_act = t_act;
                    r.total = t_s + t_eval + t_p_ai + t_p_tc + t_exe + t_c + t_act;
                    r.verdict = verdict.level;
                    r.met_deadline = r.total <= sc.t_max_ms;
                    if (!r.met_deadline && verdict.level == ThreatLevel::Alarm) {
                        r.impact_mps = sc.k_impact * (r.total / 1000.0);
                    }
                    if (verdict.intersection) {
                        const double deliver_s = (ft_ms + r.total - r.t_act) / 1000.0;
                        const CartPoint at_delivery =
                            uspec.trajectory().position_at(deliver_s);
                        r.distance_m =
                            distance(at_delivery, verdict.intersection->point);
                        if (uspec.speed_mps > 0.0) {
                            r.eta_user_s = *r.distance_m / uspec.speed_mps;
                        }
                    }
                    records.push_back(std::move(r));
                }
            }
        }

        for (const auto& [stage, cs] : sampler.clip_stats()) {
            clip_acc[stage].attempts += cs.attempts;
            clip_acc[stage].rejected += cs.rejected;
        }
    }

    SimOutput out;
    out.summary = summarize(records);
    for (const auto& [stage, cs] : clip_acc) {
        if (cs.attempts == 0) continue;
        const double rate =
            static_cast<double>(cs.rejected) / static_cast<double>(cs.attempts);
        if (rate > 0.001) {
            out.summary.truncation.emplace_back(stage, rate);
            char buf[192];
            std::snprintf(buf, sizeof buf,
                          "%s: truncated-at-zero normal redrew %llu of %llu draws "
                          "(%.2f%%)",
                          stage.c_str(),
                          static_cast<unsigned long long>(cs.rejected),
                          static_cast<unsigned long long>(cs.attempts),
                          100.0 * rate);
            out.summary.notes.emplace_back(buf);
        }
    }
    out.records = std::move(records);
    return out;
}

SimSummary summarize(std::span<const RunRecord> records) {
    SimSummary s;
    s.records = records.size();
    if (records.empty()) return s;

    std::vector<double> vt_s, vt_eval, vt_p_ai, vt_p_tc, vt_exe, vt_c, vt_act,
        vtotal;
    for (auto* v : {&vt_s, &vt_eval, &vt_p_ai, &vt_p_tc, &vt_exe, &vt_c, &vt_act,
                    &vtotal}) {
        v->reserve(records.size());
    }

    double impact_sum = 0.0;
    for (const auto& r : records) {
        vt_s.push_back(r.t_s);
        vt_eval.push_back(r.t_eval);
        vt_p_ai.push_back(r.t_p_ai);
        vt_p_tc.push_back(r.t_p_tc);
        vt_exe.push_back(r.t_exe);
        vt_c.push_back(r.t_c);
        vt_act.push_back(r.t_act);
        vtotal.push_back(r.total);
        ++s.verdict_counts[to_string(r.verdict)];
        if (!r.met_deadline) ++s.deadline_misses;
        if (r.impact_mps) {
            ++s.impacts;
            impact_sum += *r.impact_mps;
        }
    }

    s.stats.t_s = summarize_samples(vt_s);
    s.stats.t_eval = summarize_samples(vt_eval);
    s.stats.t_p_ai = summarize_samples(vt_p_ai);
    s.stats.t_p_tc = summarize_samples(vt_p_tc);
    s.stats.t_exe = summarize_samples(vt_exe);
    s.stats.t_c = summarize_samples(vt_c);
    s.stats.t_act = summarize_samples(vt_act);
    s.stats.total = summarize_samples(vtotal);
    s.max_total_ms = s.stats.total.max;
    s.mean_impact_mps =
        s.impacts > 0 ? impact_sum / static_cast<double>(s.impacts) : 0.0;
    s.total_hist = make_histogram(vtotal, 2.5);
    s.t_p_ai_hist = make_histogram(vt_p_ai, 2.5);
    return s;
}

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

json stats_json(const SummaryStats& st) {
    return json{{"n", st.n},     {"mean", st.mean}, {"median", st.median},
                {"stddev", st.stddev}, {"min", st.min},   {"max", st.max}};
}

json hist_json(const Histogram& h) {
    json bins = json::array();
    for (const auto& [bin, count] : h.counts) {
        bins.push_back(
            json{{"lo", h.bin_lo(bin)}, {"hi", h.bin_hi(bin)}, {"count", count}});
    }
    json out{{"bin_width", h.bin_width}, {"bins", bins}};
    if (!h.counts.empty()) {
        const long mode = h.mode_bin();
        out["mode"] = json{{"lo", h.bin_lo(mode)}, {"hi", h.bin_hi(mode)}};
    }
    return out;
}

}  // namespace

void export_csv(std::span<const RunRecord> records, std::ostream& out) {
    out << "run,event_id,t_s,t_eval,t_p_ai,t_p_tc,t_exe,t_c,t_act,total,"
           "verdict,met_deadline,impact_mps\n";
    for (const auto& r : records) {
        out << r.run << ',' << r.event_id << ',' << fmt6(r.t_s) << ','
            << fmt6(r.t_eval) << ',' << fmt6(r.t_p_ai) << ',' << fmt6(r.t_p_tc)
            << ',' << fmt6(r.t_exe) << ',' << fmt6(r.t_c) << ',' << fmt6(r.t_act)
            << ',' << fmt6(r.total) << ',' << to_string(r.verdict) << ','
            << (r.met_deadline ? "true" : "false") << ','
            << (r.impact_mps ? fmt6(*r.impact_mps) : "") << '\n';
    }
}

void export_csv_file(std::span<const RunRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::invalid_argument("cannot write csv file: " + path);
    }
    export_csv(records, out);
    out.flush();
    if (!out) {
        throw std::runtime_error("short write on csv file: " + path);
    }
}

namespace {

ThreatLevel level_from_name(const std::string& name) {
    if (name == "Alarm") return ThreatLevel::Alarm;
    if (name == "Warning1") return ThreatLevel::Warning1;
    if (name == "Warning2") return ThreatLevel::Warning2;
    if (name == "None") return ThreatLevel::None;
    throw std::invalid_argument("csv: unknown verdict: " + name);
}

}  // namespace

std::vector<RunRecord> import_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("csv: empty input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string expected =
        "run,event_id,t_s,t_eval,t_p_ai,t_p_tc,t_exe,t_c,t_act,total,"
        "verdict,met_deadline,impact_mps";
    if (line != expected) {
        throw std::invalid_argument("csv: unexpected header: " + line);
    }

    std::vector<RunRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            if (comma == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (cols.size() != 13) {
            throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                         ": expected 13 columns, got " +
                                         std::to_string(cols.size()));
        }
        try {
            RunRecord r;
            r.run = std::stoi(cols[0]);
            r.event_id = cols[1];
            r.t_s = std::stod(cols[2]);
            r.t_eval = std::stod(cols[3]);
            r.t_p_ai = std::stod(cols[4]);
            r.t_p_tc = std::stod(cols[5]);
            r.t_exe = std::stod(cols[6]);
            r.t_c = std::stod(cols[7]);
            r.t_act = std::stod(cols[8]);
            r.total = std::stod(cols[9]);
            r.verdict = level_from_name(cols[10]);
            if (cols[11] == "true") {
                r.met_deadline = true;
            } else if (cols[11] == "false") {
                r.met_deadline = false;
            } else {
                throw std::runtime_error("bad met_deadline: " + cols[11]);
            }
            if (!cols[12].empty()) r.impact_mps = std::stod(cols[12]);
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                         ": " + e.what());
        }
    }
    return records;
}

std::vector<RunRecord> import_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("cannot open csv file: " + path);
    }
    return import_csv(in);
}

std::string summary_to_json(const SimSummary& s, int indent) {
    json j;
    j["records"] = s.records;
    j["stages"] = json{{"t_s", stats_json(s.stats.t_s)},
                       {"t_eval", stats_json(s.stats.t_eval)},
                       {"t_p_ai", stats_json(s.stats.t_p_ai)},
                       {"t_p_tc", stats_json(s.stats.t_p_tc)},
                       {"t_exe", stats_json(s.stats.t_exe)},
                       {"t_c", stats_json(s.stats.t_c)},
                       {"t_act", stats_json(s.stats.t_act)},
                       {"total", stats_json(s.stats.total)}};
    j["verdicts"] = s.verdict_counts;
    j["deadline_misses"] = s.deadline_misses;
    j["impacts"] = s.impacts;
    j["mean_impact_mps"] = s.mean_impact_mps;
    j["max_total_ms"] = s.max_total_ms;
    j["histograms"] =
        json{{"total", hist_json(s.total_hist)}, {"t_p_ai", hist_json(s.t_p_ai_hist)}};
    json trunc = json::array();
    for (const auto& [stage, rate] : s.truncation) {
        trunc.push_back(json{{"stage", stage}, {"rate", rate}});
    }
    j["truncation"] = trunc;
    j["notes"] = s.notes;
    return j.dump(indent) + "\n";
}

std::string summary_text(const SimSummary& s) {
    std::ostringstream out;
    out << "records          " << s.records << "\n";
    out << "verdicts         ";
    if (s.verdict_counts.empty()) {
        out << "-";
    } else {
        bool first = true;
        for (const auto& [name, count] : s.verdict_counts) {
            if (!first) out << "  ";
            out << name << "=" << count;
            first = false;
        }
    }
    out << "\n";
    out << "deadline misses  " << s.deadline_misses << "\n";
    out << "impacts          " << s.impacts;
    if (s.impacts > 0) {
        out << "  (mean " << fmt6(s.mean_impact_mps) << " m/s)";
    }
    out << "\n";
    if (s.records == 0) return out.str();

    char line[256];
    out << "\nstage        n        mean      median      stddev         min    "
           "     max\n";
    const std::pair<const char*, const SummaryStats*> rows[] = {
        {"t_s", &s.stats.t_s},     {"t_eval", &s.stats.t_eval},
        {"t_p_ai", &s.stats.t_p_ai}, {"t_p_tc", &s.stats.t_p_tc},
        {"t_exe", &s.stats.t_exe}, {"t_c", &s.stats.t_c},
        {"t_act", &s.stats.t_act}, {"total", &s.stats.total}};
    for (const auto& [name, st] : rows) {
        std::snprintf(line, sizeof line,
                      "%-8s %6zu %11.4f %11.4f %11.4f %11.4f %11.4f\n", name,
                      st->n, st->mean, st->median, st->stddev, st->min, st->max);
        out << line;
    }

    auto print_hist = [&](const char* title, const Histogram& h) {
        out << "\n" << title << " (" << h.bin_width << " ms bins)\n";
        std::size_t peak = 1;
        for (const auto& [bin, count] : h.counts) peak = std::max(peak, count);
        for (const auto& [bin, count] : h.counts) {
            const int bars =
                static_cast<int>(50.0 * static_cast<double>(count) /
                                 static_cast<double>(peak) + 0.5);
            std::snprintf(line, sizeof line, "  [%9.2f, %9.2f) %7zu  ",
                          h.bin_lo(bin), h.bin_hi(bin), count);
            out << line << std::string(static_cast<std::size_t>(bars), '#')
                << "\n";
        }
    };
    print_hist("total latency", s.total_hist);
    print_hist("detector stage latency", s.t_p_ai_hist);

    for (const auto& note : s.notes) out << "\nnote: " << note << "\n";
    return out.str();
}

}  // namespace evwarn::sim
