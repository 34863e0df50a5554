#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evwarn/direction.hpp"
#include "evwarn/scenario.hpp"
#include "evwarn/stats.hpp"
#include "evwarn/threat.hpp"

namespace evwarn::sim {

/// Deterministic per-run stage-latency source. Draw order is part of the
/// contract: callers must request samples in a fixed sequence so a given
/// seed always reproduces the same trace.
class LatencySampler {
public:
    struct ClipStats {
        std::uint64_t attempts = 0;
        std::uint64_t rejected = 0;
    };

    explicit LatencySampler(std::uint64_t seed) : rng_(seed) {}

    /// One stage draw. Normal specs redraw until non-negative and record the
    /// rejections under `stage`; gives up after 1000 consecutive rejections.
    double sample(const LatencySpec& spec, const std::string& stage);

    const std::map<std::string, ClipStats>& clip_stats() const { return clips_; }

    double uniform01();        // [0, 1), 53-bit
    double standard_normal();  // Box-Muller, one value per call

private:
    std::mt19937_64 rng_;
    std::map<std::string, ClipStats> clips_;
};

std::uint64_t derive_run_seed(std::uint64_t base_seed, int run);

/// One classified event delivery for one user.
struct RunRecord {
    int run = 0;
    std::uint64_t frame_index = 0;
    double sim_time_ms = 0.0;
    std::string event_id;
    std::string sensor_id;
    std::string user_id;
    double t_s = 0.0, t_eval = 0.0, t_p_ai = 0.0, t_p_tc = 0.0;
    double t_exe = 0.0, t_c = 0.0, t_act = 0.0;
    double total = 0.0;
    ThreatLevel verdict = ThreatLevel::None;
    bool met_deadline = true;
    std::optional<double> impact_mps;       // only on late alarms
    std::optional<double> distance_m;       // user to crossing point at delivery
    std::optional<double> eta_user_s;       // time to crossing at delivery speed
};

struct StageStats {
    SummaryStats t_s, t_eval, t_p_ai, t_p_tc, t_exe, t_c, t_act, total;
};

struct SimSummary {
    std::size_t records = 0;
    StageStats stats;
    std::map<std::string, std::size_t> verdict_counts;
    std::size_t deadline_misses = 0;
    std::size_t impacts = 0;
    double mean_impact_mps = 0.0;  // over impact rows; 0 when none
    double max_total_ms = 0.0;
    Histogram total_hist;   // 2.5 ms bins
    Histogram t_p_ai_hist;  // 2.5 ms bins
    /// stage name -> fraction of truncated-normal draws that were redrawn;
    /// only stages above 0.1% appear.
    std::vector<std::pair<std::string, double>> truncation;
    std::vector<std::string> notes;
};

struct SimOutput {
    std::vector<RunRecord> records;
    SimSummary summary;
};

/// Synthetic detector output for one sensor at one instant: every scenario
/// vehicle inside detection range becomes a box whose placement encodes its
/// radial direction (approaching boxes sit mid-frame in the inbound lane
/// half, departing boxes sit low in the outbound half).
DetectionFrame synthesize_frame(const Scenario& sc, const SensorSpec& sensor,
                                double sim_time_s, std::uint64_t frame_index,
                                double timestamp_ms);

/// Virtual-clock pipeline simulation. Per frame and sensor: synthesize
/// detections, vote direction per box, and when an approaching emergency
/// vehicle is present, classify the threat for every user inside the 3x3
/// dissemination neighborhood and charge the event with sampled stage
/// latencies. Byte-identical output for identical scenarios and seeds.
SimOutput run(const Scenario& sc);

SimSummary summarize(std::span<const RunRecord> records);

void export_csv(std::span<const RunRecord> records, std::ostream& out);
void export_csv_file(std::span<const RunRecord> records, const std::string& path);

/// Reads a CSV produced by export_csv back into records (the columns not
/// present in the file stay defaulted). Throws std::invalid_argument on a
/// malformed header or row.
std::vector<RunRecord> import_csv(std::istream& in);
std::vector<RunRecord> import_csv_file(const std::string& path);

std::string summary_to_json(const SimSummary& s, int indent = 2);
std::string summary_text(const SimSummary& s);

}  // namespace evwarn::sim
