#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evwarn/direction.hpp"
#include "evwarn/geo.hpp"

namespace evwarn::sim {

/// How a pipeline stage duration is drawn on each event.
enum class LatencyKind { Constant, Uniform, Normal, Empirical };

struct LatencySpec {
    LatencyKind kind = LatencyKind::Constant;
    double value_ms = 0.0;             // Constant
    double lo_ms = 0.0, hi_ms = 0.0;   // Uniform over [lo, hi)
    double mean_ms = 0.0, std_ms = 0.0;  // Normal, truncated at 0
    std::string path;                  // Empirical: one sample per line (ms)
    std::vector<double> samples;       // loaded empirical samples

    static LatencySpec constant(double ms);
    static LatencySpec uniform(double lo, double hi);
    static LatencySpec normal(double mean, double std);
    /// Loads the sample file immediately; throws std::invalid_argument when
    /// the file is missing or holds no usable numbers.
    static LatencySpec empirical(const std::string& path);
};

/// Per-stage draw specifications for one simulated event.
struct StageSpecs {
    LatencySpec t_s;     // capture + encode
    LatencySpec t_eval;  // network hop, sensor to processing
    LatencySpec t_p_ai;  // decode + detector inference
    LatencySpec t_p_tc;  // threat classification
    LatencySpec t_exe;   // network hop, processing to consumer
    LatencySpec t_c;     // consumer-side handling
    LatencySpec t_act;   // driver/vehicle actuation allowance
};

struct SensorSpec {
    std::string id;
    CartPoint position{};         // grid meters
    double camera_bearing_deg = 0.0;
    std::vector<LaneZone> lane_zones;
};

struct UserSpec {
    std::string id;
    CartPoint position{};
    double bearing_deg = 0.0;
    double speed_mps = 0.0;

    Trajectory trajectory() const {
        return Trajectory::from_bearing(position, bearing_deg, speed_mps);
    }
};

struct VehicleSpec {
    std::string id;
    std::string class_label;  // detector class, e.g. "emergency"
    CartPoint position{};
    double bearing_deg = 0.0;
    double speed_mps = 0.0;

    Trajectory trajectory() const {
        return Trajectory::from_bearing(position, bearing_deg, speed_mps);
    }
};

/// Complete simulation input: geometry, traffic, and latency model.
struct Scenario {
    GeoPoint grid_origin{46.62, 14.30};
    double cell_size_m = 1000.0;

    double t_max_ms = 150.0;
    std::uint64_t seed = 42;
    int runs = 1;
    double duration_s = 5.0;
    double frame_interval_ms = 200.0;
    double detection_range_m = 400.0;
    double k_impact = 7.63;            // m/s of impact speed per second late
    double assumed_object_speed_mps = 20.0;
    std::string emergency_class = "emergency";

    int frame_width = 1920;
    int frame_height = 1080;
    double edge_band = 0.2;  // bottom-of-frame fraction used by the edge vote

    std::vector<SensorSpec> sensors;
    std::vector<UserSpec> users;
    std::vector<VehicleSpec> vehicles;
    StageSpecs latency;

    /// Throws std::invalid_argument when any field is out of range or ids
    /// collide.
    void validate() const;
};

/// Built-in single-intersection scenario: one roadside sensor, one
/// southbound emergency vehicle, one crossing user that ends in an alarm and
/// one lead user that shares the cell without a crossing trajectory.
Scenario default_scenario();

/// Same geometry with measured stage distributions: detector latency drawn
/// from an empirical sample file, classification from a truncated normal.
/// `ai_samples_path` is stored verbatim in the scenario.
Scenario table2_scenario(const std::string& ai_samples_path);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);
std::string scenario_to_json(const Scenario& s, int indent = 2);
Scenario scenario_from_json(const std::string& text,
                            const std::string& base_dir = "");

}  // namespace evwarn::sim
