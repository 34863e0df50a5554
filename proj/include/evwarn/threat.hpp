#pragma once

#include <optional>
#include <string>

#include "evwarn/geo.hpp"
#include "evwarn/grid.hpp"

namespace evwarn {

struct UserState {
    std::string id;
    Trajectory trajectory;
    Cell cell;
};

/// Sensor-side view of a detection: the trajectory anchors at the sensor
/// position and points along the detected object's bearing. `event_active`
/// is the E(S) flag, a positive emergency detection heading toward the
/// sensor.
struct SensorState {
    std::string id;
    Trajectory trajectory;
    Cell cell;
    bool event_active = false;
};

enum class ThreatLevel { Alarm, Warning1, Warning2, None };

const char* to_string(ThreatLevel level);

struct ThreatVerdict {
    ThreatLevel level = ThreatLevel::None;
    std::optional<IntersectionSolution> intersection;
    std::string rationale;
};

/// Threat-level decision, checked in precedence order:
///   Alarm     - forward intersection inside the user's cell, sensor
///               co-resident in that cell;
///   Warning1  - forward intersection inside the user's cell, sensor in a
///               neighboring cell;
///   Warning2  - sensor co-resident with an active event, regardless of
///               geometry;
///   None      - otherwise.
/// Throws std::invalid_argument when the two states use different grid
/// configurations.
ThreatVerdict classify(const UserState& u, const SensorState& s);

enum class Applicability { ProximityEvent, IntersectionEvent, NotApplicable };

const char* to_string(Applicability a);

/// Event category: intersection events cross the user's path within the
/// 3x3 grid around the user; proximity events merely share the cell while
/// a detection is active.
Applicability applicability(const UserState& u, const SensorState& s);

}  // namespace evwarn
