#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace evwarn {

enum class ViewLabel { Front, Rear };

/// Annotated detection box in pixel coordinates, top-left anchored.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    std::string class_label;
    std::optional<ViewLabel> view;

    double bottom() const { return y + h; }
};

/// One timestamped detection result; stands in for the CNN output of a
/// camera frame.
struct DetectionFrame {
    std::uint64_t frame_id = 0;
    std::string sensor_id;
    std::int64_t timestamp_ms = 0;
    int width = 0;
    int height = 0;
    std::vector<BoundingBox> boxes;

    bool valid() const;
};

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Operator-drawn lane polygon with its direction vote: +1 for a lane that
/// carries traffic toward the camera, -1 for away.
struct LaneZone {
    std::vector<PixelPoint> polygon;
    int vote = 1;
};

enum class Vote : int { Toward = 1, Away = -1 };

inline int vote_value(Vote v) { return static_cast<int>(v); }

enum class Heading { Toward, Away };

const char* to_string(Heading h);
const char* to_string(ViewLabel v);

/// Even-odd rule containment; points exactly on an edge count as inside.
bool point_in_polygon(PixelPoint p, const std::vector<PixelPoint>& polygon);

/// Lane-zone detector: vote of the zone containing the box's bottom-center
/// anchor, +1 when no zone contains it. Throws std::invalid_argument when
/// no zones are configured.
Vote d_bb(const BoundingBox& box, const std::vector<LaneZone>& zones);

/// Bottom-of-image emergence detector: a box whose bottom edge dips into
/// the lowest `beta` fraction of the frame just entered the scene and is
/// moving away.
Vote d_eb(const BoundingBox& box, double frame_h, double beta = 0.2);

/// View-label detector: front view faces the camera. Unlabeled boxes vote
/// Toward so an inconclusive model can only over-warn.
Vote d_mod(const BoundingBox& box);

/// Sum the three votes; the vehicle heads toward the sensor when the sum
/// is at least 1 (equivalently, two of three agree).
Heading combine(Vote v_bb, Vote v_eb, Vote v_mod);

/// Heading of one box through the full three-detector vote.
Heading classify_box(const BoundingBox& box, const std::vector<LaneZone>& zones,
                     double frame_h, double beta = 0.2);

/// Bearing of a detected object given the camera facing: incoming objects
/// drive opposite to the camera, outgoing objects along it.
double object_bearing(double camera_bearing_deg, Heading heading);

}  // namespace evwarn
