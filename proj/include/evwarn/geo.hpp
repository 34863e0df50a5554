#pragma once

#include <optional>
#include <string>

namespace evwarn {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kPi = 3.14159265358979323846;

// Determinant magnitude below which two rays count as parallel. The
// determinant is sin(theta_u - theta_s), so this is dimensionless.
inline constexpr double kParallelDetTol = 1e-9;

/// Geodetic position, WGS84 degrees.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool valid() const {
        return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon < 180.0;
    }
};

/// Planar position in meters east/north of a declared reference origin.
struct CartPoint {
    double x = 0.0;
    double y = 0.0;
};

double distance(CartPoint a, CartPoint b);

/// Local equirectangular projection around `origin`:
///   x = R * dlon * cos(lat_origin), y = R * dlat   (angles in radians).
/// Throws std::domain_error for invalid coordinates or |lat| >= 85 deg,
/// where the tangent-plane distortion is no longer negligible.
CartPoint to_cartesian(GeoPoint p, GeoPoint origin);

/// Inverse of to_cartesian: recover geodetic coordinates from local
/// tangent-plane meters.
GeoPoint from_cartesian(CartPoint p, GeoPoint origin);

/// Compass bearing (0 = north, 90 = east) to Cartesian angle in [0, 2*pi).
double bearing_to_theta(double bearing_deg);

/// Inverse of bearing_to_theta, result in [0, 360).
double theta_to_bearing(double theta_rad);

/// Wrap any finite degree value into [0, 360).
double normalize_bearing(double bearing_deg);

/// A forward ray: origin plus compass heading plus speed. `theta` is the
/// derived Cartesian angle used by the intersection math.
struct Trajectory {
    CartPoint origin{};
    double bearing_deg = 0.0;
    double speed_mps = 0.0;
    double theta = kPi / 2.0;

    static Trajectory from_bearing(CartPoint origin, double bearing_deg,
                                   double speed_mps);
    static Trajectory from_theta(CartPoint origin, double theta_rad,
                                 double speed_mps);

    /// Position after `elapsed_s` seconds of straight travel.
    /// Throws std::domain_error for negative elapsed time.
    CartPoint position_at(double elapsed_s) const;
};

struct IntersectionSolution {
    double t_u = 0.0;  // meters along the user ray
    double t_s = 0.0;  // meters along the sensor ray
    CartPoint point{};
    std::optional<double> eta_u;  // seconds; absent when speed is zero
    std::optional<double> eta_s;
};

struct IntersectResult {
    enum class Kind { Intersection, Parallel, Behind };

    Kind kind = Kind::Parallel;
    std::optional<IntersectionSolution> solution;  // set iff Intersection

    bool intersects() const { return kind == Kind::Intersection; }
};

const char* to_string(IntersectResult::Kind kind);

/// Solve the 2x2 system for the crossing of two forward rays. Rays whose
/// direction determinant |sin(theta_u - theta_s)| < kParallelDetTol report
/// Parallel (this includes colinear overlap). A crossing point that lies
/// behind either origin (t < 0) reports Behind.
IntersectResult intersect(const Trajectory& u, const Trajectory& s);

}  // namespace evwarn
