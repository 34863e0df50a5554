#include "evwarn/geo.hpp"

#include <cmath>
#include <stdexcept>

namespace evwarn {

namespace {

constexpr double kDegToRad = kPi / 180.0;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_two_pi(double rad) {
    double r = std::fmod(rad, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    // fmod can return exactly kTwoPi after the correction when rad is a
    // tiny negative value; fold it back.
    if (r >= kTwoPi) r = 0.0;
    return r;
}

}  // namespace

double distance(CartPoint a, CartPoint b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

CartPoint to_cartesian(GeoPoint p, GeoPoint origin) {
    if (!p.valid() || !origin.valid()) {
        throw std::domain_error("to_cartesian: coordinates out of range");
    }
    if (std::abs(p.lat) >= 85.0 || std::abs(origin.lat) >= 85.0) {
        throw std::domain_error("to_cartesian: |lat| must be below 85 degrees");
    }
    double dlon = p.lon - origin.lon;
    // take the short way around the antimeridian
    if (dlon >= 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    const double dlat = p.lat - origin.lat;
    return CartPoint{
        kEarthRadiusM * dlon * kDegToRad * std::cos(origin.lat * kDegToRad),
        kEarthRadiusM * dlat * kDegToRad,
    };
}

GeoPoint from_cartesian(CartPoint p, GeoPoint origin) {
    if (!origin.valid()) {
        throw std::domain_error("from_cartesian: origin out of range");
    }
    if (std::abs(origin.lat) >= 85.0) {
        throw std::domain_error("from_cartesian: |lat| must be below 85 degrees");
    }
    GeoPoint g;
    g.lat = origin.lat + p.y / (kEarthRadiusM * kDegToRad);
    g.lon = origin.lon +
            p.x / (kEarthRadiusM * kDegToRad * std::cos(origin.lat * kDegToRad));
    if (g.lon >= 180.0) g.lon -= 360.0;
    if (g.lon < -180.0) g.lon += 360.0;
    if (!g.valid()) {
        throw std::domain_error("from_cartesian: point leaves the valid region");
    }
    return g;
}

double bearing_to_theta(double bearing_deg) {
    return wrap_two_pi(kPi / 2.0 - bearing_deg * kDegToRad);
}

double theta_to_bearing(double theta_rad) {
    return normalize_bearing(90.0 - theta_rad / kDegToRad);
}

double normalize_bearing(double bearing_deg) {
    double b = std::fmod(bearing_deg, 360.0);
    if (b < 0.0) b += 360.0;
    if (b >= 360.0) b = 0.0;
    return b;
}

Trajectory Trajectory::from_bearing(CartPoint origin, double bearing_deg,
                                    double speed_mps) {
    if (!(speed_mps >= 0.0)) {
        throw std::domain_error("Trajectory: speed must be >= 0");
    }
    Trajectory t;
    t.origin = origin;
    t.bearing_deg = normalize_bearing(bearing_deg);
    t.speed_mps = speed_mps;
    t.theta = bearing_to_theta(bearing_deg);
    return t;
}

Trajectory Trajectory::from_theta(CartPoint origin, double theta_rad,
                                  double speed_mps) {
    if (!(speed_mps >= 0.0)) {
        throw std::domain_error("Trajectory: speed must be >= 0");
    }
    Trajectory t;
    t.origin = origin;
    t.theta = wrap_two_pi(theta_rad);
    t.bearing_deg = theta_to_bearing(t.theta);
    t.speed_mps = speed_mps;
    return t;
}

CartPoint Trajectory::position_at(double elapsed_s) const {
    if (elapsed_s < 0.0) {
        throw std::domain_error("position_at: elapsed time must be >= 0");
    }
    const double arc = speed_mps * elapsed_s;
    return CartPoint{origin.x + arc * std::cos(theta),
                     origin.y + arc * std::sin(theta)};
}

const char* to_string(IntersectResult::Kind kind) {
    switch (kind) {
        case IntersectResult::Kind::Intersection: return "intersection";
        case IntersectResult::Kind::Parallel: return "parallel";
        case IntersectResult::Kind::Behind: return "behind";
    }
    return "unknown";
}

IntersectResult intersect(const Trajectory& u, const Trajectory& s) {
    const double cu = std::cos(u.theta), su = std::sin(u.theta);
    const double cs = std::cos(s.theta), ss = std::sin(s.theta);

    // det of [[cos u, -cos s], [sin u, -sin s]] == sin(theta_u - theta_s)
    const double det = su * cs - cu * ss;
    if (std::abs(det) < kParallelDetTol) {
        return IntersectResult{IntersectResult::Kind::Parallel, std::nullopt};
    }

    const double dx = s.origin.x - u.origin.x;
    const double dy = s.origin.y - u.origin.y;
    const double t_u = (cs * dy - ss * dx) / det;
    const double t_s = (cu * dy - su * dx) / det;

    if (t_u < 0.0 || t_s < 0.0) {
        return IntersectResult{IntersectResult::Kind::Behind, std::nullopt};
    }

    IntersectionSolution sol;
    sol.t_u = t_u;
    sol.t_s = t_s;
    sol.point = CartPoint{u.origin.x + t_u * cu, u.origin.y + t_u * su};
    if (u.speed_mps > 0.0) sol.eta_u = t_u / u.speed_mps;
    if (s.speed_mps > 0.0) sol.eta_s = t_s / s.speed_mps;
    return IntersectResult{IntersectResult::Kind::Intersection, sol};
}

}  // namespace evwarn
