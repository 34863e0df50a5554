#include "evwarn/threat.hpp"

#include <stdexcept>

namespace evwarn {

namespace {

std::string format_point(CartPoint p) {
    return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

}  // namespace

const char* to_string(ThreatLevel level) {
    switch (level) {
        case ThreatLevel::Alarm: return "Alarm";
        case ThreatLevel::Warning1: return "Warning1";
        case ThreatLevel::Warning2: return "Warning2";
        case ThreatLevel::None: return "None";
    }
    return "None";
}

const char* to_string(Applicability a) {
    switch (a) {
        case Applicability::ProximityEvent: return "proximity";
        case Applicability::IntersectionEvent: return "intersection";
        case Applicability::NotApplicable: return "not_applicable";
    }
    return "not_applicable";
}

ThreatVerdict classify(const UserState& u, const SensorState& s) {
    if (u.cell.size != s.cell.size) {
        throw std::invalid_argument("classify: user and sensor use different grid configurations");
    }

    const IntersectResult hit = intersect(u.trajectory, s.trajectory);
    const bool same_cell = u.cell == s.cell;

    if (hit.intersects() && intra(hit.solution->point, u.cell)) {
        if (same_cell) {
            return ThreatVerdict{ThreatLevel::Alarm, hit.solution,
                                 "trajectories cross at " + format_point(hit.solution->point) +
                                     " inside " + cell_name(u.cell) + "; sensor co-resident"};
        }
        if (neighborhood(u.cell).contains(s.cell)) {
            return ThreatVerdict{ThreatLevel::Warning1, hit.solution,
                                 "trajectories cross at " + format_point(hit.solution->point) +
                                     " inside " + cell_name(u.cell) + "; sensor in neighboring " +
                                     cell_name(s.cell)};
        }
    }

    if (same_cell && s.event_active) {
        return ThreatVerdict{ThreatLevel::Warning2,
                             hit.intersects() ? hit.solution : std::nullopt,
                             "sensor co-resident in " + cell_name(u.cell) +
                                 " with active event"};
    }

    std::string why;
    if (!hit.intersects()) {
        why = std::string("no forward intersection (") + to_string(hit.kind) + ")";
    } else if (!intra(hit.solution->point, u.cell)) {
        why = "intersection outside the user's cell";
    } else {
        why = "sensor outside the 3x3 grid";
    }
    return ThreatVerdict{ThreatLevel::None, std::nullopt, why};
}

Applicability applicability(const UserState& u, const SensorState& s) {
    if (u.cell.size != s.cell.size) {
        throw std::invalid_argument("applicability: user and sensor use different grid configurations");
    }

    const IntersectResult hit = intersect(u.trajectory, s.trajectory);
    if (hit.intersects()) {
        const CartPoint i = hit.solution->point;
        if (within_cell_closed(i, u.cell)) {
            return Applicability::IntersectionEvent;
        }
        for (const auto& member : neighborhood(u.cell).members) {
            if (member && within_cell_closed(i, *member)) {
                return Applicability::IntersectionEvent;
            }
        }
    }
    if (coexist(s.trajectory.origin, u.cell) && s.event_active) {
        return Applicability::ProximityEvent;
    }
    return Applicability::NotApplicable;
}

}  // namespace evwarn
