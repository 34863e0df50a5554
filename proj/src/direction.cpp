#include "evwarn/direction.hpp"

#include <cmath>
#include <stdexcept>

#include "evwarn/geo.hpp"

namespace evwarn {

bool DetectionFrame::valid() const {
    if (width <= 0 || height <= 0) return false;
    for (const auto& b : boxes) {
        if (!(b.w > 0.0) || !(b.h > 0.0)) return false;
        if (b.x < 0.0 || b.y < 0.0) return false;
        if (b.x + b.w > width || b.y + b.h > height) return false;
    }
    return true;
}

const char* to_string(Heading h) {
    return h == Heading::Toward ? "toward" : "away";
}

const char* to_string(ViewLabel v) {
    return v == ViewLabel::Front ? "front" : "rear";
}

bool point_in_polygon(PixelPoint p, const std::vector<PixelPoint>& polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const PixelPoint& a = polygon[j];
        const PixelPoint& b = polygon[i];
        // on-edge check: collinear and within the segment's bounding box
        const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (std::abs(cross) < 1e-9 &&
            p.x >= std::min(a.x, b.x) - 1e-9 && p.x <= std::max(a.x, b.x) + 1e-9 &&
            p.y >= std::min(a.y, b.y) - 1e-9 && p.y <= std::max(a.y, b.y) + 1e-9) {
            return true;
        }
        if ((b.y > p.y) != (a.y > p.y)) {
            const double x_at = (a.x - b.x) * (p.y - b.y) / (a.y - b.y) + b.x;
            if (p.x < x_at) inside = !inside;
        }
    }
    return inside;
}

Vote d_bb(const BoundingBox& box, const std::vector<LaneZone>& zones) {
    if (zones.empty()) {
        throw std::invalid_argument("d_bb: no lane zones configured for this sensor");
    }
    // bottom-center approximates the wheel/ground contact point
    const PixelPoint anchor{box.x + box.w / 2.0, box.y + box.h};
    for (const auto& zone : zones) {
        if (point_in_polygon(anchor, zone.polygon)) {
            return zone.vote >= 0 ? Vote::Toward : Vote::Away;
        }
    }
    return Vote::Toward;
}

Vote d_eb(const BoundingBox& box, double frame_h, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("d_eb: beta must be in (0, 1)");
    }
    return box.bottom() > (1.0 - beta) * frame_h ? Vote::Away : Vote::Toward;
}

Vote d_mod(const BoundingBox& box) {
    if (box.view && *box.view == ViewLabel::Rear) return Vote::Away;
    return Vote::Toward;
}

Heading combine(Vote v_bb, Vote v_eb, Vote v_mod) {
    const int d = vote_value(v_bb) + vote_value(v_eb) + vote_value(v_mod);
    return d >= 1 ? Heading::Toward : Heading::Away;
}

Heading classify_box(const BoundingBox& box, const std::vector<LaneZone>& zones,
                     double frame_h, double beta) {
    return combine(d_bb(box, zones), d_eb(box, frame_h, beta), d_mod(box));
}

double object_bearing(double camera_bearing_deg, Heading heading) {
    return heading == Heading::Toward
               ? normalize_bearing(camera_bearing_deg + 180.0)
               : normalize_bearing(camera_bearing_deg);
}

}  // namespace evwarn
