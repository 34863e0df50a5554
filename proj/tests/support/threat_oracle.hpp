#pragma once

// Rule-by-rule reference for the threat decision table. Cell indices and
// adjacency are recomputed directly from raw coordinates, and the crossing
// point comes from the sampling solver, so nothing here shares code with
// the engine under test. Decision order:
//   Alarm     crossing exists, point inside the user's cell (closed
//             bounds), sensor resident in that same cell
//   Warning1  crossing exists, point inside the user's cell, sensor in one
//             of the eight surrounding cells (none with negative indices)
//   Warning2  sensor in the user's cell and the event flag set
//   None      otherwise

#include <cmath>
#include <cstdlib>

#include "ray_oracle.hpp"

namespace threatoracle {

enum class Level { Alarm, Warning1, Warning2, None };

inline const char* to_string(Level l) {
    switch (l) {
        case Level::Alarm: return "Alarm";
        case Level::Warning1: return "Warning1";
        case Level::Warning2: return "Warning2";
        default: return "None";
    }
}

struct Placement {
    double ux = 0.0, uy = 0.0;
    double u_bearing = 0.0;
    double u_speed = 10.0;
    double sx = 0.0, sy = 0.0;
    double s_bearing = 0.0;
    double s_speed = 10.0;
    bool event_active = false;
    double cell = 1000.0;
};

inline Level evaluate(const Placement& p) {
    const long ucol = static_cast<long>(std::floor(p.ux / p.cell));
    const long urow = static_cast<long>(std::floor(p.uy / p.cell));
    const long scol = static_cast<long>(std::floor(p.sx / p.cell));
    const long srow = static_cast<long>(std::floor(p.sy / p.cell));
    const bool same = ucol == scol && urow == srow;
    const bool neighbor = !same && std::labs(scol - ucol) <= 1 &&
                          std::labs(srow - urow) <= 1 && scol >= 0 && srow >= 0;

    const rayoracle::Ray a{p.ux, p.uy, rayoracle::compass_theta(p.u_bearing),
                           p.u_speed};
    const rayoracle::Ray b{p.sx, p.sy, rayoracle::compass_theta(p.s_bearing),
                           p.s_speed};
    const rayoracle::Result cross = rayoracle::solve(a, b);

    bool in_user_cell = false;
    if (cross.kind == rayoracle::Kind::Crossing) {
        in_user_cell = cross.x >= static_cast<double>(ucol) * p.cell &&
                       cross.x <= static_cast<double>(ucol + 1) * p.cell &&
                       cross.y >= static_cast<double>(urow) * p.cell &&
                       cross.y <= static_cast<double>(urow + 1) * p.cell;
    }
    if (in_user_cell && same) return Level::Alarm;
    if (in_user_cell && neighbor) return Level::Warning1;
    if (same && p.event_active) return Level::Warning2;
    return Level::None;
}

}  // namespace threatoracle
