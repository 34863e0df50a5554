#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "evwarn/threat.hpp"
#include "support/threat_oracle.hpp"

using namespace evwarn;

namespace {

UserState make_user(CartPoint p, double bearing, double speed) {
    UserState u;
    u.id = "u";
    u.trajectory = Trajectory::from_bearing(p, bearing, speed);
    u.cell = cell_of(p);
    return u;
}

SensorState make_sensor(CartPoint p, double bearing, double speed, bool event) {
    SensorState s;
    s.id = "s";
    s.trajectory = Trajectory::from_bearing(p, bearing, speed);
    s.cell = cell_of(p);
    s.event_active = event;
    return s;
}

ThreatLevel engine_level(const threatoracle::Placement& p) {
    const UserState u = make_user({p.ux, p.uy}, p.u_bearing, p.u_speed);
    SensorState s = make_sensor({p.sx, p.sy}, p.s_bearing, p.s_speed,
                                p.event_active);
    return classify(u, s).level;
}

ThreatLevel as_engine(threatoracle::Level l) {
    switch (l) {
        case threatoracle::Level::Alarm: return ThreatLevel::Alarm;
        case threatoracle::Level::Warning1: return ThreatLevel::Warning1;
        case threatoracle::Level::Warning2: return ThreatLevel::Warning2;
        default: return ThreatLevel::None;
    }
}

}  // namespace

TEST_CASE("co-resident crossing in the user cell raises an alarm") {
    // both in cell B3; rays cross at (1500, 3200) which is inside B3
    const UserState u = make_user({1100, 3200}, 90.0, 20.0);
    const SensorState s = make_sensor({1500, 3250}, 180.0, 20.0, true);
    const ThreatVerdict v = classify(u, s);
    CHECK(v.level == ThreatLevel::Alarm);
    REQUIRE(v.intersection.has_value());
    CHECK(v.intersection->point.x == doctest::Approx(1500.0));
    CHECK(v.intersection->point.y == doctest::Approx(3200.0));
    CHECK(cell_name(u.cell) == "B3");
}

TEST_CASE("neighboring sensor with crossing in the user cell is warning 1") {
    // sensor one cell east (C3), aimed so the rays cross at (1500, 3200),
    // which is inside the user's cell B3
    const UserState u = make_user({1100, 3200}, 90.0, 20.0);
    const double aim =
        theta_to_bearing(std::atan2(3200.0 - 3250.0, 1500.0 - 2100.0));
    const SensorState s = make_sensor({2100, 3250}, aim, 20.0, true);
    REQUIRE(cell_name(s.cell) == "C3");
    const ThreatVerdict v = classify(u, s);
    CHECK(v.level == ThreatLevel::Warning1);
    REQUIRE(v.intersection.has_value());
    CHECK(v.intersection->point.x == doctest::Approx(1500.0));
    CHECK(v.intersection->point.y == doctest::Approx(3200.0));

    // same aim but the crossing outside the user's cell stays quiet
    const SensorState east = make_sensor({2100, 3250}, 180.0, 20.0, true);
    CHECK(classify(u, east).level == ThreatLevel::None);
}

TEST_CASE("parallel rays in a shared cell with an event is warning 2") {
    const UserState u = make_user({1100, 3200}, 90.0, 20.0);
    const SensorState s = make_sensor({1500, 3250}, 90.0, 20.0, true);
    const ThreatVerdict v = classify(u, s);
    CHECK(v.level == ThreatLevel::Warning2);
    CHECK_FALSE(v.intersection.has_value());
}

TEST_CASE("shared cell without an event and without a crossing is none") {
    const UserState u = make_user({1100, 3200}, 90.0, 20.0);
    const SensorState s = make_sensor({1500, 3250}, 90.0, 20.0, false);
    CHECK(classify(u, s).level == ThreatLevel::None);
}

TEST_CASE("distant sensor is none even with a crossing somewhere") {
    // sensor two cells away; crossing lands outside the user's cell
    const UserState u = make_user({1100, 3200}, 90.0, 20.0);
    const SensorState s = make_sensor({3500, 3250}, 180.0, 20.0, true);
    CHECK(classify(u, s).level == ThreatLevel::None);
}

TEST_CASE("grid size mismatch is rejected") {
    UserState u = make_user({1100, 3200}, 90.0, 20.0);
    SensorState s = make_sensor({1500, 3250}, 180.0, 20.0, true);
    s.cell.size = 500.0;
    CHECK_THROWS_AS(classify(u, s), std::invalid_argument);
}

TEST_CASE("activating the event flag never downgrades the verdict") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> pos(0.0, 5000.0);
    std::uniform_real_distribution<double> brg(0.0, 360.0);
    auto rank = [](ThreatLevel l) {
        switch (l) {
            case ThreatLevel::Alarm: return 3;
            case ThreatLevel::Warning1: return 2;
            case ThreatLevel::Warning2: return 1;
            default: return 0;
        }
    };
    for (int i = 0; i < 2000; ++i) {
        const UserState u = make_user({pos(rng), pos(rng)}, brg(rng), 15.0);
        const CartPoint sp{pos(rng), pos(rng)};
        const double sb = brg(rng);
        const ThreatLevel off = classify(u, make_sensor(sp, sb, 15.0, false)).level;
        const ThreatLevel on = classify(u, make_sensor(sp, sb, 15.0, true)).level;
        CHECK(rank(on) >= rank(off));
    }
}

TEST_CASE("exhaustive 5x5 sweep matches the rule-table reference") {
    // user fixed mid-grid; sensors at off-center spots in all 25 cells,
    // eight bearings spanning the circle including the exact parallel and
    // anti-parallel of the user's heading, event flag both ways
    threatoracle::Placement p;
    p.ux = 2431.7;
    p.uy = 2566.3;
    p.u_bearing = 37.0;
    p.u_speed = 14.0;
    p.s_speed = 20.0;

    int cases = 0;
    int alarms = 0, w1 = 0, w2 = 0, nones = 0;
    for (int col = 0; col < 5; ++col) {
        for (int row = 0; row < 5; ++row) {
            for (int k = 0; k < 8; ++k) {
                for (bool event : {false, true}) {
                    p.sx = col * 1000.0 + 487.3;
                    p.sy = row * 1000.0 + 512.9;
                    p.s_bearing = 37.0 + k * 45.0;
                    p.event_active = event;
                    const ThreatLevel want = as_engine(threatoracle::evaluate(p));
                    const ThreatLevel got = engine_level(p);
                    INFO("cell (", col, ",", row, ") bearing ", p.s_bearing,
                         " event ", event);
                    CHECK(got == want);
                    ++cases;
                    switch (got) {
                        case ThreatLevel::Alarm: ++alarms; break;
                        case ThreatLevel::Warning1: ++w1; break;
                        case ThreatLevel::Warning2: ++w2; break;
                        default: ++nones; break;
                    }
                }
            }
        }
    }
    CHECK(cases == 400);
    // the sweep must actually exercise every verdict
    CHECK(alarms > 0);
    CHECK(w1 > 0);
    CHECK(w2 > 0);
    CHECK(nones > 0);
}

TEST_CASE("random placements agree with the rule-table reference") {
    std::mt19937_64 rng(20240902);
    std::uniform_real_distribution<double> pos(0.0, 5000.0);
    std::uniform_real_distribution<double> brg(0.0, 360.0);
    std::uniform_real_distribution<double> spd(0.5, 30.0);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 10000; ++i) {
        threatoracle::Placement p;
        p.ux = pos(rng);
        p.uy = pos(rng);
        p.u_bearing = brg(rng);
        p.u_speed = spd(rng);
        p.sx = pos(rng);
        p.sy = pos(rng);
        p.s_bearing = brg(rng);
        p.s_speed = spd(rng);
        p.event_active = coin(rng);
        const ThreatLevel want = as_engine(threatoracle::evaluate(p));
        const ThreatLevel got = engine_level(p);
        INFO("case ", i, ": user (", p.ux, ",", p.uy, ") b", p.u_bearing,
             " sensor (", p.sx, ",", p.sy, ") b", p.s_bearing, " e",
             p.event_active);
        REQUIRE(got == want);
    }
}

TEST_CASE("applicability categories") {
    // crossing inside the user's own cell
    const UserState u = make_user({1100, 3200}, 90.0, 20.0);
    CHECK(applicability(u, make_sensor({1500, 3250}, 180.0, 20.0, true)) ==
          Applicability::IntersectionEvent);
    // same cell, diverging rays, event active
    CHECK(applicability(u, make_sensor({1500, 3250}, 90.0, 20.0, true)) ==
          Applicability::ProximityEvent);
    // far sensor, nothing applies
    CHECK(applicability(u, make_sensor({4800, 300}, 0.0, 20.0, true)) ==
          Applicability::NotApplicable);
}

TEST_CASE("alarm verdicts carry a usable rationale") {
    const UserState u = make_user({1100, 3200}, 90.0, 20.0);
    const SensorState s = make_sensor({1500, 3250}, 180.0, 20.0, true);
    const ThreatVerdict v = classify(u, s);
    CHECK_FALSE(v.rationale.empty());
    CHECK(std::string(to_string(v.level)) == "Alarm");
}
