#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>

#include "evwarn/latency.hpp"

using namespace evwarn;

TEST_CASE("stage defaults compose the published stage sums") {
    const LatencyConstants c{};
    CHECK(c.t_s() == doctest::Approx(22.0));
    CHECK(c.t_p() == doctest::Approx(76.39));
    CHECK(c.t_c == doctest::Approx(1.2));
    CHECK(c.t_max == doctest::Approx(150.0));
}

TEST_CASE("total latency sums the six stages") {
    CHECK(total_latency({22, 25.20, 76.39, 25.20, 1.2, 0}) ==
          doctest::Approx(149.99).epsilon(1e-12));
    CHECK(total_latency({0, 0, 0, 0, 0, 0}) == 0.0);
    CHECK(total_latency({10, 10, 10, 10, 10, 10}) == doctest::Approx(60.0));
    CHECK_THROWS_AS(total_latency({-1, 0, 0, 0, 0, 0}), std::domain_error);
}

TEST_CASE("network budget reproduces the published allocation") {
    const BudgetResult r = solve_network_budget(150, 22, 76.39, 1.2);
    CHECK(r.compute_sum == doctest::Approx(99.59));
    CHECK(r.network_allowance_total == doctest::Approx(50.41));
    CHECK(r.t_eval_alloc == doctest::Approx(25.205).epsilon(0.01 / 25.205));
    CHECK(r.t_exe_alloc == doctest::Approx(25.205).epsilon(0.01 / 25.205));
    CHECK(r.t_eval_alloc == r.t_exe_alloc);
}

TEST_CASE("tight budget still splits what remains") {
    const BudgetResult r = solve_network_budget(100, 22, 76.39, 1.2);
    CHECK(r.t_eval_alloc == doctest::Approx(0.205).epsilon(1e-9));
}

TEST_CASE("infeasible budget carries the deficit") {
    try {
        solve_network_budget(90, 22, 76.39, 1.2);
        FAIL("expected BudgetInfeasible");
    } catch (const BudgetInfeasible& e) {
        CHECK(e.deficit_ms == doctest::Approx(9.59).epsilon(1e-9));
    }
}

TEST_CASE("budget identity closes for any feasible input") {
    for (double t_tot : {120.0, 150.0, 175.0, 200.0}) {
        for (double t_p : {60.0, 76.39, 90.0}) {
            const BudgetResult r = solve_network_budget(t_tot, 22, t_p, 1.2);
            CHECK(22 + t_p + 1.2 + 2 * r.t_eval_alloc ==
                  doctest::Approx(t_tot).epsilon(1e-12));
        }
    }
}

TEST_CASE("asymmetric split preserves the total allowance") {
    const BudgetResult r = solve_network_budget(150, 22, 76.39, 1.2, 0.3);
    CHECK(r.t_eval_alloc == doctest::Approx(0.3 * 50.41));
    CHECK(r.t_eval_alloc + r.t_exe_alloc == doctest::Approx(50.41));
}

TEST_CASE("real-time window check") {
    CHECK(check_realtime(0, 150, 150));
    CHECK_FALSE(check_realtime(0, 151, 150));
    CHECK_FALSE(check_realtime(5, 4, 150));
    CHECK(check_realtime(5, 5, 150));
}

TEST_CASE("braking kinematics") {
    const BrakingModel paper{20.0, 8.53, 7.63};
    CHECK(braking_distance(paper) == doctest::Approx(23.446).epsilon(0.001 / 23.446));
    CHECK(stopping_time(paper) == doctest::Approx(2.345).epsilon(0.001 / 2.345));

    CHECK(braking_distance({0.0, 8.53, 7.63}) == 0.0);
    CHECK(stopping_time({0.0, 8.53, 7.63}) == 0.0);
    CHECK(braking_distance({10.0, 5.0, 7.63}) == doctest::Approx(10.0));
    CHECK(stopping_time({10.0, 5.0, 7.63}) == doctest::Approx(2.0));
}

TEST_CASE("impact velocity reproduces the published latency table") {
    // latency ms -> m/s exactly as published; km/h kept unit-coherent at
    // 3.6x (the published km/h cells for 250, 300 and 400 ms contain small
    // arithmetic slips and are not reproduced).
    const std::array<std::pair<double, double>, 6> rows{{
        {150.0, 1.1445},
        {200.0, 1.526},
        {250.0, 1.9075},
        {300.0, 2.289},
        {350.0, 2.6705},
        {400.0, 3.052},
    }};
    for (const auto& [ms, mps] : rows) {
        const ImpactVelocity v = impact_velocity(ms);
        CHECK(v.mps == doctest::Approx(mps).epsilon(0.001 / mps));
        CHECK(v.kmh == doctest::Approx(3.6 * mps).epsilon(1e-9));
        // the table is exactly linear: every row's m/s over seconds is the
        // same fitted coefficient
        CHECK(mps / (ms / 1000.0) == doctest::Approx(7.63).epsilon(1e-9));
    }
    CHECK(impact_velocity(0.0).mps == 0.0);
    CHECK(impact_velocity(0.0).kmh == 0.0);
}

TEST_CASE("impact velocity is strictly increasing in latency") {
    double prev = -1.0;
    for (double ms = 0.0; ms <= 500.0; ms += 25.0) {
        const double v = impact_velocity(ms).mps;
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("deadline configuration") {
    CHECK(max_tolerable_latency() == doctest::Approx(150.0));
    LatencyConstants c{};
    c.t_max = 200.0;
    CHECK(max_tolerable_latency(c) == doctest::Approx(200.0));
    c.t_max = -1.0;
    CHECK_THROWS_AS(max_tolerable_latency(c), std::invalid_argument);
}
