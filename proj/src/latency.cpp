#include "evwarn/latency.hpp"

#include <string>

namespace evwarn {

double total_latency(const TimingProfile& p) {
    for (double v : {p.t_s, p.t_eval, p.t_p, p.t_exe, p.t_c, p.t_act}) {
        if (!(v >= 0.0)) {
            throw std::domain_error("total_latency: stage components must be >= 0");
        }
    }
    return p.t_s + p.t_eval + p.t_p + p.t_exe + p.t_c + p.t_act;
}

BudgetInfeasible::BudgetInfeasible(double deficit)
    : std::runtime_error("network budget infeasible: computing stages exceed the total by " +
                         std::to_string(deficit) + " ms"),
      deficit_ms(deficit) {}

BudgetResult solve_network_budget(double t_tot, double t_s, double t_p,
                                  double t_c, double eval_share) {
    if (!(eval_share > 0.0 && eval_share < 1.0)) {
        throw std::invalid_argument("solve_network_budget: eval_share must be in (0, 1)");
    }
    for (double v : {t_s, t_p, t_c}) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument("solve_network_budget: stage times must be >= 0");
        }
    }
    const double compute = t_s + t_p + t_c;
    const double allowance = t_tot - compute;
    if (!(allowance > 0.0)) {
        throw BudgetInfeasible(compute - t_tot);
    }
    return BudgetResult{t_tot, compute, allowance, allowance * eval_share,
                        allowance * (1.0 - eval_share)};
}

bool check_realtime(double t_min, double t_rt, double t_tot) {
    if (t_min < 0.0 || t_rt < 0.0 || t_tot < 0.0) {
        throw std::invalid_argument("check_realtime: times must be >= 0");
    }
    return t_min <= t_rt && t_rt <= t_tot;
}

double braking_distance(const BrakingModel& m) {
    if (!(m.a_b > 0.0)) {
        throw std::invalid_argument("braking_distance: deceleration must be positive");
    }
    if (m.v < 0.0) {
        throw std::invalid_argument("braking_distance: speed must be >= 0");
    }
    return m.v * m.v / (2.0 * m.a_b);
}

double stopping_time(const BrakingModel& m) {
    if (!(m.a_b > 0.0)) {
        throw std::invalid_argument("stopping_time: deceleration must be positive");
    }
    if (m.v < 0.0) {
        throw std::invalid_argument("stopping_time: speed must be >= 0");
    }
    return m.v / m.a_b;
}

ImpactVelocity impact_velocity(double latency_ms, double k_impact) {
    if (latency_ms < 0.0) {
        throw std::invalid_argument("impact_velocity: latency must be >= 0");
    }
    const double mps = k_impact * latency_ms / 1000.0;
    return ImpactVelocity{mps, 3.6 * mps};
}

double max_tolerable_latency(const LatencyConstants& c) {
    if (!(c.t_max > 0.0)) {
        throw std::invalid_argument("max_tolerable_latency: t_max must be positive");
    }
    return c.t_max;
}

}  // namespace evwarn
