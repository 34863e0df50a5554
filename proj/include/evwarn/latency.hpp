#pragma once

#include <stdexcept>

namespace evwarn {

/// Component timing constants, milliseconds. Defaults are the measured
/// values the end-to-end budget is solved against: CMOS readout 2 ms,
/// MJPEG encode 20 ms (so the sensor stage totals 22 ms), stream decode
/// 1 ms, detector inference 74.49 ms median / 79.02 ms mean / 11.53 std,
/// threat classification 0.90 ms median / 0.95 mean / 0.21 std, consumer
/// validation 1.2 ms. t_max is the occurrence-to-notification deadline.
struct LatencyConstants {
    double t_cmos = 2.0;
    double t_enc = 20.0;
    double t_dec = 1.0;
    double t_ai_mean = 79.02;
    double t_ai_median = 74.49;
    double t_ai_std = 11.53;
    double t_tc_mean = 0.95;
    double t_tc_median = 0.90;
    double t_tc_std = 0.21;
    double t_c = 1.2;
    double t_act = 0.0;
    double t_min = 0.0;
    double t_max = 150.0;
    double k_impact = 7.63;  // m/s per second of latency, fitted

    double t_s() const { return t_cmos + t_enc; }
    /// Median-based processing stage, the value the budget is solved with.
    double t_p() const { return t_dec + t_ai_median + t_tc_median; }
};

/// One end-to-end latency decomposition, milliseconds per stage.
struct TimingProfile {
    double t_s = 0.0;
    double t_eval = 0.0;
    double t_p = 0.0;
    double t_exe = 0.0;
    double t_c = 0.0;
    double t_act = 0.0;
};

/// Sum of the six stages. Throws std::domain_error for negative components.
double total_latency(const TimingProfile& p);

struct BudgetResult {
    double t_tot_target = 0.0;
    double compute_sum = 0.0;
    double network_allowance_total = 0.0;
    double t_eval_alloc = 0.0;
    double t_exe_alloc = 0.0;
};

struct BudgetInfeasible : std::runtime_error {
    explicit BudgetInfeasible(double deficit);
    double deficit_ms;
};

/// Subtract the computing stages from the total budget and split the
/// remaining network allowance between the two hops. The equal split
/// assumes sensor and consumer share a cell; pass a different `eval_share`
/// for asymmetric topologies. Throws BudgetInfeasible (carrying the
/// deficit) when the computing stages alone exceed the budget.
BudgetResult solve_network_budget(double t_tot, double t_s, double t_p,
                                  double t_c, double eval_share = 0.5);

/// Real-time constraint: t_min <= t_rt <= t_tot.
bool check_realtime(double t_min, double t_rt, double t_tot);

struct BrakingModel {
    double v = 20.0;        // m/s
    double a_b = 8.53;      // m/s^2, braking deceleration
    double k_impact = 7.63; // m/s^2, impact-velocity coefficient
};

/// v^2 / (2 a_b), meters.
double braking_distance(const BrakingModel& m);

/// v / a_b, seconds.
double stopping_time(const BrakingModel& m);

struct ImpactVelocity {
    double mps = 0.0;
    double kmh = 0.0;
};

/// Residual collision speed attributable to notification latency:
/// v = k_impact * latency_seconds.
ImpactVelocity impact_velocity(double latency_ms, double k_impact = 7.63);

/// The configured occurrence-to-notification deadline. Throws
/// std::invalid_argument when the configuration is not positive.
double max_tolerable_latency(const LatencyConstants& c = {});

}  // namespace evwarn
