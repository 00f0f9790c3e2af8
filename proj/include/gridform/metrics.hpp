#pragma once

// Post-processing of sampled traces into comparison quantities.

#include "gridform/scenario.hpp"

#include <string>
#include <vector>

namespace gridform::metrics {

/// Linear interpolation of y(t) at `time`; throws ConfigError outside the trace.
double value_at(const std::vector<double>& t, const std::vector<double>& y, double time);

/// Last sample strictly before `time` (the pre-event value for events applied at `time`).
double value_before(const std::vector<double>& t, const std::vector<double>& y, double time);

/// (f(t_event + window) - f(t_event)) / window.
double rocof(const std::vector<double>& t, const std::vector<double>& f, double t_event, double window);

/// Largest drop of v below its pre-event value within one cycle after the
/// event, in percent of the pre-event value. Rises count as zero.
double first_cycle_dip(const std::vector<double>& t, const std::vector<double>& v, double t_event, double f_n);

struct Settling {
    double time = 0.0;  ///< relative to t_event; horizon - t_event if never settled
    bool settled = true;
};

/// First time after t_event from which y stays within target +- band to the end.
Settling settling_time(const std::vector<double>& t, const std::vector<double>& y, double target, double band,
                       double t_event);

struct Extreme {
    double value = 0.0;  ///< signed deviation from the reference
    double time = 0.0;   ///< absolute
};

/// Largest |y - ref| over [t_from, t_to].
Extreme max_deviation(const std::vector<double>& t, const std::vector<double>& y, double ref, double t_from,
                      double t_to);

/// Root-mean-square of a - b over [t_from, t_to] (same time base required).
double rms_difference(const std::vector<double>& t, const std::vector<double>& a, const std::vector<double>& b,
                      double t_from, double t_to);

/// Steady frequency deviation [Hz] after a load change dp (pu on the grid
/// base) from the combined droop of the grid (1/R, grid base) and the device
/// (1/m_p on the device base, zero when it restores its own reference or has
/// no governor).
double droop_balance_frequency(const CaseParams& p, Device device, double dp_load);

struct MetricReport {
    std::string scenario;
    Device device = Device::Sc;
    double t_event = 0.0;
    double t_clear = 0.0;  ///< last scheduled event
    double p_initial = 0.0;
    double rocof_50ms = 0.0;
    double rocof_200ms = 0.0;
    double rocof_500ms = 0.0;
    double freq_extreme = 0.0;  ///< signed deviation [Hz]
    double freq_extreme_time = 0.0;
    double freq_final_deviation = 0.0;  ///< f_dev at the horizon minus pre-event [Hz]
    double freq_droop_oracle = 0.0;     ///< droop_balance_frequency for a load step, else 0 [Hz]
    double first_cycle_dip = 0.0;       ///< [%]
    double q_convergence_time = 0.0;    ///< Q into +-0.02 of its final value [s]
    double current_peak = 0.0;          ///< max |I| from the event to the horizon
    double fault_current_at_100ms = 0.0;
    double fault_current_at_150ms = 0.0;
    double v_lv_during_event = 0.0;     ///< mean |V_lv| from 20 ms after the event to t_clear
    double resync_time = 0.0;           ///< |f_dev - f_grid| into 0.1 Hz after t_clear
    bool resync_settled = true;
    double damping_settle_time = 0.0;   ///< P into +-0.05 of its final value after t_clear
    bool damping_settled = true;
    double h_equivalent = 0.0;          ///< inertia constant of the device [s]

    /// key = value lines.
    std::string to_text() const;
};

MetricReport compute_metrics(const Scenario& s, const TraceSet& tr);

struct Verdict {
    std::string name;
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct ComparisonSummary {
    std::string scenario;
    std::vector<std::pair<std::string, double>> deltas;  ///< metric(second) - metric(first)
    std::vector<Verdict> verdicts;

    bool pass() const;
    std::string to_text() const;
};

/// Positional comparison: relations are stated as "first vs second" and use
/// the device labels of the reports, so swapping the inputs negates every
/// strict-order verdict. Traces are needed for the overlay checks.
ComparisonSummary compare(const MetricReport& a, const MetricReport& b, const TraceSet& ta, const TraceSet& tb);

}  // namespace gridform::metrics
