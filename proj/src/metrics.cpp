#include "gridform/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gridform::metrics {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

constexpr double kTimeTol = 1e-9;

void check_trace(const std::vector<double>& t, const std::vector<double>& y) {
    require(!t.empty(), "empty trace");
    require(t.size() == y.size(), "trace channel length differs from the time base");
}

// Index range of samples with t in [from, to].
std::pair<std::size_t, std::size_t> window(const std::vector<double>& t, double from, double to) {
    const auto lo = std::lower_bound(t.begin(), t.end(), from - kTimeTol);
    const auto hi = std::upper_bound(t.begin(), t.end(), to + kTimeTol);
    return {static_cast<std::size_t>(lo - t.begin()), static_cast<std::size_t>(hi - t.begin())};
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

double value_at(const std::vector<double>& t, const std::vector<double>& y, double time) {
    check_trace(t, y);
    require(time >= t.front() - kTimeTol && time <= t.back() + kTimeTol,
            "time " + fmt(time) + " s is outside the trace [" + fmt(t.front()) + ", " + fmt(t.back()) + "]");
    auto it = std::lower_bound(t.begin(), t.end(), time - kTimeTol);
    std::size_t i = static_cast<std::size_t>(it - t.begin());
    if (i >= t.size()) i = t.size() - 1;
    if (std::abs(t[i] - time) <= kTimeTol || i == 0) return y[i];
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
}

double value_before(const std::vector<double>& t, const std::vector<double>& y, double time) {
    check_trace(t, y);
    auto it = std::lower_bound(t.begin(), t.end(), time - kTimeTol);
    require(it != t.begin(), "no sample before t = " + fmt(time) + " s");
    return y[static_cast<std::size_t>(it - t.begin()) - 1];
}

double rocof(const std::vector<double>& t, const std::vector<double>& f, double t_event, double window_s) {
    require(window_s > 0.0, "rocof window must be > 0");
    return (value_at(t, f, t_event + window_s) - value_at(t, f, t_event)) / window_s;
}

double first_cycle_dip(const std::vector<double>& t, const std::vector<double>& v, double t_event, double f_n) {
    require(f_n > 0.0, "nominal frequency must be > 0");
    check_trace(t, v);
    const double t_end = t_event + 1.0 / f_n;
    require(t.back() >= t_end - kTimeTol, "trace does not cover one cycle after the event");
    const double pre = value_before(t, v, t_event);
    require(pre > 0.0, "pre-event voltage must be > 0");
    const auto [lo, hi] = window(t, t_event, t_end);
    double dip = 0.0;
    for (std::size_t i = lo; i < hi; ++i) dip = std::max(dip, (pre - v[i]) / pre * 100.0);
    return dip;
}

Settling settling_time(const std::vector<double>& t, const std::vector<double>& y, double target, double band,
                       double t_event) {
    require(band > 0.0, "settling band must be > 0");
    check_trace(t, y);
    const auto [lo, hi] = window(t, t_event, t.back());
    require(lo < hi, "trace has no samples after the event");
    std::size_t last_out = hi;  // none
    for (std::size_t i = hi; i-- > lo;) {
        if (std::abs(y[i] - target) > band) {
            last_out = i;
            break;
        }
    }
    if (last_out == hi) return {std::max(0.0, t[lo] - t_event), true};
    if (last_out + 1 >= hi) return {t.back() - t_event, false};
    return {t[last_out + 1] - t_event, true};
}

Extreme max_deviation(const std::vector<double>& t, const std::vector<double>& y, double ref, double t_from,
                      double t_to) {
    check_trace(t, y);
    const auto [lo, hi] = window(t, t_from, t_to);
    require(lo < hi, "empty window for max_deviation");
    Extreme e{y[lo] - ref, t[lo]};
    for (std::size_t i = lo; i < hi; ++i) {
        if (std::abs(y[i] - ref) > std::abs(e.value)) e = {y[i] - ref, t[i]};
    }
    return e;
}

double rms_difference(const std::vector<double>& t, const std::vector<double>& a, const std::vector<double>& b,
                      double t_from, double t_to) {
    check_trace(t, a);
    check_trace(t, b);
    const auto [lo, hi] = window(t, t_from, t_to);
    require(lo < hi, "empty window for rms_difference");
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(hi - lo));
}

double droop_balance_frequency(const CaseParams& p, Device device, double dp_load) {
    double k = 1.0 / p.grid.r_droop;
    if (device == Device::Vsc && !p.vsc.tgf_mode) k += network::to_grid_base(1.0 / p.vsc.m_p, p.grid.scr);
    return -dp_load / k * p.network.f_n;
}

MetricReport compute_metrics(const Scenario& s, const TraceSet& tr) {
    const auto& t = tr.t;
    require(!t.empty(), "empty trace");
    const double f_n = s.params.network.f_n;
    const auto& f = tr.channel("f_dev");
    const auto& fg = tr.channel("f_grid");
    const auto& p = tr.channel("P_pcc");
    const auto& q = tr.channel("Q_pcc");
    const auto& i = tr.channel("Imag_pcc");
    const auto& vlv = tr.channel("Vmag_lv");

    MetricReport r;
    r.scenario = tr.scenario;
    r.device = tr.device;
    r.t_event = s.event_time();
    r.t_clear = s.events.empty() ? r.t_event : s.events.back().time;
    const double te = r.t_event;

    r.p_initial = value_before(t, p, te);
    r.rocof_50ms = rocof(t, f, te, 0.05);
    r.rocof_200ms = rocof(t, f, te, 0.2);
    r.rocof_500ms = rocof(t, f, te, 0.5);
    const double f_pre = value_before(t, f, te);
    const auto ext = max_deviation(t, f, f_pre, te, t.back());
    r.freq_extreme = ext.value;
    r.freq_extreme_time = ext.time;
    r.freq_final_deviation = f.back() - f_pre;
    if (s.kind == ScenarioKind::LoadStep) {
        r.freq_droop_oracle = droop_balance_frequency(s.params, s.device, s.params.scenario.load_step_dp);
    }
    r.first_cycle_dip = first_cycle_dip(t, tr.channel("Vmag_pcc"), te, f_n);
    r.q_convergence_time = settling_time(t, q, q.back(), 0.02, te).time;

    r.current_peak = max_deviation(t, i, 0.0, te, t.back()).value;
    r.fault_current_at_100ms = value_at(t, i, te + 0.1);
    r.fault_current_at_150ms = value_before(t, i, te + 0.15);

    const double v_from = te + 0.02;
    const double v_to = std::max(r.t_clear, te + 0.1);
    const auto [lo, hi] = window(t, v_from, v_to - 1e-6);
    double acc = 0.0;
    for (std::size_t k = lo; k < hi; ++k) acc += vlv[k];
    r.v_lv_during_event = hi > lo ? acc / static_cast<double>(hi - lo) : value_at(t, vlv, v_from);

    std::vector<double> slip(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) slip[k] = f[k] - fg[k];
    const auto rs = settling_time(t, slip, 0.0, 0.1, r.t_clear);
    r.resync_time = rs.time;
    r.resync_settled = rs.settled;
    const auto ds = settling_time(t, p, p.back(), 0.05, r.t_clear);
    r.damping_settle_time = ds.time;
    r.damping_settled = ds.settled;

    r.h_equivalent = s.device == Device::Sc ? s.params.sc.h
                                            : converter::equivalent_inertia(s.params.vsc.m_p, s.params.vsc.omega_c);
    return r;
}

std::string MetricReport::to_text() const {
    std::ostringstream o;
    auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
    kv("scenario", scenario);
    kv("device", to_string(device));
    kv("h_equivalent", fmt(h_equivalent));
    kv("t_event", fmt(t_event));
    kv("t_clear", fmt(t_clear));
    kv("p_initial", fmt(p_initial));
    kv("rocof_50ms", fmt(rocof_50ms));
    kv("rocof_200ms", fmt(rocof_200ms));
    kv("rocof_500ms", fmt(rocof_500ms));
    kv("freq_extreme", fmt(freq_extreme));
    kv("freq_extreme_time", fmt(freq_extreme_time));
    kv("freq_final_deviation", fmt(freq_final_deviation));
    kv("freq_droop_oracle", fmt(freq_droop_oracle));
    kv("first_cycle_dip", fmt(first_cycle_dip));
    kv("q_convergence_time", fmt(q_convergence_time));
    kv("current_peak", fmt(current_peak));
    kv("fault_current_at_100ms", fmt(fault_current_at_100ms));
    kv("fault_current_at_150ms", fmt(fault_current_at_150ms));
    kv("v_lv_during_event", fmt(v_lv_during_event));
    kv("resync_time", fmt(resync_time));
    kv("resync_settled", resync_settled ? "true" : "false");
    kv("damping_settle_time", fmt(damping_settle_time));
    kv("damping_settled", damping_settled ? "true" : "false");
    return o.str();
}

bool ComparisonSummary::pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::string ComparisonSummary::to_text() const {
    std::ostringstream o;
    o << "scenario = " << scenario << '\n';
    for (const auto& [k, v] : deltas) o << "delta." << k << " = " << fmt(v) << '\n';
    for (const auto& v : verdicts) {
        o << "verdict." << v.name << " = " << (v.pass ? "pass" : "fail") << " (" << fmt(v.lhs) << " vs "
          << fmt(v.rhs) << ")\n";
    }
    o << "overall = " << (pass() ? "pass" : "fail") << '\n';
    return o.str();
}

ComparisonSummary compare(const MetricReport& a, const MetricReport& b, const TraceSet& ta, const TraceSet& tb) {
    require(a.scenario == b.scenario, "cannot compare reports of different scenarios");
    require(ta.scenario == a.scenario && tb.scenario == b.scenario, "traces do not match the reports");
    require(ta.t == tb.t, "traces must share the same time base");

    ComparisonSummary s;
    s.scenario = a.scenario;
    auto delta = [&](const char* k, double va, double vb) { s.deltas.emplace_back(k, vb - va); };
    delta("p_initial", a.p_initial, b.p_initial);
    delta("rocof_50ms", a.rocof_50ms, b.rocof_50ms);
    delta("rocof_200ms", a.rocof_200ms, b.rocof_200ms);
    delta("rocof_500ms", a.rocof_500ms, b.rocof_500ms);
    delta("freq_extreme", a.freq_extreme, b.freq_extreme);
    delta("freq_final_deviation", a.freq_final_deviation, b.freq_final_deviation);
    delta("first_cycle_dip", a.first_cycle_dip, b.first_cycle_dip);
    delta("q_convergence_time", a.q_convergence_time, b.q_convergence_time);
    delta("current_peak", a.current_peak, b.current_peak);
    delta("fault_current_at_100ms", a.fault_current_at_100ms, b.fault_current_at_100ms);
    delta("fault_current_at_150ms", a.fault_current_at_150ms, b.fault_current_at_150ms);
    delta("v_lv_during_event", a.v_lv_during_event, b.v_lv_during_event);
    delta("resync_time", a.resync_time, b.resync_time);
    delta("damping_settle_time", a.damping_settle_time, b.damping_settle_time);

    const std::string A = to_string(a.device);
    const std::string B = to_string(b.device);
    auto less = [&](const std::string& metric, double va, double vb) {
        s.verdicts.push_back({metric + ":" + A + "<" + B, va < vb, va, vb});
    };
    const double te = a.t_event;
    if (a.scenario == "load_step") {
        const double rms = rms_difference(ta.t, ta.channel("P_pcc"), tb.channel("P_pcc"), te + 0.5, te + 5.0);
        s.verdicts.push_back({"P_pcc_rms_difference<0.05", rms < 0.05, rms, 0.05});
        less("abs_rocof_50ms", std::abs(a.rocof_50ms), std::abs(b.rocof_50ms));
        const double r5 = std::abs(a.rocof_500ms - b.rocof_500ms) /
                          std::max(std::abs(a.rocof_500ms), std::abs(b.rocof_500ms));
        s.verdicts.push_back({"rocof_500ms_relative_difference<0.1", r5 < 0.1, r5, 0.1});
        for (const auto* r : {&a, &b}) {
            const double rel = std::abs(r->freq_final_deviation - r->freq_droop_oracle) / std::abs(r->freq_droop_oracle);
            s.verdicts.push_back({std::string("freq_final_deviation_within_20pct_of_droop_balance:") +
                                      to_string(r->device),
                                  rel <= 0.2, r->freq_final_deviation, r->freq_droop_oracle});
        }
    } else if (a.scenario == "voltage_dip") {
        less("first_cycle_dip", a.first_cycle_dip, b.first_cycle_dip);
        const auto& qa = ta.channel("Q_pcc");
        const auto& qb = tb.channel("Q_pcc");
        std::vector<double> dq(qa.size());
        for (std::size_t k = 0; k < qa.size(); ++k) dq[k] = qa[k] - qb[k];
        const double worst = std::abs(max_deviation(ta.t, dq, 0.0, te + 0.15, ta.t.back()).value);
        s.verdicts.push_back({"Q_pcc_difference_after_150ms<=0.02", worst <= 0.02, worst, 0.02});
    } else if (a.scenario == "fault_3ph") {
        s.verdicts.push_back({"v_lv_during_event:" + B + "<" + A, b.v_lv_during_event < a.v_lv_during_event,
                              b.v_lv_during_event, a.v_lv_during_event});
        s.verdicts.push_back({"abs_freq_extreme:" + B + "<" + A, std::abs(b.freq_extreme) < std::abs(a.freq_extreme),
                              std::abs(b.freq_extreme), std::abs(a.freq_extreme)});
        s.verdicts.push_back({"resync_time:" + B + "<damping_settle_time:" + A,
                              b.resync_time < a.damping_settle_time, b.resync_time, a.damping_settle_time});
    }
    return s;
}

}  // namespace gridform::metrics
