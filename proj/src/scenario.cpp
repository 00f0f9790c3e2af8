#include "gridform/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gridform {

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::LoadStep: return "load_step";
        case ScenarioKind::VoltageDip: return "voltage_dip";
        case ScenarioKind::Fault3ph: return "fault_3ph";
    }
    return "unknown";
}

ScenarioKind parse_scenario(std::string_view name) {
    if (name == "load_step") return ScenarioKind::LoadStep;
    if (name == "voltage_dip") return ScenarioKind::VoltageDip;
    if (name == "fault_3ph") return ScenarioKind::Fault3ph;
    throw ConfigError("unknown scenario '" + std::string(name) + "' (expected load_step, voltage_dip or fault_3ph)");
}

const std::vector<double>& TraceSet::channel(std::string_view name) const {
    if (auto it = channels.find(std::string(name)); it != channels.end()) return it->second;
    if (auto it = diagnostics.find(std::string(name)); it != diagnostics.end()) return it->second;
    throw ConfigError("trace has no channel '" + std::string(name) + "'");
}

bool TraceSet::has(std::string_view name) const {
    return channels.count(std::string(name)) > 0 || diagnostics.count(std::string(name)) > 0;
}

Scenario build_scenario(ScenarioKind kind, Device device, const Overrides& overrides, CaseParams base) {
    for (const auto& [k, v] : overrides) set_parameter(base, k, v);
    validate(base);

    Scenario s;
    s.kind = kind;
    s.device = device;
    s.params = base;
    const auto& sc = base.scenario;
    using network::Event;
    using network::EventKind;
    switch (kind) {
        case ScenarioKind::LoadStep:
            s.events = {Event{sc.event_time, EventKind::LoadStep, sc.load_step_dp}};
            s.horizon = sc.load_step_horizon;
            break;
        case ScenarioKind::VoltageDip:
            s.events = {Event{sc.event_time, EventKind::VoltageStep, sc.voltage_dip_dv}};
            s.horizon = sc.voltage_dip_horizon;
            break;
        case ScenarioKind::Fault3ph:
            s.events = {Event{sc.event_time, EventKind::FaultOn, 0.0},
                        Event{sc.event_time + sc.fault_duration, EventKind::FaultOff, 0.0}};
            s.horizon = sc.fault_horizon;
            break;
    }
    validate(s);
    return s;
}

namespace {

long step_index(double t, double dt) {
    const double k = std::round(t / dt);
    if (std::abs(k * dt - t) > 1e-9) {
        std::ostringstream msg;
        msg << "event time " << t << " s is not a multiple of dt = " << dt << " s";
        throw ConfigError(msg.str());
    }
    return static_cast<long>(k);
}

// Shared fixed-step loop: events -> control sample -> record -> integrate.
class Stepper {
public:
    Stepper(System& sys, const ScenarioSettings& set)
        : sys_(sys), period_(control_period(set)), every_(control_substeps(set)),
          integ_({set.dt, numerics::Method::Rk4}, sys.layout()) {
        f_ = [this](double, std::span<const double> x, std::span<double> dx) { sys_.derivatives(x, dx); };
    }

    // controllers run on their own period, held between samples
    void control(std::span<const double> x, long k) {
        if (k % every_ == 0) sys_.control(x, period_);
    }
    void integrate(std::span<double> x, double t) { integ_.step(f_, x, t); }

private:
    System& sys_;
    double period_;
    long every_;
    numerics::FixedStepIntegrator integ_;
    numerics::DerivativeFn f_;
};

std::vector<double> drift_signals(const Outputs& o, double f_n) {
    return {o.p_pcc, o.q_pcc, o.f_dev / f_n, o.f_grid / f_n, o.vmag_pcc, o.vmag_lv, o.imag_pcc};
}

std::string at_time(double t, const std::string& what) {
    std::ostringstream msg;
    msg << "t = " << t << " s: " << what;
    return msg.str();
}

}  // namespace

void validate(const Scenario& s) {
    validate(s.params);
    network::validate_events(s.events);
    const double dt = s.dt();
    for (const auto& e : s.events) {
        step_index(e.time, dt);
        if (e.time >= s.horizon) throw ConfigError("horizon must exceed the last event time");
    }
    if (s.horizon <= 0.0) throw ConfigError("horizon must be > 0");
}

SimState init_system(const Scenario& s) {
    System sys(s.params, s.device);
    const auto ic = sys.steady_state();
    sys.load(ic);
    SimState st{sys, ic.x, {}, ic.power_flow};

    const double dt = s.dt();
    const double f_n = s.params.network.f_n;
    const long n = static_cast<long>(std::llround(s.params.scenario.soak / dt));
    Stepper stepper(st.system, s.params.scenario);
    std::vector<double> ref;
    try {
        for (long k = 0; k < n; ++k) {
            stepper.control(st.x, k);
            const auto sig = drift_signals(st.system.outputs(st.x), f_n);
            if (ref.empty()) ref = sig;
            for (std::size_t i = 0; i < sig.size(); ++i) {
                st.soak.max_drift = std::max(st.soak.max_drift, std::abs(sig[i] - ref[i]));
            }
            stepper.integrate(st.x, k * dt);
        }
    } catch (const NumericalError& e) {
        throw InitError(std::string("soak diverged: ") + e.what());
    }
    st.soak.duration = n * dt;

    std::vector<double> dx(st.x.size());
    st.system.derivatives(st.x, dx);
    for (double v : dx) st.soak.residual = std::max(st.soak.residual, std::abs(v));
    return st;
}

TraceSet run(const Scenario& s, SimState state) {
    validate(s);
    auto& sys = state.system;
    auto& x = state.x;
    const double dt = s.dt();
    const int stride = s.params.scenario.sample_stride;
    const long n = static_cast<long>(std::llround(s.horizon / dt));

    std::vector<std::pair<long, network::Event>> events;
    for (const auto& e : s.events) events.emplace_back(step_index(e.time, dt), e);

    TraceSet tr;
    tr.scenario = s.name();
    tr.device = s.device;
    tr.event_time = s.event_time();
    tr.dt = dt;
    tr.sample = dt * stride;
    const bool sc = s.device == Device::Sc;
    const std::size_t cap = static_cast<std::size_t>(n / stride + 1);
    tr.t.reserve(cap);
    for (std::size_t c = 1; c < kChannelOrder.size(); ++c) {
        const std::string name = kChannelOrder[c];
        if ((name == "Vdc" && sc) || (name == "delta" && !sc)) continue;
        tr.channels[name].reserve(cap);
    }
    auto& ch = tr.channels;
    auto& dg = tr.diagnostics;

    Stepper stepper(sys, s.params.scenario);
    std::size_t next_event = 0;
    for (long k = 0; k <= n; ++k) {
        const double t = k * dt;
        try {
            while (next_event < events.size() && events[next_event].first == k) {
                sys.apply(events[next_event].second);
                ++next_event;
            }
            stepper.control(x, k);
            if (k % stride == 0) {
                const auto o = sys.outputs(x);
                tr.t.push_back(t);
                ch["P_pcc"].push_back(o.p_pcc);
                ch["Q_pcc"].push_back(o.q_pcc);
                ch["f_dev"].push_back(o.f_dev);
                ch["f_grid"].push_back(o.f_grid);
                ch["Vmag_pcc"].push_back(o.vmag_pcc);
                ch["Vmag_lv"].push_back(o.vmag_lv);
                ch["Imag_pcc"].push_back(o.imag_pcc);
                if (sc) {
                    ch["delta"].push_back(o.delta);
                    dg["e_fd"].push_back(o.e_fd);
                    dg["kinetic_energy"].push_back(o.kinetic_energy);
                    dg["air_gap_power"].push_back(o.air_gap_power);
                } else {
                    ch["Vdc"].push_back(o.vdc);
                    dg["current_limited"].push_back(o.current_limited ? 1.0 : 0.0);
                    dg["I_conv"].push_back(o.imag_conv);
                }
                dg["P_grid"].push_back(o.p_grid);
                dg["P_branches"].push_back(o.p_branches);
                dg["P_load"].push_back(o.p_load);
                dg["P_fault"].push_back(o.p_fault);
            }
            if (k < n) stepper.integrate(x, t);
        } catch (const NumericalError& e) {
            throw NumericalError(at_time(t, e.what()));
        }
    }
    return tr;
}

TraceSet simulate(const Scenario& s) { return run(s, init_system(s)); }

}  // namespace gridform
