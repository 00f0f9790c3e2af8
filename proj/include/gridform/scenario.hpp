#pragma once

// The three comparison experiments: scenario assembly, steady-state
// initialization with a discarded soak, and the fixed-step run loop.

#include "gridform/system.hpp"

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridform {

enum class ScenarioKind { LoadStep, VoltageDip, Fault3ph };

const char* to_string(ScenarioKind k);
ScenarioKind parse_scenario(std::string_view name);

using Overrides = std::vector<std::pair<std::string, std::string>>;

struct Scenario {
    ScenarioKind kind = ScenarioKind::LoadStep;
    Device device = Device::Sc;
    CaseParams params;
    std::vector<network::Event> events;
    double horizon = 10.0;

    std::string name() const { return to_string(kind); }
    double dt() const { return params.scenario.dt; }
    double event_time() const { return params.scenario.event_time; }
};

/// Paper-default case with `overrides` (dotted keys) applied on top of `base`.
Scenario build_scenario(ScenarioKind kind, Device device, const Overrides& overrides = {}, CaseParams base = {});

/// Time ordering, fault pairing, horizon and step-boundary alignment of events.
void validate(const Scenario& s);

/// CSV column order; Vdc is empty for the SC and delta for the VSC.
inline constexpr std::array<const char*, 10> kChannelOrder = {
    "t", "P_pcc", "Q_pcc", "f_dev", "f_grid", "Vmag_pcc", "Vmag_lv", "Imag_pcc", "Vdc", "delta"};

struct TraceSet {
    std::string scenario;
    Device device = Device::Sc;
    double event_time = 0.0;
    double dt = 0.0;      ///< integration step
    double sample = 0.0;  ///< sampling interval
    std::vector<double> t;
    std::map<std::string, std::vector<double>> channels;     ///< contract channels except t
    std::map<std::string, std::vector<double>> diagnostics;  ///< extra signals for checks

    const std::vector<double>& channel(std::string_view name) const;
    bool has(std::string_view name) const;
    std::size_t size() const { return t.size(); }
};

struct SoakReport {
    double duration = 0.0;
    double max_drift = 0.0;      ///< largest channel change over the soak [pu, f in pu]
    double residual = 0.0;       ///< max |dx/dt| at the end of the soak
};

struct SimState {
    System system;
    std::vector<double> x;
    SoakReport soak;
    network::PowerFlowResult power_flow;
};

/// Power flow -> device back-solve -> discarded soak of `soak` seconds.
SimState init_system(const Scenario& s);

/// Fixed-step run from an initialized state. NumericalError messages carry
/// the simulated time of the failure.
TraceSet run(const Scenario& s, SimState state);

/// init_system + run.
TraceSet simulate(const Scenario& s);

}  // namespace gridform
