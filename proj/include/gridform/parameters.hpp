#pragma once

// Complete parameter set for one study case plus the dotted-key registry used
// by the configuration file, CLI overrides and provenance headers.

#include "gridform/converter.hpp"
#include "gridform/machine.hpp"
#include "gridform/network.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridform {

struct ScenarioSettings {
    double event_time = 1.0;
    double dt = 50e-6;
    /// Controller sample period; 0 ("auto") takes the smallest multiple of dt not below 50 us.
    /// Keeping it fixed makes the discrete controllers independent of the integration step.
    double control_period = 0.0;
    double soak = 5.0;
    int sample_stride = 10;
    double frame_angle = 0.0;

    double load_step_dp = -0.4;  ///< pu on S_n,grid
    double load_step_horizon = 10.0;
    double voltage_dip_dv = -0.05;
    double voltage_dip_horizon = 10.0;
    double fault_duration = 0.15;
    double fault_horizon = 6.0;
};

/// Integration steps per controller sample.
int control_substeps(const ScenarioSettings& s);
/// Controller sample period in seconds.
double control_period(const ScenarioSettings& s);

struct CaseParams {
    network::NetworkCase network;
    network::GridParams grid;
    bool grid_pg0_auto = true;  ///< P_g0 taken from the initial power flow
    machine::ScParams sc;
    machine::AvrParams avr;
    converter::VscParams vsc;
    ScenarioSettings scenario;
};

/// Throws ConfigError naming the offending key and constraint.
void validate(const CaseParams& p);

/// Set one dotted key ("vsc.mp", "grid.scr", "scenario.load_step.dp", ...).
/// Unknown keys raise ConfigError listing the valid ones.
void set_parameter(CaseParams& p, std::string_view key, std::string_view value);

/// All keys with their current values, in registry order.
std::vector<std::pair<std::string, std::string>> list_parameters(const CaseParams& p);

std::vector<std::string> parameter_keys();

/// Shortest round-trippable decimal representation.
std::string format_double(double v);

}  // namespace gridform
