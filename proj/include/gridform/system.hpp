#pragma once

// One device (SC or VSC) connected through the step-up transformer to the
// PCC and the equivalent grid. The continuous states of all components live
// in one flat vector; controllers are held between samples.

#include "gridform/parameters.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gridform {

enum class Device { Sc, Vsc };

const char* to_string(Device d);
Device parse_device(std::string_view s);

/// Instantaneous values of the recorded channels (pu unless noted).
struct Outputs {
    double p_pcc = 0.0;  ///< device power delivered to the PCC
    double q_pcc = 0.0;
    double f_dev = 0.0;  ///< [Hz]
    double f_grid = 0.0; ///< [Hz]
    double vmag_pcc = 0.0;
    double vmag_lv = 0.0;
    double imag_pcc = 0.0;
    double vdc = 0.0;    ///< NaN for the SC
    double delta = 0.0;  ///< rotor angle vs the grid source [rad]; NaN for the VSC

    // Diagnostics, not part of the CSV contract.
    double p_grid = 0.0;   ///< source power, pu on S_n
    double p_branches = 0.0;
    double p_load = 0.0;
    double p_fault = 0.0;
    double e_fd = 0.0;
    double kinetic_energy = 0.0;  ///< SC: H omega^2 [pu*s]
    double air_gap_power = 0.0;
    bool current_limited = false;
    double imag_conv = 0.0;  ///< converter-side current magnitude, VSC only
};

/// Initial values of every state and controller at one operating point.
struct InitialCondition {
    network::PowerFlowResult power_flow;
    std::vector<double> x;
    machine::AvrState avr;
    converter::VscControl vsc;
};

class System {
public:
    System(const CaseParams& params, Device device);

    Device device() const { return device_; }
    const CaseParams& params() const { return params_; }
    std::shared_ptr<const numerics::StateLayout> layout() const { return layout_; }
    std::size_t size() const { return layout_->size(); }

    /// Power flow plus device back-solve at the configured operating point.
    InitialCondition steady_state() const;
    void load(const InitialCondition& ic);

    const network::Conditions& conditions() const { return cond_; }
    void apply(const network::Event& e);

    /// Sample the controllers from the plant state; outputs are then held.
    void control(std::span<const double> x, double dt);

    void derivatives(std::span<const double> x, std::span<double> dx) const;
    Outputs outputs(std::span<const double> x) const;

    /// Resolved TVI gain (VSC), from the configuration or the static calibration.
    double tvi_gain() const { return k_v_; }

    const machine::AvrState& avr() const { return avr_; }
    const converter::VscControl& vsc_control() const { return vsc_; }

private:
    struct Eval;
    Eval evaluate(std::span<const double> x, std::span<double>* dx) const;

    CaseParams params_;
    Device device_;
    std::shared_ptr<numerics::StateLayout> layout_;
    machine::ScModel sc_model_;
    network::Branch transformer_;
    double k_v_ = 0.0;

    network::Conditions cond_;
    machine::AvrState avr_;
    converter::VscControl vsc_;

    // Indices of the common states.
    std::size_t i_dw_, i_llx_, i_theta_g_, i_ig_d_, i_ig_q_;
    // Device states start here.
    std::size_t i_dev_;
};

/// Impedance of the faulted PCC node: grid branch in parallel with the load
/// and the fault shunt.
Dq fault_thevenin_impedance(const CaseParams& p);

}  // namespace gridform
