#pragma once

// Equivalent grid (inertial frequency-response source behind R_g-L_g),
// step-up transformer branch, PCC load and fault shunt.
//
// All network quantities are per unit on the device base S_n in a common dq
// frame rotating at nominal speed. The grid frequency model works on the
// grid base S_n,grid = SCR * S_n; conversions happen at the interface.

#include "gridform/numerics.hpp"

#include <vector>

namespace gridform::network {

struct GridImpedance {
    double x = 0.0;  ///< pu on S_n
    double r = 0.0;
};

/// |Z_g| = 1/scr split with the given X/R ratio.
GridImpedance scr_to_impedance(double scr, double x_over_r);

struct GridParams {
    double h_g = 5.0;       ///< [s] on S_n,grid
    double r_droop = 0.04;  ///< pu/pu
    double t_n = 1.0;
    double t_d = 6.0;
    double p_g0 = 0.5;      ///< pu on S_n,grid
    double scr = 3.0;
    double x_over_r = 10.0;
    double v_g = 0.0;       ///< source amplitude; <= 0 selects flat-device initialization
};

void validate(const GridParams& p);

struct GridState {
    double delta_omega = 0.0;
    double leadlag_x = 0.0;  ///< lag part of the lead-lag, continuous form
    double theta = 0.0;      ///< source angle vs the nominal frame [rad]
};

struct GridDerivatives {
    GridState d;
    double leadlag_out = 0.0;
};

/// 2 H_g d(dw)/dt = LL(P_g0 - P_g) - dw/R, with LL = (1 + s T_N)/(1 + s T_D)
/// realized as T_N/T_D * u + (1 - T_N/T_D) * x, dx/dt = (u - x)/T_D.
/// `p_g` on the grid base, positive from source into network.
GridDerivatives grid_frequency_derivatives(const GridState& s, const GridParams& p, double p_g, double omega_base);

inline double to_grid_base(double p_device_base, double scr) { return p_device_base / scr; }
inline double to_device_base(double p_grid_base, double scr) { return p_grid_base * scr; }

struct NetworkCase {
    double s_n = 1e6;    ///< [VA]
    double u_n = 606.0;  ///< [V] line-to-line RMS
    double f_n = 50.0;   ///< [Hz]
    double x_tr = 0.15;
    double r_tr = 0.005;
    double load_p = 0.5;  ///< pu on S_n,grid (initial value)
    double load_q = 0.0;  ///< pu on S_n,grid, positive inductive
    double r_fault = 0.001;

    double omega_base() const;
};

void validate(const NetworkCase& c);

struct Branch {
    double r = 0.0;
    double x = 0.0;
};

/// di/dt for x/w_b di/dt = v_from - v_to - r i - j x i (frame at nominal speed).
Dq branch_derivative(const Branch& b, Dq v_from, Dq v_to, Dq i, double omega_base);

/// Time-varying network conditions changed by events.
struct Conditions {
    double load_p = 0.0;  ///< pu on S_n,grid
    double load_q = 0.0;
    double v_g = 1.0;
    bool fault_on = false;
};

/// Constant-impedance load admittance at nominal voltage, device base.
Dq load_admittance(const Conditions& c, double scr);

/// Total PCC shunt admittance (load plus fault when applied).
Dq shunt_admittance(const Conditions& c, const NetworkCase& nc, double scr);

/// PCC voltage from the current balance of the shunt group. `i_in` is the
/// sum of branch currents flowing into the PCC.
Dq pcc_voltage(Dq i_in, Dq y_shunt);

struct NetworkEval {
    Dq v_pcc;
    Dq v_source;
    Dq di_grid;        ///< derivative of the grid-branch current (source -> PCC)
    double p_grid = 0.0;  ///< source power, pu on S_n
    double p_load = 0.0;
    double p_fault = 0.0;
};

/// Evaluate the PCC node and grid branch. `i_device` flows from the device
/// side of the transformer into the PCC; `i_grid` from the source into the PCC.
NetworkEval network_step(Dq i_device, Dq i_grid, const GridState& grid, const Conditions& cond,
                         const NetworkCase& nc, const GridParams& gp);

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

/// SetpointStep changes the device voltage setpoint, not the network.
enum class EventKind { LoadStep, VoltageStep, FaultOn, FaultOff, SetpointStep };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::LoadStep;
    double value = 0.0;  ///< load step: delta P [pu S_n,grid]; voltage/setpoint step: relative change
};

const char* to_string(EventKind k);

Conditions apply_event(Conditions c, const Event& e);

/// Time-ordered, no fault-on while faulted, no fault-off while healthy.
void validate_events(const std::vector<Event>& events, bool initially_faulted = false);

// ---------------------------------------------------------------------------
// Phasor power flow of the radial circuit
// ---------------------------------------------------------------------------

struct PowerFlowResult {
    Dq v_lv;      ///< device-side transformer terminal
    Dq v_pcc;
    Dq v_source;  ///< grid source phasor (angle defines the frame)
    Dq i_device;  ///< transformer current LV -> PCC
    Dq i_grid;    ///< grid branch current source -> PCC
    double p_device = 0.0;
    double q_device = 0.0;
    double p_grid = 0.0;  ///< pu on S_n
};

/// Device bus controls |V_lv| = v_lv_mag and injects p_device. If
/// `v_source_mag` <= 0 the source amplitude is chosen so the device injects
/// `q_device_flat` (flat start); otherwise the device reactive power is solved
/// for. The result is rotated by `frame_angle` (source at angle frame_angle).
PowerFlowResult solve_power_flow(const NetworkCase& nc, const GridParams& gp, const Conditions& cond,
                                 double v_lv_mag, double p_device, double q_device_flat,
                                 double v_source_mag, double frame_angle = 0.0);

}  // namespace gridform::network
