#pragma once

// Grid-forming VSC: averaged bridge behind an LCL filter (the grid-side
// inductance is the step-up transformer), cascaded voltage/current loops,
// filtered droop with optional frequency-reference restoration, threshold
// virtual impedance and a DC link fed by a controlled current source.
//
// Controllers are sampled once per step and held (zero-order hold); the LCL
// and DC capacitor are continuous states integrated with the rest of the
// system.

#include "gridform/network.hpp"
#include "gridform/numerics.hpp"

namespace gridform::converter {

struct TviParams {
    double i_thr = 1.0;
    double i_max = 1.1;
    double sigma_xr = 5.0;
    double k_v = 0.0;  ///< <= 0 selects calibration against the static fault circuit
};

struct VscParams {
    double m_p = 0.04;
    double n_q = 0.0;
    double omega_c = 2.5;   ///< droop filter cutoff [rad/s]
    double tau_gf = 0.1;    ///< restoration time constant [s]
    bool tgf_mode = true;
    double p_set = 0.0;
    double q_set = 0.0;
    double omega_set = 1.0;
    double v_set = 1.0;

    double l_f = 0.15;
    double c_f = 0.066;
    double r_f = 0.005;

    TviParams tvi;

    double c_dc = 0.25;  ///< DC capacitance [pu*s]: C_dc dV_dc/dt = i_dc - p_ac/V_dc
    double t_dc = 0.006;
    double v_dc_ref = 1.0;
    double so_a = 2.0;   ///< symmetrical-optimum symmetry factor

    bool leadlag_enabled = true;
    double ll_tn = 0.2;   ///< phase lead on the power measure damps the synchronizing mode
    double ll_td = 0.02;

    double f_current = 500.0;  ///< current-loop design bandwidth [Hz]
    double f_voltage = 100.0;  ///< voltage-loop design bandwidth [Hz]
    double v_zero_ratio = 40.0;  ///< voltage PI zero sits this factor below the bandwidth
    double k_ff = 1.0;         ///< grid-side current feedforward gain
    double m_max = 1.25;       ///< max |e| per pu V_dc
    double r_ad = 0.5;         ///< capacitor-current active damping gain [pu]
    double r_d = 0.6;          ///< passive damping resistor in series with C_f [pu]
    bool grid_side_limit = true;  ///< also bound the grid-side current implied by i_ref
    // Off by default: it makes the LV voltage settle in ~10 ms but also stiffens
    // the first cycle after a grid dip well below what a VSC shows in practice.
    double k_dff = 0.0;        ///< current-reference derivative feedforward (L_f di_ref/dt)
    double dff_rate_max = 50.0;   ///< [pu/s] bound on di_ref/dt used by that feedforward
};

void validate(const VscParams& p);

/// H = 1/(2 m_p w_c).
double equivalent_inertia(double m_p, double omega_c);
/// K_d = 1/m_p.
double equivalent_damping(double m_p);

struct PiGains {
    double kp = 0.0;
    double ki = 0.0;
};

/// kp = C/(a t), ki = C/(a^3 t^2).
PiGains symmetrical_optimum_gains(double c_dc, double t_dc, double a = 2.0);

struct InnerGains {
    PiGains current;
    PiGains voltage;
};

/// Current loop cancels the R-L pole and closes at f_current; voltage loop
/// closes at f_voltage on the C_f integrator with its zero v_zero_ratio
/// below the bandwidth.
InnerGains design_inner_loops(const VscParams& p, double omega_base);

struct TviOutput {
    double r_v = 0.0;
    double x_v = 0.0;
};

/// r_v = k_v max(0, i - i_thr), x_v = sigma_xr r_v.
TviOutput tvi(double i_mag, const TviParams& p);

/// Steady fault current with a bolted PCC fault for a given k_v, assuming the
/// voltage loop tracks the TVI-reduced reference.
double static_fault_current(const VscParams& p, double k_v, const network::Branch& transformer,
                            Dq z_pcc_thevenin);

/// Bisection on k_v so that static_fault_current == i_max.
double calibrate_tvi_gain(const VscParams& p, const network::Branch& transformer, Dq z_pcc_thevenin);

// ---------------------------------------------------------------------------
// Discrete control state
// ---------------------------------------------------------------------------

struct DcControl {
    numerics::PiState pi;
    numerics::BlockState source_lag;  ///< i_dc,source
};

struct VscControl {
    numerics::BlockState p_leadlag;
    numerics::BlockState droop_lpf;
    numerics::BlockState q_lpf;
    double omega_set_state = 1.0;
    double omega_vsc = 1.0;
    double v_mag_ref = 1.0;
    double p_meas = 0.0;
    double q_meas = 0.0;
    numerics::PiState v_pi_d, v_pi_q;
    numerics::PiState i_pi_d, i_pi_q;
    Dq i_ref;        ///< converter frame
    Dq e_conv;       ///< held modulation voltage, converter frame
    TviOutput tvi_out;
    bool current_limited = false;
    DcControl dc;
    double k_v = 0.0;  ///< resolved TVI gain
    Dq v_lv_prev;      ///< previous LV voltage sample, converter frame
    double omega_base = 0.0;
};

struct DroopOutput {
    VscControl ctrl;
    double omega_vsc = 1.0;
    double v_mag_ref = 1.0;
};

/// Outer droop control. P path: lead-lag -> P_f, (P_set - P_f) -> LPF(w_c) ->
/// x m_p -> dw. Restoration (tgf_mode) low-pass filters w_vsc into the
/// frequency reference; otherwise the reference is w_set.
DroopOutput droop_step(VscControl ctrl, const VscParams& p, double p_meas, double q_meas, double dt);

struct InnerMeasurements {
    Dq v_cap;     ///< converter frame
    Dq i_conv;
    Dq i_grid;
    double v_dc = 1.0;
};

struct InnerOutput {
    VscControl ctrl;
    Dq e_conv;
    Dq i_ref;
};

/// Voltage PI (with grid-current feedforward and capacitor decoupling) ->
/// current reference clamped to i_max -> current PI (plus the inductor drop
/// for the change of the reference since the last sample) -> modulation voltage
/// limited to m_max * V_dc. Integrators freeze while their output is clamped.
InnerOutput inner_loops_step(VscControl ctrl, const VscParams& p, Dq v_ref, const InnerMeasurements& m, double dt);

/// DC source current command: PI on (V_dc_ref - V_dc) then the t_dc lag.
DcControl dc_control_step(DcControl dc, const VscParams& p, double v_dc, double dt);

/// C_dc dV_dc/dt = i_dc - p_ac/V_dc.
double dc_link_derivative(double v_dc, double i_dc_source, double p_ac, const VscParams& p);

struct DcLinkState {
    double v_dc = 1.0;
    DcControl control;
};

/// Standalone DC link update (control sample, then RK4 on V_dc with p_ac held).
/// Throws NumericalError when V_dc leaves [0.8, 1.2] V_dc_ref.
DcLinkState dc_link_step(DcLinkState s, const VscParams& p, double p_ac, double dt);

void check_dc_voltage(double v_dc, const VscParams& p);

// ---------------------------------------------------------------------------
// Plant
// ---------------------------------------------------------------------------

/// Continuous VSC states, synchronous frame.
struct VscPlant {
    Dq i_conv;
    Dq v_cap;
    Dq i_grid;  ///< transformer current toward the PCC
    double theta = 0.0;
    double v_dc = 1.0;
};

struct VscPlantDerivatives {
    VscPlant d;
    double p_ac = 0.0;
};

VscPlantDerivatives plant_derivatives(const VscPlant& s, const VscParams& p, const network::Branch& transformer,
                                      Dq e_conv, double i_dc_source, double omega_vsc, Dq v_pcc,
                                      double omega_base);

/// One full control sample: measurements from the plant, droop, TVI, inner
/// loops and DC control.
VscControl control_step(VscControl ctrl, const VscParams& p, const VscPlant& s, double dt);

struct VscInit {
    VscPlant plant;
    VscControl control;
};

/// Steady-state back-solve: capacitor voltage and grid-side current given
/// (synchronous frame), converter frame aligned with the capacitor voltage.
/// LV filter node voltage: capacitor voltage plus the drop on the damping resistor.
Dq filter_node_voltage(const VscPlant& s, const VscParams& p);

VscInit init_vsc(const VscParams& p, double k_v, Dq v_lv, Dq i_grid, double omega, double omega_base, double dt);

}  // namespace gridform::converter
