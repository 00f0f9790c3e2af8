#pragma once

// Synchronous condenser: dq machine with stator transients, field winding,
// one d-axis and one q-axis damper, swing equation and a reduced AC1A
// excitation system.
//
// Per-unit, generator convention (positive current leaves the machine).
// Complex dq quantities are d + jq; the q axis leads d by 90 degrees, so an
// open-circuited machine at rated flux shows v = j*1.
//
// Winding parameters come from the standard-parameter set through the
// classical open-circuit time-constant relations:
//   X_ad = X_d - X_l,   X_aq = X_q - X_l
//   X_fd = X_ad (X'_d - X_l) / (X_ad - X'_d + X_l)
//   1/X_1d = 1/(X''_d - X_l) - 1/X_ad - 1/X_fd
//   X_2q = X_aq (X''_q - X_l) / (X_aq - X''_q + X_l)
//   R_fd = (X_ad + X_fd) / (w_b T'_d0)
//   R_1d = (X_1d + X_ad X_fd / (X_ad + X_fd)) / (w_b T''_d0)
//   R_2q = (X_aq + X_2q) / (w_b T''_q0)
// The field voltage E_fd is in the non-reciprocal base where E_fd = 1 gives
// 1 pu open-circuit voltage at rated speed.

#include "gridform/numerics.hpp"

namespace gridform::machine {

struct ScParams {
    double h = 5.0;      ///< inertia constant [s]
    double k_d = 0.0;    ///< mechanical damping [pu]
    double x_d = 2.24;
    double x_d_p = 0.17;
    double x_d_pp = 0.12;
    double x_q = 1.02;
    double x_q_pp = 0.13;
    double x_l = 0.08;
    double r_s = 0.017;
    double t_d0_p = 4.4849;
    double t_d0_pp = 0.0681;
    double t_q0_pp = 0.1;
    int pole_pairs = 2;
};

void validate(const ScParams& p);

struct WindingParams {
    double x_ad, x_aq;
    double x_fd, x_1d, x_2q;
    double r_fd, r_1d, r_2q;
};

WindingParams to_windings(const ScParams& p, double omega_base);

/// Precomputed model: standard parameters plus derived winding constants.
class ScModel {
public:
    ScModel(const ScParams& params, double omega_base);

    const ScParams& params() const { return params_; }
    const WindingParams& windings() const { return w_; }
    double omega_base() const { return omega_base_; }
    double x_d_pp_eff() const { return x_d_pp_; }
    double x_q_pp_eff() const { return x_q_pp_; }
    double x_adr_pp() const { return x_adr_pp_; }
    double x_aqr_pp() const { return x_aqr_pp_; }

private:
    ScParams params_;
    WindingParams w_;
    double omega_base_;
    double x_adr_pp_;  // 1/(1/X_ad + 1/X_fd + 1/X_1d)
    double x_aqr_pp_;  // 1/(1/X_aq + 1/X_2q)
    double x_d_pp_;
    double x_q_pp_;
};

struct ScState {
    double i_d = 0.0;  ///< stator current, rotor frame
    double i_q = 0.0;
    double psi_fd = 0.0;
    double psi_1d = 0.0;
    double psi_2q = 0.0;
    double omega = 1.0;  ///< rotor electrical speed [pu]
    double delta = 0.0;  ///< rotor angle vs the synchronous frame [rad]
};

/// Series branch between the machine terminals and a voltage node. The
/// stator current is a state, so the machine must see either an inductive
/// path (x + X'' > 0) or an open circuit.
struct ExternalBranch {
    double r = 0.0;
    double x = 0.0;
    bool open = false;
};

struct ScDerivatives {
    ScState d;           ///< time derivatives [1/s]
    Dq v_terminal;       ///< synchronous frame
    Dq i_terminal;       ///< synchronous frame
    double torque = 0.0;
    double air_gap_power = 0.0;
    double i_fd = 0.0;
};

/// Swing equation in the form d(omega)/dt = (-P_e/omega - K_d (omega - omega_g)) / 2H.
/// Dividing the air-gap power by speed keeps the kinetic-energy balance
/// exact; at rated speed it reduces to the textbook form.
double swing_acceleration(double air_gap_power, double omega, double omega_g, double h, double k_d);

/// State derivatives with the machine feeding `branch` into the node at
/// synchronous-frame voltage `v_node`. Throws NumericalError when speed
/// leaves [0.8, 1.2].
ScDerivatives sc_derivatives(const ScModel& model, const ScState& s, double e_fd, Dq v_node,
                             const ExternalBranch& branch, double omega_g);

/// I_b = V_n,ph / X'_d.
double short_circuit_current_ib(double v_n_ph, double x_d_p);

struct ScOperatingPoint {
    ScState state;
    double e_fd = 0.0;
};

/// Steady-state back-solve at terminal voltage `v` and current `i`
/// (synchronous frame, generator convention), rotor at `omega`.
ScOperatingPoint init_sc(const ScModel& model, Dq v, Dq i, double omega, double e_fd_max);

/// Same, from terminal power (P, Q).
ScOperatingPoint init_sc_pq(const ScModel& model, Dq v, double p, double q, double omega, double e_fd_max);

// ---------------------------------------------------------------------------
// Excitation
// ---------------------------------------------------------------------------

/// Reduced AC1A: voltage transducer lag -> PI regulator -> exciter lag with a
/// non-windup [0, E_fd_max] limit (diode rectifier cannot go negative).
struct AvrParams {
    double t_r = 0.02;      ///< transducer time constant [s]
    double kp = 23.5;  // from tools/tune_avr
    double ki = 14.2;
    double t_e = 0.2;       ///< exciter time constant [s]
    double e_fd_max = 5.0;
    double v_r_max = 15.0;  ///< regulator output limit, symmetric
};

void validate(const AvrParams& p);

struct AvrState {
    numerics::BlockState v_meas_filter;
    numerics::PiState pi;
    numerics::BlockState exciter_lag;
    double v_ref = 1.0;

    double v_fd() const { return exciter_lag.value; }
};

AvrState init_avr(const AvrParams& p, double e_fd, double v_meas, double v_ref);
AvrState avr_step(AvrState avr, const AvrParams& p, double v_s_mag, double dt);

}  // namespace gridform::machine
