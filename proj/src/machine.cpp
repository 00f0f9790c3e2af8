#include "gridform/machine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridform::machine {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

void validate(const ScParams& p) {
    require(p.h > 0.0, "sc.h_sc must be > 0");
    require(p.k_d >= 0.0, "sc.k_d must be >= 0");
    require(p.x_l > 0.0, "sc.xl must be > 0");
    require(p.x_d_pp > p.x_l, "sc.xd_pp must be > sc.xl");
    require(p.x_d_p > p.x_d_pp, "sc.xd_p must be > sc.xd_pp");
    require(p.x_d > p.x_d_p, "sc.xd must be > sc.xd_p");
    require(p.x_q_pp > p.x_l, "sc.xq_pp must be > sc.xl");
    require(p.x_q > p.x_q_pp, "sc.xq must be > sc.xq_pp");
    require(p.r_s >= 0.0, "sc.rs must be >= 0");
    require(p.t_d0_p > 0.0 && p.t_d0_pp > 0.0 && p.t_q0_pp > 0.0, "sc time constants must be > 0");
    require(p.t_d0_p > p.t_d0_pp, "sc.td0_p must be > sc.td0_pp");
    require(p.pole_pairs > 0, "sc.pole_pairs must be > 0");
}

WindingParams to_windings(const ScParams& p, double omega_base) {
    validate(p);
    WindingParams w{};
    w.x_ad = p.x_d - p.x_l;
    w.x_aq = p.x_q - p.x_l;
    w.x_fd = w.x_ad * (p.x_d_p - p.x_l) / (w.x_ad - p.x_d_p + p.x_l);
    const double inv_1d = 1.0 / (p.x_d_pp - p.x_l) - 1.0 / w.x_ad - 1.0 / w.x_fd;
    require(inv_1d > 0.0, "sc reactances give a non-physical d-axis damper");
    w.x_1d = 1.0 / inv_1d;
    w.x_2q = w.x_aq * (p.x_q_pp - p.x_l) / (w.x_aq - p.x_q_pp + p.x_l);
    w.r_fd = (w.x_ad + w.x_fd) / (omega_base * p.t_d0_p);
    w.r_1d = (w.x_1d + w.x_ad * w.x_fd / (w.x_ad + w.x_fd)) / (omega_base * p.t_d0_pp);
    w.r_2q = (w.x_aq + w.x_2q) / (omega_base * p.t_q0_pp);
    return w;
}

ScModel::ScModel(const ScParams& params, double omega_base)
    : params_(params), w_(to_windings(params, omega_base)), omega_base_(omega_base) {
    x_adr_pp_ = 1.0 / (1.0 / w_.x_ad + 1.0 / w_.x_fd + 1.0 / w_.x_1d);
    x_aqr_pp_ = 1.0 / (1.0 / w_.x_aq + 1.0 / w_.x_2q);
    x_d_pp_ = params_.x_l + x_adr_pp_;
    x_q_pp_ = params_.x_l + x_aqr_pp_;
}

double swing_acceleration(double air_gap_power, double omega, double omega_g, double h, double k_d) {
    return (-air_gap_power / omega - k_d * (omega - omega_g)) / (2.0 * h);
}

ScDerivatives sc_derivatives(const ScModel& model, const ScState& s, double e_fd, Dq v_node,
                             const ExternalBranch& branch, double omega_g) {
    if (!(s.omega >= 0.8 && s.omega <= 1.2)) {
        throw NumericalError("synchronous condenser speed out of [0.8, 1.2] pu: " + std::to_string(s.omega));
    }
    const auto& p = model.params();
    const auto& w = model.windings();
    const double wb = model.omega_base();
    const double xadr = model.x_adr_pp();
    const double xaqr = model.x_aqr_pp();

    const double i_d = branch.open ? 0.0 : s.i_d;
    const double i_q = branch.open ? 0.0 : s.i_q;

    // Subtransient flux behind X'' (rotor fluxes only).
    const double psi_pp_d = xadr * (s.psi_fd / w.x_fd + s.psi_1d / w.x_1d);
    const double psi_pp_q = xaqr * s.psi_2q / w.x_2q;
    const double psi_ad = psi_pp_d - xadr * i_d;
    const double psi_aq = psi_pp_q - xaqr * i_q;
    const double i_fd = (s.psi_fd - psi_ad) / w.x_fd;
    const double i_1d = (s.psi_1d - psi_ad) / w.x_1d;
    const double i_2q = (s.psi_2q - psi_aq) / w.x_2q;
    const double psi_d = psi_ad - p.x_l * i_d;
    const double psi_q = psi_aq - p.x_l * i_q;

    ScDerivatives out;
    out.i_fd = i_fd;
    out.d.psi_fd = wb * w.r_fd * (e_fd / w.x_ad - i_fd);
    out.d.psi_1d = -wb * w.r_1d * i_1d;
    out.d.psi_2q = -wb * w.r_2q * i_2q;
    const double dpsi_pp_d = xadr * (out.d.psi_fd / w.x_fd + out.d.psi_1d / w.x_1d);
    const double dpsi_pp_q = xaqr * out.d.psi_2q / w.x_2q;

    const Dq rot = std::polar(1.0, s.delta);
    const Dq v_ext = v_node * std::conj(rot);
    const double om = s.omega;

    double di_d = 0.0;
    double di_q = 0.0;
    if (!branch.open) {
        const double r = p.r_s + branch.r;
        di_d = wb / (model.x_d_pp_eff() + branch.x) *
               (dpsi_pp_d / wb - om * psi_q + om * branch.x * i_q - r * i_d - v_ext.real());
        di_q = wb / (model.x_q_pp_eff() + branch.x) *
               (dpsi_pp_q / wb + om * psi_d - om * branch.x * i_d - r * i_q - v_ext.imag());
    }
    out.d.i_d = di_d;
    out.d.i_q = di_q;

    const double v_d = -p.r_s * i_d + (dpsi_pp_d - model.x_d_pp_eff() * di_d) / wb - om * psi_q;
    const double v_q = -p.r_s * i_q + (dpsi_pp_q - model.x_q_pp_eff() * di_q) / wb + om * psi_d;

    out.torque = psi_d * i_q - psi_q * i_d;
    out.air_gap_power = om * out.torque;
    out.d.omega = swing_acceleration(out.air_gap_power, om, omega_g, p.h, p.k_d);
    out.d.delta = wb * (om - 1.0);
    out.v_terminal = Dq(v_d, v_q) * rot;
    out.i_terminal = Dq(i_d, i_q) * rot;
    return out;
}

double short_circuit_current_ib(double v_n_ph, double x_d_p) {
    if (!(x_d_p > 0.0)) throw ConfigError("x_d_p must be > 0");
    return v_n_ph / x_d_p;
}

ScOperatingPoint init_sc(const ScModel& model, Dq v, Dq i, double omega, double e_fd_max) {
    if (std::abs(v) <= 0.5) throw InitError("terminal voltage must exceed 0.5 pu for initialization");
    const auto& p = model.params();
    const auto& w = model.windings();

    // Internal EMF along the q axis: E_Q = V + (R_s + j w X_q) I.
    const Dq e_q = v + Dq(p.r_s, omega * p.x_q) * i;
    const double delta = std::arg(e_q) - M_PI / 2.0;
    const Dq rot = std::polar(1.0, -delta);
    const Dq vm = v * rot;
    const Dq im = i * rot;

    const double psi_d = (vm.imag() + p.r_s * im.imag()) / omega;
    const double i_fd = (psi_d + p.x_d * im.real()) / w.x_ad;
    const double psi_ad = w.x_ad * (-im.real() + i_fd);
    const double psi_aq = -w.x_aq * im.imag();

    ScOperatingPoint op;
    op.e_fd = w.x_ad * i_fd;
    if (op.e_fd > e_fd_max || op.e_fd < 0.0) {
        throw InitError("required field voltage " + std::to_string(op.e_fd) + " pu is outside [0, " +
                        std::to_string(e_fd_max) + "]");
    }
    op.state.i_d = im.real();
    op.state.i_q = im.imag();
    op.state.psi_fd = w.x_fd * i_fd + psi_ad;
    op.state.psi_1d = psi_ad;
    op.state.psi_2q = psi_aq;
    op.state.omega = omega;
    op.state.delta = delta;
    return op;
}

ScOperatingPoint init_sc_pq(const ScModel& model, Dq v, double p, double q, double omega, double e_fd_max) {
    if (std::abs(v) <= 0.5) throw InitError("terminal voltage must exceed 0.5 pu for initialization");
    const Dq i = std::conj(Dq(p, q) / v);
    return init_sc(model, v, i, omega, e_fd_max);
}

void validate(const AvrParams& p) {
    require(p.t_r > 0.0, "sc.avr.tr must be > 0");
    require(p.t_e > 0.0, "sc.avr.te must be > 0");
    require(p.kp >= 0.0 && p.ki >= 0.0, "sc.avr gains must be >= 0");
    require(p.e_fd_max > 0.0, "sc.avr.efd_max must be > 0");
    require(p.v_r_max >= p.e_fd_max, "sc.avr.vr_max must be >= sc.avr.efd_max");
}

AvrState init_avr(const AvrParams& p, double e_fd, double v_meas, double v_ref) {
    AvrState a;
    a.v_meas_filter.value = v_meas;
    a.pi = numerics::PiState{e_fd, p.kp, p.ki, -p.v_r_max, p.v_r_max};
    a.exciter_lag.value = e_fd;
    a.v_ref = v_ref;
    return a;
}

AvrState avr_step(AvrState avr, const AvrParams& p, double v_s_mag, double dt) {
    avr.v_meas_filter = numerics::lpf_step(avr.v_meas_filter, v_s_mag, 1.0 / p.t_r, dt);
    const auto pi = numerics::pi_step(avr.pi, avr.v_ref - avr.v_meas_filter.value, dt);
    avr.pi = pi.state;
    avr.exciter_lag = numerics::lpf_step(avr.exciter_lag, pi.y, 1.0 / p.t_e, dt);
    avr.exciter_lag.value = std::clamp(avr.exciter_lag.value, 0.0, p.e_fd_max);
    return avr;
}

}  // namespace gridform::machine
