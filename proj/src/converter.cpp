#include "gridform/converter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridform::converter {

using numerics::PiState;

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

struct VectorPi {
    PiState d, q;
    Dq y;
    bool limited = false;
};

// Two-axis PI whose combined output (plus a feedforward) is limited in
// magnitude. A clamped update is only accepted if it reduces the overshoot.
VectorPi vector_pi(const PiState& d, const PiState& q, Dq error, Dq feedforward, double limit, double dt) {
    const auto nd = numerics::pi_step(d, error.real(), dt);
    const auto nq = numerics::pi_step(q, error.imag(), dt);
    const Dq raw = Dq(nd.y, nq.y) + feedforward;
    if (std::abs(raw) <= limit) {
        return {nd.state, nq.state, raw, false};
    }
    const Dq frozen = Dq(d.kp * error.real() + d.integral, q.kp * error.imag() + q.integral) + feedforward;
    const bool accept = std::abs(raw) < std::abs(frozen);
    const Dq chosen = accept ? raw : frozen;
    const double mag = std::abs(chosen);
    const Dq y = mag > limit ? chosen * (limit / mag) : chosen;
    return {accept ? nd.state : d, accept ? nq.state : q, y, true};
}

// Scales i_ref along its direction so that the grid-side current it implies
// (i_ref minus the capacitor current) stays within the limit as well.
Dq limit_grid_side(Dq i_ref, Dq i_cap, double limit) {
    if (std::abs(i_ref - i_cap) <= limit) return i_ref;
    const double a = std::norm(i_ref);
    if (a == 0.0) return i_ref;
    const double b = (i_ref * std::conj(i_cap)).real();
    const double c = std::norm(i_cap) - limit * limit;
    const double disc = b * b - a * c;
    double k = disc >= 0.0 ? (b + std::sqrt(disc)) / a : b / a;
    k = std::clamp(k, 0.0, 1.0);
    return k * i_ref;
}

}  // namespace

void validate(const VscParams& p) {
    require(p.m_p > 0.0, "vsc.mp must be > 0");
    require(p.n_q >= 0.0, "vsc.nq must be >= 0");
    require(p.omega_c > 0.0, "vsc.wc must be > 0");
    require(p.tau_gf > 0.0, "vsc.tau_gf must be > 0");
    require(p.v_set > 0.0, "vsc.vset must be > 0");
    require(p.l_f > 0.0, "vsc.lf must be > 0");
    require(p.c_f > 0.0, "vsc.cf must be > 0");
    require(p.r_f >= 0.0, "vsc.rf must be >= 0");
    require(p.tvi.i_thr > 0.0, "vsc.tvi.i_thr must be > 0");
    require(p.tvi.i_max > p.tvi.i_thr, "vsc.tvi.i_max must be > vsc.tvi.i_thr");
    require(p.tvi.sigma_xr >= 0.0, "vsc.tvi.sigma_xr must be >= 0");
    require(p.c_dc > 0.0, "vsc.cdc must be > 0");
    require(p.t_dc > 0.0, "vsc.tdc must be > 0");
    require(p.v_dc_ref > 0.0, "vsc.vdc_ref must be > 0");
    require(p.so_a > 1.0, "vsc.so_a must be > 1");
    require(p.ll_td > 0.0 && p.ll_tn >= 0.0, "vsc lead-lag requires ll_td > 0 and ll_tn >= 0");
    require(p.f_current > 0.0 && p.f_voltage > 0.0, "vsc loop bandwidths must be > 0");
    require(p.v_zero_ratio >= 1.0, "vsc.v_zero_ratio must be >= 1");
    require(p.k_ff >= 0.0 && p.k_ff <= 1.0, "vsc.k_ff must be in [0, 1]");
    require(p.m_max > 0.0, "vsc.m_max must be > 0");
    require(p.r_ad >= 0.0, "vsc.r_ad must be >= 0");
    require(p.r_d >= 0.0, "vsc.rd must be >= 0");
}

double equivalent_inertia(double m_p, double omega_c) {
    require(m_p > 0.0 && omega_c > 0.0, "equivalent inertia requires m_p > 0 and omega_c > 0");
    return 1.0 / (2.0 * m_p * omega_c);
}

double equivalent_damping(double m_p) {
    require(m_p > 0.0, "equivalent damping requires m_p > 0");
    return 1.0 / m_p;
}

PiGains symmetrical_optimum_gains(double c_dc, double t_dc, double a) {
    require(c_dc > 0.0 && t_dc > 0.0 && a > 1.0, "symmetrical optimum requires C_dc, t_dc > 0 and a > 1");
    return {c_dc / (a * t_dc), c_dc / (a * a * a * t_dc * t_dc)};
}

InnerGains design_inner_loops(const VscParams& p, double omega_base) {
    InnerGains g;
    const double wi = 2.0 * M_PI * p.f_current;
    g.current.kp = wi * p.l_f / omega_base;
    g.current.ki = g.current.kp * p.r_f * omega_base / p.l_f;
    const double wv = 2.0 * M_PI * p.f_voltage;
    g.voltage.kp = wv * p.c_f / omega_base;
    g.voltage.ki = g.voltage.kp * wv / p.v_zero_ratio;
    return g;
}

TviOutput tvi(double i_mag, const TviParams& p) {
    const double excess = std::max(0.0, i_mag - p.i_thr);
    TviOutput out;
    out.r_v = p.k_v * excess;
    out.x_v = p.sigma_xr * out.r_v;
    return out;
}

double static_fault_current(const VscParams& p, double k_v, const network::Branch& transformer,
                            Dq z_pcc_thevenin) {
    const Dq z_fixed = Dq(transformer.r, transformer.x) + z_pcc_thevenin;
    TviParams t = p.tvi;
    t.k_v = k_v;
    auto residual = [&](double i) {
        const auto zv = tvi(i, t);
        return i * std::abs(z_fixed + Dq(zv.r_v, zv.x_v)) - p.v_set;
    };
    double lo = 0.0;
    double hi = p.v_set / std::abs(z_fixed);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double calibrate_tvi_gain(const VscParams& p, const network::Branch& transformer, Dq z_pcc_thevenin) {
    if (static_fault_current(p, 0.0, transformer, z_pcc_thevenin) <= p.tvi.i_max) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (static_fault_current(p, hi, transformer, z_pcc_thevenin) > p.tvi.i_max) {
        hi *= 2.0;
        if (hi > 1e6) throw ConfigError("TVI calibration failed: no gain limits the fault current");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (static_fault_current(p, mid, transformer, z_pcc_thevenin) > p.tvi.i_max ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

DroopOutput droop_step(VscControl ctrl, const VscParams& p, double p_meas, double q_meas, double dt) {
    double p_f = p_meas;
    if (p.leadlag_enabled) {
        const auto ll = numerics::leadlag_step(ctrl.p_leadlag, p_meas, p.ll_tn, p.ll_td, dt);
        ctrl.p_leadlag = ll.state;
        p_f = ll.y;
    } else {
        ctrl.p_leadlag.value = p_meas;
    }
    ctrl.droop_lpf = numerics::lpf_step(ctrl.droop_lpf, p.p_set - p_f, p.omega_c, dt);
    ctrl.omega_vsc = ctrl.omega_set_state + p.m_p * ctrl.droop_lpf.value;
    if (p.tgf_mode) {
        ctrl.omega_set_state = numerics::lpf_step({ctrl.omega_set_state, 0.0}, ctrl.omega_vsc, 1.0 / p.tau_gf, dt).value;
    } else {
        ctrl.omega_set_state = p.omega_set;
    }
    ctrl.q_lpf = numerics::lpf_step(ctrl.q_lpf, q_meas, p.omega_c, dt);
    ctrl.v_mag_ref = p.v_set + p.n_q * (p.q_set - ctrl.q_lpf.value);
    ctrl.p_meas = p_meas;
    ctrl.q_meas = q_meas;
    return {ctrl, ctrl.omega_vsc, ctrl.v_mag_ref};
}

InnerOutput inner_loops_step(VscControl ctrl, const VscParams& p, Dq v_ref, const InnerMeasurements& m, double dt) {
    const Dq j(0.0, 1.0);
    const double w = ctrl.omega_vsc;

    const Dq i_ref_prev = ctrl.i_ref;
    const bool was_limited = ctrl.current_limited;
    const Dq ff_v = p.k_ff * m.i_grid + j * w * p.c_f * m.v_cap;
    const auto v_loop = vector_pi(ctrl.v_pi_d, ctrl.v_pi_q, v_ref - m.v_cap, ff_v, p.tvi.i_max, dt);
    ctrl.v_pi_d = v_loop.d;
    ctrl.v_pi_q = v_loop.q;
    ctrl.i_ref = v_loop.y;
    ctrl.current_limited = v_loop.limited;
    if (p.grid_side_limit && ctrl.omega_base > 0.0) {
        // capacitor current from the sampled LV voltage, not from i_conv
        const Dq i_cap = p.c_f / ctrl.omega_base * (m.v_cap - ctrl.v_lv_prev) / dt + j * w * p.c_f * m.v_cap;
        const Dq lim = limit_grid_side(ctrl.i_ref, i_cap, p.tvi.i_max);
        ctrl.current_limited = ctrl.current_limited || lim != ctrl.i_ref;
        ctrl.i_ref = lim;
    }
    ctrl.v_lv_prev = m.v_cap;

    // Capacitor-current feedback acts as a virtual resistor that damps the
    // filter/transformer resonance, also while i_ref is clamped.
    Dq ff_i = m.v_cap + j * w * p.l_f * m.i_conv - p.r_ad * (m.i_conv - m.i_grid - j * w * p.c_f * m.v_cap);
    // a clamped reference jumps with the limiter, not with the plant
    if (ctrl.omega_base > 0.0 && !was_limited && !ctrl.current_limited) {
        Dq rate = (ctrl.i_ref - i_ref_prev) / dt;
        if (std::abs(rate) > p.dff_rate_max) rate *= p.dff_rate_max / std::abs(rate);
        ff_i += p.k_dff * p.l_f / ctrl.omega_base * rate;
    }
    const auto i_loop = vector_pi(ctrl.i_pi_d, ctrl.i_pi_q, ctrl.i_ref - m.i_conv, ff_i, p.m_max * m.v_dc, dt);
    ctrl.i_pi_d = i_loop.d;
    ctrl.i_pi_q = i_loop.q;
    ctrl.e_conv = i_loop.y;
    return {ctrl, ctrl.e_conv, ctrl.i_ref};
}

DcControl dc_control_step(DcControl dc, const VscParams& p, double v_dc, double dt) {
    const auto pi = numerics::pi_step(dc.pi, p.v_dc_ref - v_dc, dt);
    dc.pi = pi.state;
    dc.source_lag = numerics::lpf_step(dc.source_lag, pi.y, 1.0 / p.t_dc, dt);
    return dc;
}

double dc_link_derivative(double v_dc, double i_dc_source, double p_ac, const VscParams& p) {
    return (i_dc_source - p_ac / v_dc) / p.c_dc;
}

void check_dc_voltage(double v_dc, const VscParams& p) {
    if (!(v_dc >= 0.8 * p.v_dc_ref && v_dc <= 1.2 * p.v_dc_ref)) {
        throw NumericalError("DC link voltage out of [0.8, 1.2] V_dc_ref: " + std::to_string(v_dc));
    }
}

DcLinkState dc_link_step(DcLinkState s, const VscParams& p, double p_ac, double dt) {
    check_dc_voltage(s.v_dc, p);
    s.control = dc_control_step(s.control, p, s.v_dc, dt);
    const double i_dc = s.control.source_lag.value;
    auto f = [&](double v) { return dc_link_derivative(v, i_dc, p_ac, p); };
    const double k1 = f(s.v_dc);
    const double k2 = f(s.v_dc + 0.5 * dt * k1);
    const double k3 = f(s.v_dc + 0.5 * dt * k2);
    const double k4 = f(s.v_dc + dt * k3);
    s.v_dc += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return s;
}

VscPlantDerivatives plant_derivatives(const VscPlant& s, const VscParams& p, const network::Branch& transformer,
                                      Dq e_conv, double i_dc_source, double omega_vsc, Dq v_pcc,
                                      double omega_base) {
    const Dq j(0.0, 1.0);
    const Dq e = e_conv * std::polar(1.0, s.theta);
    VscPlantDerivatives out;
    const Dq v_lv = filter_node_voltage(s, p);
    out.d.i_conv = omega_base / p.l_f * (e - v_lv - Dq(p.r_f, p.l_f) * s.i_conv);
    out.d.v_cap = omega_base / p.c_f * (s.i_conv - s.i_grid - j * p.c_f * s.v_cap);
    out.d.i_grid = network::branch_derivative(transformer, v_lv, v_pcc, s.i_grid, omega_base);
    out.d.theta = omega_base * (omega_vsc - 1.0);
    out.p_ac = (e * std::conj(s.i_conv)).real();
    out.d.v_dc = dc_link_derivative(s.v_dc, i_dc_source, out.p_ac, p);
    return out;
}

VscControl control_step(VscControl ctrl, const VscParams& p, const VscPlant& s, double dt) {
    check_dc_voltage(s.v_dc, p);
    const Dq rot = std::polar(1.0, -s.theta);
    InnerMeasurements m{filter_node_voltage(s, p) * rot, s.i_conv * rot, s.i_grid * rot, s.v_dc};

    const Dq s_out = m.v_cap * std::conj(m.i_grid);
    ctrl = droop_step(ctrl, p, s_out.real(), s_out.imag(), dt).ctrl;

    TviParams t = p.tvi;
    t.k_v = ctrl.k_v;
    ctrl.tvi_out = tvi(std::abs(m.i_grid), t);
    const Dq v_ref = ctrl.v_mag_ref - Dq(ctrl.tvi_out.r_v, ctrl.tvi_out.x_v) * m.i_grid;

    ctrl = inner_loops_step(ctrl, p, v_ref, m, dt).ctrl;
    ctrl.dc = dc_control_step(ctrl.dc, p, s.v_dc, dt);
    return ctrl;
}

Dq filter_node_voltage(const VscPlant& s, const VscParams& p) {
    return s.v_cap + p.r_d * (s.i_conv - s.i_grid);
}

VscInit init_vsc(const VscParams& p, double k_v, Dq v_lv, Dq i_grid, double omega, double omega_base, double dt) {
    validate(p);
    const Dq j(0.0, 1.0);
    VscInit init;
    auto& s = init.plant;
    s.v_cap = v_lv / (1.0 + j * omega * p.c_f * p.r_d);
    s.i_grid = i_grid;
    s.i_conv = i_grid + j * omega * p.c_f * s.v_cap;
    s.theta = std::arg(v_lv);
    s.v_dc = p.v_dc_ref;

    const Dq rot = std::polar(1.0, -s.theta);
    const Dq vc = v_lv * rot;
    const Dq ig = i_grid * rot;
    const Dq ic = s.i_conv * rot;
    const Dq e = vc + Dq(p.r_f, omega * p.l_f) * ic;

    const auto g = design_inner_loops(p, omega_base);
    auto& c = init.control;
    c.k_v = k_v;
    const Dq vi = ic - p.k_ff * ig - j * omega * p.c_f * vc;
    c.v_pi_d = PiState{vi.real(), g.voltage.kp, g.voltage.ki};
    c.v_pi_q = PiState{vi.imag(), g.voltage.kp, g.voltage.ki};
    const Dq ii = e - vc - j * omega * p.l_f * ic + p.r_ad * (ic - ig - j * omega * p.c_f * vc);
    c.i_pi_d = PiState{ii.real(), g.current.kp, g.current.ki};
    c.i_pi_q = PiState{ii.imag(), g.current.kp, g.current.ki};
    c.i_ref = ic;
    c.v_lv_prev = vc;
    c.omega_base = omega_base;
    c.e_conv = e;

    const Dq s_out = vc * std::conj(ig);
    c.p_meas = s_out.real();
    c.q_meas = s_out.imag();
    c.p_leadlag = p.leadlag_enabled ? numerics::leadlag_settled(c.p_meas, p.ll_tn, p.ll_td, dt) : numerics::BlockState{c.p_meas, 0.0};
    c.droop_lpf.value = p.p_set - c.p_meas;
    c.omega_set_state = p.tgf_mode ? omega - p.m_p * c.droop_lpf.value : p.omega_set;
    c.omega_vsc = c.omega_set_state + p.m_p * c.droop_lpf.value;
    c.q_lpf.value = c.q_meas;
    c.v_mag_ref = p.v_set + p.n_q * (p.q_set - c.q_meas);

    const double p_ac = (e * std::conj(ic)).real();
    const double i_dc = p_ac / s.v_dc;
    const auto so = symmetrical_optimum_gains(p.c_dc, p.t_dc, p.so_a);
    c.dc.pi = PiState{i_dc, so.kp, so.ki};
    c.dc.source_lag.value = i_dc;
    return init;
}

}  // namespace gridform::converter
