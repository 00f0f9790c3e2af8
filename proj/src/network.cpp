#include "gridform/network.hpp"

#include <cmath>
#include <string>

namespace gridform::network {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

GridImpedance scr_to_impedance(double scr, double x_over_r) {
    require(scr > 0.0, "scr must be > 0");
    require(x_over_r > 0.0, "x_over_r must be > 0");
    const double z = 1.0 / scr;
    const double r = z / std::sqrt(1.0 + x_over_r * x_over_r);
    return {r * x_over_r, r};
}

void validate(const GridParams& p) {
    require(p.h_g > 0.0, "grid.h_g must be > 0");
    require(p.r_droop > 0.0 && p.r_droop < 1.0, "grid.r must be in (0, 1)");
    require(p.t_d > 0.0, "grid.t_d must be > 0");
    require(p.t_n >= 0.0, "grid.t_n must be >= 0");
    require(p.scr > 0.0, "scr must be > 0");
    require(p.x_over_r > 0.0, "grid.x_over_r must be > 0");
}

GridDerivatives grid_frequency_derivatives(const GridState& s, const GridParams& p, double p_g, double omega_base) {
    const double u = p.p_g0 - p_g;
    const double ratio = p.t_n / p.t_d;
    GridDerivatives out;
    out.leadlag_out = ratio * u + (1.0 - ratio) * s.leadlag_x;
    out.d.leadlag_x = (u - s.leadlag_x) / p.t_d;
    out.d.delta_omega = (out.leadlag_out - s.delta_omega / p.r_droop) / (2.0 * p.h_g);
    out.d.theta = omega_base * s.delta_omega;
    return out;
}

double NetworkCase::omega_base() const { return 2.0 * M_PI * f_n; }

void validate(const NetworkCase& c) {
    require(c.s_n > 0.0, "system.s_n must be > 0");
    require(c.u_n > 0.0, "system.u_n must be > 0");
    require(c.f_n > 0.0, "system.f_n must be > 0");
    require(c.x_tr > 0.0, "transformer.x_tr must be > 0");
    require(c.r_tr >= 0.0, "transformer.r_tr must be >= 0");
    require(c.r_fault > 0.0, "fault.r_fault must be > 0");
    require(c.load_p >= 0.0, "load.p must be >= 0");
}

Dq branch_derivative(const Branch& b, Dq v_from, Dq v_to, Dq i, double omega_base) {
    return omega_base / b.x * (v_from - v_to - Dq(b.r, b.x) * i);
}

Dq load_admittance(const Conditions& c, double scr) {
    return Dq(c.load_p, -c.load_q) * scr;
}

Dq shunt_admittance(const Conditions& c, const NetworkCase& nc, double scr) {
    Dq y = load_admittance(c, scr);
    if (c.fault_on) y += 1.0 / nc.r_fault;
    return y;
}

Dq pcc_voltage(Dq i_in, Dq y_shunt) {
    if (std::abs(y_shunt) == 0.0) {
        throw ConfigError("PCC shunt group is empty (no load, no fault): node voltage is undefined");
    }
    return i_in / y_shunt;
}

NetworkEval network_step(Dq i_device, Dq i_grid, const GridState& grid, const Conditions& cond,
                         const NetworkCase& nc, const GridParams& gp) {
    const auto zg = scr_to_impedance(gp.scr, gp.x_over_r);
    const Dq y_load = load_admittance(cond, gp.scr);
    const double g_fault = cond.fault_on ? 1.0 / nc.r_fault : 0.0;

    NetworkEval out;
    out.v_pcc = pcc_voltage(i_device + i_grid, y_load + g_fault);
    out.v_source = std::polar(cond.v_g, grid.theta);
    out.di_grid = branch_derivative({zg.r, zg.x}, out.v_source, out.v_pcc, i_grid, nc.omega_base());
    out.p_grid = (out.v_source * std::conj(i_grid)).real();
    const double v2 = std::norm(out.v_pcc);
    out.p_load = y_load.real() * v2;
    out.p_fault = g_fault * v2;
    return out;
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::LoadStep: return "load_step";
        case EventKind::VoltageStep: return "voltage_step";
        case EventKind::FaultOn: return "fault_on";
        case EventKind::FaultOff: return "fault_off";
        case EventKind::SetpointStep: return "setpoint_step";
    }
    return "unknown";
}

Conditions apply_event(Conditions c, const Event& e) {
    switch (e.kind) {
        case EventKind::LoadStep:
            c.load_p += e.value;
            if (c.load_p < 0.0) throw ConfigError("load step drives the load below zero");
            break;
        case EventKind::VoltageStep:
            c.v_g *= 1.0 + e.value;
            break;
        case EventKind::FaultOn:
            c.fault_on = true;
            break;
        case EventKind::FaultOff:
            c.fault_on = false;
            break;
        case EventKind::SetpointStep:
            break;
    }
    return c;
}

void validate_events(const std::vector<Event>& events, bool initially_faulted) {
    bool faulted = initially_faulted;
    double last = -INFINITY;
    for (const auto& e : events) {
        require(std::isfinite(e.time) && e.time >= 0.0, "event time must be finite and >= 0");
        require(e.time > last, "events must be strictly time-ordered");
        last = e.time;
        if (e.kind == EventKind::FaultOn) {
            require(!faulted, "fault_on event while a fault is already applied");
            faulted = true;
        } else if (e.kind == EventKind::FaultOff) {
            require(faulted, "fault_off event without an applied fault");
            faulted = false;
        }
    }
}

namespace {

// Closed form with the device bus at angle zero and fixed injected (p, q).
PowerFlowResult flat_solution(const NetworkCase& nc, const GridParams& gp, const Conditions& cond,
                              double v_lv_mag, double p, double q) {
    const auto zg = scr_to_impedance(gp.scr, gp.x_over_r);
    PowerFlowResult r;
    r.v_lv = Dq(v_lv_mag, 0.0);
    r.i_device = std::conj(Dq(p, q) / r.v_lv);
    r.v_pcc = r.v_lv - Dq(nc.r_tr, nc.x_tr) * r.i_device;
    const Dq y_sh = shunt_admittance(cond, nc, gp.scr);
    r.i_grid = y_sh * r.v_pcc - r.i_device;
    r.v_source = r.v_pcc + Dq(zg.r, zg.x) * r.i_grid;
    r.p_device = p;
    r.q_device = q;
    return r;
}

}  // namespace

PowerFlowResult solve_power_flow(const NetworkCase& nc, const GridParams& gp, const Conditions& cond,
                                 double v_lv_mag, double p_device, double q_device_flat,
                                 double v_source_mag, double frame_angle) {
    require(v_lv_mag > 0.0, "device voltage setpoint must be > 0");
    PowerFlowResult r;
    if (v_source_mag <= 0.0) {
        r = flat_solution(nc, gp, cond, v_lv_mag, p_device, q_device_flat);
    } else {
        // Secant on the device reactive power until |V_source| matches.
        auto mismatch = [&](double q) {
            return std::abs(flat_solution(nc, gp, cond, v_lv_mag, p_device, q).v_source) - v_source_mag;
        };
        double q0 = 0.0, q1 = 0.1;
        double f0 = mismatch(q0), f1 = mismatch(q1);
        for (int it = 0; it < 100 && std::abs(f1) > 1e-14; ++it) {
            if (f1 == f0) break;
            const double q2 = q1 - f1 * (q1 - q0) / (f1 - f0);
            q0 = q1;
            f0 = f1;
            q1 = q2;
            f1 = mismatch(q1);
        }
        if (!(std::abs(f1) < 1e-9)) throw InitError("power flow did not converge");
        r = flat_solution(nc, gp, cond, v_lv_mag, p_device, q1);
    }
    const Dq rot = std::polar(1.0, frame_angle - std::arg(r.v_source));
    r.v_lv *= rot;
    r.v_pcc *= rot;
    r.v_source *= rot;
    r.i_device *= rot;
    r.i_grid *= rot;
    r.p_grid = (r.v_source * std::conj(r.i_grid)).real();
    return r;
}

}  // namespace gridform::network
