#include "gridform/system.hpp"

#include <cmath>
#include <limits>

namespace gridform {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Device state offsets.
enum ScIdx { kId, kIq, kPsiFd, kPsi1d, kPsi2q, kOmega, kDelta, kScCount };
enum VscIdx { kIcD, kIcQ, kVcD, kVcQ, kItD, kItQ, kTheta, kVdc, kVscCount };

}  // namespace

const char* to_string(Device d) { return d == Device::Sc ? "SC" : "VSC"; }

Device parse_device(std::string_view s) {
    if (s == "sc" || s == "SC") return Device::Sc;
    if (s == "vsc" || s == "VSC") return Device::Vsc;
    throw ConfigError("unknown device '" + std::string(s) + "' (expected sc or vsc)");
}

Dq fault_thevenin_impedance(const CaseParams& p) {
    const auto zg = network::scr_to_impedance(p.grid.scr, p.grid.x_over_r);
    network::Conditions c{p.network.load_p, p.network.load_q, 1.0, true};
    const Dq y = network::shunt_admittance(c, p.network, p.grid.scr) + 1.0 / Dq(zg.r, zg.x);
    return 1.0 / y;
}

struct System::Eval {
    Outputs out;
};

System::System(const CaseParams& params, Device device)
    : params_(params),
      device_(device),
      layout_(std::make_shared<numerics::StateLayout>()),
      sc_model_(params.sc, params.network.omega_base()),
      transformer_{params.network.r_tr, params.network.x_tr} {
    validate(params_);
    i_dw_ = layout_->add("grid.delta_omega");
    i_llx_ = layout_->add("grid.leadlag");
    i_theta_g_ = layout_->add("grid.theta");
    i_ig_d_ = layout_->add("grid.i_d");
    i_ig_q_ = layout_->add("grid.i_q");
    i_dev_ = layout_->size();
    if (device_ == Device::Sc) {
        for (const char* n : {"sc.i_d", "sc.i_q", "sc.psi_fd", "sc.psi_1d", "sc.psi_2q", "sc.omega", "sc.delta"}) {
            layout_->add(n);
        }
    } else {
        for (const char* n : {"vsc.i_conv_d", "vsc.i_conv_q", "vsc.v_cap_d", "vsc.v_cap_q", "vsc.i_tr_d", "vsc.i_tr_q",
                              "vsc.theta", "vsc.v_dc"}) {
            layout_->add(n);
        }
        k_v_ = params_.vsc.tvi.k_v > 0.0
                   ? params_.vsc.tvi.k_v
                   : converter::calibrate_tvi_gain(params_.vsc, transformer_, fault_thevenin_impedance(params_));
    }
    cond_ = {params_.network.load_p, params_.network.load_q, 1.0, false};
}

InitialCondition System::steady_state() const {
    const auto& p = params_;
    network::Conditions cond = cond_;
    cond.fault_on = false;

    const bool vg_auto = p.grid.v_g <= 0.0;
    network::PowerFlowResult pf;
    if (device_ == Device::Vsc) {
        pf = network::solve_power_flow(p.network, p.grid, cond, p.vsc.v_set, p.vsc.p_set, 0.0, p.grid.v_g,
                                       p.scenario.frame_angle);
    } else {
        // Condenser: terminal power is the stator loss, p = -R_s |i|^2.
        double p_dev = 0.0;
        for (int it = 0; it < 50; ++it) {
            pf = network::solve_power_flow(p.network, p.grid, cond, 1.0, p_dev, 0.0, p.grid.v_g,
                                           p.scenario.frame_angle);
            const double next = -p.sc.r_s * std::norm(pf.i_device);
            if (std::abs(next - p_dev) < 1e-15) break;
            p_dev = next;
        }
    }
    if (vg_auto) cond.v_g = std::abs(pf.v_source);

    InitialCondition ic;
    ic.power_flow = pf;
    ic.x.assign(layout_->size(), 0.0);
    const double p_g0 = p.grid_pg0_auto ? network::to_grid_base(pf.p_grid, p.grid.scr) : p.grid.p_g0;
    ic.x[i_dw_] = 0.0;
    ic.x[i_llx_] = p_g0 - network::to_grid_base(pf.p_grid, p.grid.scr);
    ic.x[i_theta_g_] = std::arg(pf.v_source);
    ic.x[i_ig_d_] = pf.i_grid.real();
    ic.x[i_ig_q_] = pf.i_grid.imag();

    if (device_ == Device::Sc) {
        const auto op = machine::init_sc(sc_model_, pf.v_lv, pf.i_device, 1.0, p.avr.e_fd_max);
        double* d = ic.x.data() + i_dev_;
        d[kId] = op.state.i_d;
        d[kIq] = op.state.i_q;
        d[kPsiFd] = op.state.psi_fd;
        d[kPsi1d] = op.state.psi_1d;
        d[kPsi2q] = op.state.psi_2q;
        d[kOmega] = op.state.omega;
        d[kDelta] = op.state.delta;
        const double v = std::abs(pf.v_lv);
        ic.avr = machine::init_avr(p.avr, op.e_fd, v, v);
    } else {
        const auto init = converter::init_vsc(p.vsc, k_v_, pf.v_lv, pf.i_device, 1.0, p.network.omega_base(),
                                              control_period(p.scenario));
        double* d = ic.x.data() + i_dev_;
        d[kIcD] = init.plant.i_conv.real();
        d[kIcQ] = init.plant.i_conv.imag();
        d[kVcD] = init.plant.v_cap.real();
        d[kVcQ] = init.plant.v_cap.imag();
        d[kItD] = init.plant.i_grid.real();
        d[kItQ] = init.plant.i_grid.imag();
        d[kTheta] = init.plant.theta;
        d[kVdc] = init.plant.v_dc;
        ic.vsc = init.control;
    }
    return ic;
}

void System::load(const InitialCondition& ic) {
    if (ic.x.size() != layout_->size()) throw ConfigError("initial state does not match the system layout");
    cond_ = {params_.network.load_p, params_.network.load_q, 1.0, false};
    cond_.v_g = params_.grid.v_g > 0.0 ? params_.grid.v_g : std::abs(ic.power_flow.v_source);
    if (params_.grid_pg0_auto) {
        params_.grid.p_g0 = network::to_grid_base(ic.power_flow.p_grid, params_.grid.scr);
    }
    avr_ = ic.avr;
    vsc_ = ic.vsc;
}

void System::apply(const network::Event& e) {
    if (e.kind == network::EventKind::SetpointStep) {
        if (device_ == Device::Sc) {
            avr_.v_ref *= 1.0 + e.value;
        } else {
            params_.vsc.v_set *= 1.0 + e.value;
        }
        return;
    }
    cond_ = network::apply_event(cond_, e);
}

void System::control(std::span<const double> x, double dt) {
    if (device_ == Device::Sc) {
        const auto o = outputs(x);
        avr_ = machine::avr_step(avr_, params_.avr, o.vmag_lv, dt);
    } else {
        const double* d = x.data() + i_dev_;
        converter::VscPlant s{{d[kIcD], d[kIcQ]}, {d[kVcD], d[kVcQ]}, {d[kItD], d[kItQ]}, d[kTheta], d[kVdc]};
        vsc_ = converter::control_step(vsc_, params_.vsc, s, dt);
    }
}

System::Eval System::evaluate(std::span<const double> x, std::span<double>* dx) const {
    const auto& p = params_;
    const double wb = p.network.omega_base();
    const double f_n = p.network.f_n;
    const network::GridState g{x[i_dw_], x[i_llx_], x[i_theta_g_]};
    const Dq i_g(x[i_ig_d_], x[i_ig_q_]);
    const double* d = x.data() + i_dev_;

    Eval ev;
    Outputs& o = ev.out;
    Dq i_dev;
    if (device_ == Device::Sc) {
        i_dev = Dq(d[kId], d[kIq]) * std::polar(1.0, d[kDelta]);
    } else {
        i_dev = Dq(d[kItD], d[kItQ]);
    }
    const auto net = network::network_step(i_dev, i_g, g, cond_, p.network, p.grid);
    const double p_g = network::to_grid_base(net.p_grid, p.grid.scr);
    const auto gd = network::grid_frequency_derivatives(g, p.grid, p_g, wb);

    const Dq s_pcc = net.v_pcc * std::conj(i_dev);
    o.p_pcc = s_pcc.real();
    o.q_pcc = s_pcc.imag();
    o.f_grid = f_n * (1.0 + g.delta_omega);
    o.vmag_pcc = std::abs(net.v_pcc);
    o.imag_pcc = std::abs(i_dev);
    o.p_grid = net.p_grid;
    o.p_branches = (net.v_pcc * std::conj(i_dev + i_g)).real();
    o.p_load = net.p_load;
    o.p_fault = net.p_fault;

    if (device_ == Device::Sc) {
        const machine::ScState s{d[kId], d[kIq], d[kPsiFd], d[kPsi1d], d[kPsi2q], d[kOmega], d[kDelta]};
        const machine::ExternalBranch br{transformer_.r, transformer_.x, false};
        const auto sd = machine::sc_derivatives(sc_model_, s, avr_.v_fd(), net.v_pcc, br, 1.0 + g.delta_omega);
        o.f_dev = f_n * s.omega;
        o.vmag_lv = std::abs(sd.v_terminal);
        o.vdc = kNaN;
        o.delta = std::remainder(s.delta - g.theta, 2.0 * M_PI);
        o.e_fd = avr_.v_fd();
        o.kinetic_energy = p.sc.h * s.omega * s.omega;
        o.air_gap_power = sd.air_gap_power;
        if (dx) {
            double* dd = dx->data() + i_dev_;
            dd[kId] = sd.d.i_d;
            dd[kIq] = sd.d.i_q;
            dd[kPsiFd] = sd.d.psi_fd;
            dd[kPsi1d] = sd.d.psi_1d;
            dd[kPsi2q] = sd.d.psi_2q;
            dd[kOmega] = sd.d.omega;
            dd[kDelta] = sd.d.delta;
        }
    } else {
        const converter::VscPlant s{{d[kIcD], d[kIcQ]}, {d[kVcD], d[kVcQ]}, {d[kItD], d[kItQ]}, d[kTheta], d[kVdc]};
        o.f_dev = f_n * vsc_.omega_vsc;
        o.vmag_lv = std::abs(converter::filter_node_voltage(s, p.vsc));
        o.vdc = s.v_dc;
        o.delta = kNaN;
        o.current_limited = vsc_.current_limited;
        o.imag_conv = std::abs(s.i_conv);
        if (dx) {
            const auto pd = converter::plant_derivatives(s, p.vsc, transformer_, vsc_.e_conv,
                                                         vsc_.dc.source_lag.value, vsc_.omega_vsc, net.v_pcc, wb);
            double* dd = dx->data() + i_dev_;
            dd[kIcD] = pd.d.i_conv.real();
            dd[kIcQ] = pd.d.i_conv.imag();
            dd[kVcD] = pd.d.v_cap.real();
            dd[kVcQ] = pd.d.v_cap.imag();
            dd[kItD] = pd.d.i_grid.real();
            dd[kItQ] = pd.d.i_grid.imag();
            dd[kTheta] = pd.d.theta;
            dd[kVdc] = pd.d.v_dc;
        }
    }
    if (dx) {
        auto& out = *dx;
        out[i_dw_] = gd.d.delta_omega;
        out[i_llx_] = gd.d.leadlag_x;
        out[i_theta_g_] = gd.d.theta;
        out[i_ig_d_] = net.di_grid.real();
        out[i_ig_q_] = net.di_grid.imag();
    }
    return ev;
}

void System::derivatives(std::span<const double> x, std::span<double> dx) const { evaluate(x, &dx); }

Outputs System::outputs(std::span<const double> x) const { return evaluate(x, nullptr).out; }

}  // namespace gridform
