#include "gridform/parameters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace gridform {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

struct Entry {
    std::string key;
    std::function<std::string(const CaseParams&)> get;
    std::function<void(CaseParams&, std::string_view)> set;
};

double parse_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "off" || text == "no") return false;
    throw ConfigError(std::string(key) + ": expected true/false, got '" + std::string(text) + "'");
}

template <typename Access>
Entry number(std::string key, Access access) {
    return {key,
            [access](const CaseParams& p) { return format_double(access(const_cast<CaseParams&>(p))); },
            [access, key](CaseParams& p, std::string_view v) { access(p) = parse_double(key, v); }};
}

template <typename Access>
Entry flag(std::string key, Access access) {
    return {key,
            [access](const CaseParams& p) { return std::string(access(const_cast<CaseParams&>(p)) ? "true" : "false"); },
            [access, key](CaseParams& p, std::string_view v) { access(p) = parse_bool(key, v); }};
}

// Numeric keys where "auto" (stored as 0) requests a derived value.
template <typename Access>
Entry automatic(std::string key, Access access) {
    return {key,
            [access](const CaseParams& p) {
                const double v = access(const_cast<CaseParams&>(p));
                return v > 0.0 ? format_double(v) : std::string("auto");
            },
            [access, key](CaseParams& p, std::string_view v) {
                if (v == "auto") {
                    access(p) = 0.0;
                    return;
                }
                const double x = parse_double(key, v);
                if (!(x > 0.0)) throw ConfigError(key + " must be > 0 or 'auto'");
                access(p) = x;
            }};
}

#define GF_NUM(key, member) number(key, [](CaseParams& p) -> double& { return p.member; })
#define GF_FLAG(key, member) flag(key, [](CaseParams& p) -> bool& { return p.member; })
#define GF_AUTO(key, member) automatic(key, [](CaseParams& p) -> double& { return p.member; })

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = [] {
        std::vector<Entry> e;
        e.push_back(GF_NUM("system.s_n", network.s_n));
        e.push_back(GF_NUM("system.u_n", network.u_n));
        e.push_back(GF_NUM("system.f_n", network.f_n));

        e.push_back(GF_NUM("sc.h_sc", sc.h));
        e.push_back(GF_NUM("sc.k_d", sc.k_d));
        e.push_back(GF_NUM("sc.xd", sc.x_d));
        e.push_back(GF_NUM("sc.xd_p", sc.x_d_p));
        e.push_back(GF_NUM("sc.xd_pp", sc.x_d_pp));
        e.push_back(GF_NUM("sc.xq", sc.x_q));
        e.push_back(GF_NUM("sc.xq_pp", sc.x_q_pp));
        e.push_back(GF_NUM("sc.xl", sc.x_l));
        e.push_back(GF_NUM("sc.rs", sc.r_s));
        e.push_back(GF_NUM("sc.td0_p", sc.t_d0_p));
        e.push_back(GF_NUM("sc.td0_pp", sc.t_d0_pp));
        e.push_back(GF_NUM("sc.tq_pp", sc.t_q0_pp));
        e.push_back({"sc.pole_pairs", [](const CaseParams& p) { return std::to_string(p.sc.pole_pairs); },
                     [](CaseParams& p, std::string_view v) {
                         const double x = parse_double("sc.pole_pairs", v);
                         if (x != std::floor(x)) throw ConfigError("sc.pole_pairs must be an integer");
                         p.sc.pole_pairs = static_cast<int>(x);
                     }});
        e.push_back(GF_NUM("sc.avr.tr", avr.t_r));
        e.push_back(GF_NUM("sc.avr.kp", avr.kp));
        e.push_back(GF_NUM("sc.avr.ki", avr.ki));
        e.push_back(GF_NUM("sc.avr.te", avr.t_e));
        e.push_back(GF_NUM("sc.avr.efd_max", avr.e_fd_max));
        e.push_back(GF_NUM("sc.avr.vr_max", avr.v_r_max));

        e.push_back(GF_NUM("vsc.mp", vsc.m_p));
        e.push_back(GF_NUM("vsc.nq", vsc.n_q));
        e.push_back(GF_NUM("vsc.wc", vsc.omega_c));
        e.push_back(GF_NUM("vsc.tau_gf", vsc.tau_gf));
        e.push_back(GF_FLAG("vsc.tgf_mode", vsc.tgf_mode));
        e.push_back(GF_NUM("vsc.pset", vsc.p_set));
        e.push_back(GF_NUM("vsc.qset", vsc.q_set));
        e.push_back(GF_NUM("vsc.vset", vsc.v_set));
        e.push_back(GF_NUM("vsc.lf", vsc.l_f));
        e.push_back(GF_NUM("vsc.cf", vsc.c_f));
        e.push_back(GF_NUM("vsc.rf", vsc.r_f));
        e.push_back(GF_NUM("vsc.tvi.i_thr", vsc.tvi.i_thr));
        e.push_back(GF_NUM("vsc.tvi.i_max", vsc.tvi.i_max));
        e.push_back(GF_NUM("vsc.tvi.sigma_xr", vsc.tvi.sigma_xr));
        e.push_back(GF_AUTO("vsc.tvi.k_v", vsc.tvi.k_v));
        e.push_back(GF_NUM("vsc.cdc", vsc.c_dc));
        e.push_back(GF_NUM("vsc.tdc", vsc.t_dc));
        e.push_back(GF_NUM("vsc.vdc_ref", vsc.v_dc_ref));
        e.push_back(GF_NUM("vsc.so_a", vsc.so_a));
        e.push_back(GF_FLAG("vsc.leadlag", vsc.leadlag_enabled));
        e.push_back(GF_NUM("vsc.ll_tn", vsc.ll_tn));
        e.push_back(GF_NUM("vsc.ll_td", vsc.ll_td));
        e.push_back(GF_NUM("vsc.f_current", vsc.f_current));
        e.push_back(GF_NUM("vsc.f_voltage", vsc.f_voltage));
        e.push_back(GF_NUM("vsc.v_zero_ratio", vsc.v_zero_ratio));
        e.push_back(GF_NUM("vsc.k_ff", vsc.k_ff));
        e.push_back(GF_NUM("vsc.m_max", vsc.m_max));
        e.push_back(GF_NUM("vsc.r_ad", vsc.r_ad));
        e.push_back(GF_NUM("vsc.rd", vsc.r_d));
        e.push_back(GF_FLAG("vsc.grid_side_limit", vsc.grid_side_limit));
        e.push_back(GF_NUM("vsc.k_dff", vsc.k_dff));
        e.push_back(GF_NUM("vsc.dff_rate_max", vsc.dff_rate_max));

        e.push_back(GF_NUM("grid.scr", grid.scr));
        e.push_back(GF_NUM("grid.x_over_r", grid.x_over_r));
        e.push_back(GF_NUM("grid.h_g", grid.h_g));
        e.push_back(GF_NUM("grid.r", grid.r_droop));
        e.push_back(GF_NUM("grid.t_n", grid.t_n));
        e.push_back(GF_NUM("grid.t_d", grid.t_d));
        e.push_back({"grid.pg0",
                     [](const CaseParams& p) { return p.grid_pg0_auto ? std::string("auto") : format_double(p.grid.p_g0); },
                     [](CaseParams& p, std::string_view v) {
                         if (v == "auto") {
                             p.grid_pg0_auto = true;
                             return;
                         }
                         p.grid.p_g0 = parse_double("grid.pg0", v);
                         p.grid_pg0_auto = false;
                     }});
        e.push_back(GF_AUTO("grid.vg", grid.v_g));

        e.push_back(GF_NUM("transformer.x_tr", network.x_tr));
        e.push_back(GF_NUM("transformer.r_tr", network.r_tr));
        e.push_back(GF_NUM("load.p", network.load_p));
        e.push_back(GF_NUM("load.q", network.load_q));
        e.push_back(GF_NUM("fault.r_fault", network.r_fault));

        e.push_back(GF_NUM("scenario.event_time", scenario.event_time));
        e.push_back(GF_NUM("scenario.dt", scenario.dt));
        e.push_back(GF_AUTO("scenario.control_period", scenario.control_period));
        e.push_back(GF_NUM("scenario.soak", scenario.soak));
        e.push_back({"scenario.sample_stride", [](const CaseParams& p) { return std::to_string(p.scenario.sample_stride); },
                     [](CaseParams& p, std::string_view v) {
                         const double x = parse_double("scenario.sample_stride", v);
                         if (x != std::floor(x) || x < 1) throw ConfigError("scenario.sample_stride must be an integer >= 1");
                         p.scenario.sample_stride = static_cast<int>(x);
                     }});
        e.push_back(GF_NUM("scenario.frame_angle", scenario.frame_angle));
        e.push_back(GF_NUM("scenario.load_step.dp", scenario.load_step_dp));
        e.push_back(GF_NUM("scenario.load_step.horizon", scenario.load_step_horizon));
        e.push_back(GF_NUM("scenario.voltage_dip.dv", scenario.voltage_dip_dv));
        e.push_back(GF_NUM("scenario.voltage_dip.horizon", scenario.voltage_dip_horizon));
        e.push_back(GF_NUM("scenario.fault_3ph.duration", scenario.fault_duration));
        e.push_back(GF_NUM("scenario.fault_3ph.horizon", scenario.fault_horizon));
        return e;
    }();
    return entries;
}

#undef GF_NUM
#undef GF_FLAG
#undef GF_AUTO

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

int control_substeps(const ScenarioSettings& s) {
    if (s.control_period > 0.0) return static_cast<int>(std::lround(s.control_period / s.dt));
    return std::max(1, static_cast<int>(std::ceil(50e-6 / s.dt - 1e-9)));
}

double control_period(const ScenarioSettings& s) { return control_substeps(s) * s.dt; }

void validate(const CaseParams& p) {
    network::validate(p.network);
    network::validate(p.grid);
    machine::validate(p.sc);
    machine::validate(p.avr);
    converter::validate(p.vsc);
    const auto& s = p.scenario;
    require(s.dt > 0.0, "scenario.dt must be > 0");
    require(s.dt <= 100e-6, "scenario.dt must be <= 100e-6 s for full-system runs");
    if (s.control_period > 0.0) {
        const double m = s.control_period / s.dt;
        require(std::abs(m - std::round(m)) < 1e-9 * m && std::round(m) >= 1.0,
                "scenario.control_period must be a positive integer multiple of scenario.dt");
    }
    require(s.soak >= 0.0, "scenario.soak must be >= 0");
    require(s.event_time >= 0.0, "scenario.event_time must be >= 0");
    require(s.fault_duration > 0.0, "scenario.fault_3ph.duration must be > 0");
    require(s.load_step_horizon > s.event_time, "scenario.load_step.horizon must exceed the event time");
    require(s.voltage_dip_horizon > s.event_time, "scenario.voltage_dip.horizon must exceed the event time");
    require(s.fault_horizon > s.event_time + s.fault_duration, "scenario.fault_3ph.horizon must exceed fault clearance");
    require(s.voltage_dip_dv > -1.0, "scenario.voltage_dip.dv must be > -1");
}

void set_parameter(CaseParams& p, std::string_view key, std::string_view value) {
    for (const auto& e : registry()) {
        if (e.key == key) {
            e.set(p, value);
            return;
        }
    }
    std::ostringstream msg;
    msg << "unknown parameter '" << key << "'; valid keys:";
    for (const auto& e : registry()) msg << ' ' << e.key;
    throw ConfigError(msg.str());
}

std::vector<std::pair<std::string, std::string>> list_parameters(const CaseParams& p) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : registry()) out.emplace_back(e.key, e.get(p));
    return out;
}

std::vector<std::string> parameter_keys() {
    std::vector<std::string> out;
    for (const auto& e : registry()) out.push_back(e.key);
    return out;
}

}  // namespace gridform
