#include "gridform/network.hpp"
#include "gridform/metrics.hpp"
#include "gridform/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace gridform;
using namespace gridform::network;

namespace {

constexpr double kWb = 2.0 * std::numbers::pi * 50.0;

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST_CASE("SCR to grid impedance") {
    const auto z3 = scr_to_impedance(3.0, 10.0);
    CHECK(std::abs(z3.x - 0.33) < 0.005);
    CHECK(std::abs(z3.r - 0.033) < 0.0005);
    const auto z6 = scr_to_impedance(6.0, 10.0);
    CHECK(std::abs(z6.x - 0.167) < 0.002);
    CHECK(std::abs(z6.r - 0.0167) < 0.0002);
    const auto z1 = scr_to_impedance(1.0, 10.0);
    CHECK(std::abs(z1.x - 0.995) < 0.0005);
    CHECK(std::abs(z1.r - 0.0995) < 0.00005);
    CHECK(std::hypot(z1.x, z1.r) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z1.x / z1.r == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("grid frequency model") {
    GridParams gp;
    SUBCASE("balanced power is an equilibrium") {
        const auto d = grid_frequency_derivatives({}, gp, gp.p_g0, kWb);
        CHECK(d.d.delta_omega == 0.0);
        CHECK(d.d.leadlag_x == 0.0);
        CHECK(d.d.theta == 0.0);
    }
    SUBCASE("initial slope of a power step") {
        const auto d = grid_frequency_derivatives({}, gp, gp.p_g0 - 0.4, kWb);
        CHECK(d.d.delta_omega == doctest::Approx(0.4 * (1.0 / 6.0) / 10.0).epsilon(1e-9));
    }
    SUBCASE("droop balance under a sustained deviation") {
        GridState s;
        const double dt = 1e-3;
        // 300 s covers many T_D and the 2 H_g R time constant
        for (int k = 0; k < 300000; ++k) {
            auto f = [&](const GridState& x) { return grid_frequency_derivatives(x, gp, gp.p_g0 - 0.4, kWb).d; };
            const auto k1 = f(s);
            GridState m{s.delta_omega + 0.5 * dt * k1.delta_omega, s.leadlag_x + 0.5 * dt * k1.leadlag_x, 0.0};
            const auto k2 = f(m);
            s.delta_omega += dt * k2.delta_omega;
            s.leadlag_x += dt * k2.leadlag_x;
        }
        CHECK(s.delta_omega == doctest::Approx(0.016).epsilon(1e-6));
        CHECK(s.delta_omega * 50.0 == doctest::Approx(0.8).epsilon(1e-6));
    }
    SUBCASE("angle follows the frequency") {
        const auto d = grid_frequency_derivatives({0.01, 0.0, 0.0}, gp, gp.p_g0, kWb);
        CHECK(d.d.theta == doctest::Approx(kWb * 0.01));
    }
}

TEST_CASE("base conversion round trip") {
    for (double scr : {1.0, 3.0, 6.0, 7.3}) {
        for (double p : {0.5, -0.4, 1.0 / 3.0, 1e-7, 123.456}) {
            const double back = to_device_base(to_grid_base(p, scr), scr);
            CHECK(std::abs(back - p) <= std::numeric_limits<double>::epsilon() * std::abs(p));
        }
    }
}

TEST_CASE("dead network has zero node voltages") {
    NetworkCase nc;
    GridParams gp;
    gp.v_g = 0.0;
    Conditions c;
    c.load_p = 0.5;
    c.v_g = 0.0;
    const auto e = network_step(Dq(0.0, 0.0), Dq(0.0, 0.0), GridState{}, c, nc, gp);
    CHECK(std::abs(e.v_pcc) == 0.0);
    CHECK(std::abs(e.v_source) == 0.0);
    CHECK(std::abs(e.di_grid) == 0.0);
}

TEST_CASE("events") {
    Conditions c;
    c.load_p = 0.5;
    c = apply_event(c, {1.0, EventKind::LoadStep, -0.4});
    CHECK(c.load_p == doctest::Approx(0.1).epsilon(1e-12));
    Conditions v;
    v = apply_event(v, {1.0, EventKind::VoltageStep, -0.05});
    CHECK(v.v_g == doctest::Approx(0.95).epsilon(1e-12));
    Conditions f;
    f = apply_event(f, {1.0, EventKind::FaultOn, 0.0});
    CHECK(f.fault_on);
    f = apply_event(f, {1.15, EventKind::FaultOff, 0.0});
    CHECK_FALSE(f.fault_on);

    CHECK_THROWS_AS(validate_events({{1.0, EventKind::FaultOn, 0.0}, {1.1, EventKind::FaultOn, 0.0}}), ConfigError);
    CHECK_THROWS_AS(validate_events({{1.0, EventKind::FaultOff, 0.0}}), ConfigError);
    CHECK_THROWS_AS(validate_events({{2.0, EventKind::LoadStep, 0.1}, {1.0, EventKind::LoadStep, 0.1}}), ConfigError);
}

TEST_CASE("fault shunt is active for exactly the fault duration") {
    const auto sc = build_scenario(ScenarioKind::Fault3ph, Device::Sc, {{"scenario.sample_stride", "1"}});
    const auto tr = simulate(sc);
    const auto& pf = tr.diagnostics.at("P_fault");
    double first = -1.0, last = -1.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (pf[k] != 0.0) {
            if (first < 0.0) first = tr.t[k];
            last = tr.t[k];
        }
    }
    CHECK(first == doctest::Approx(1.0).epsilon(1e-12));
    // the last faulted sample is one step before clearance
    CHECK(last + sc.dt() == doctest::Approx(1.15).epsilon(1e-12));

    // bolted shunt collapses the PCC voltage within 2 ms
    const auto& v = tr.channel("Vmag_pcc");
    CHECK(metrics::value_at(tr.t, v, 1.002) < 0.01);
}

TEST_CASE("PCC power balance every step") {
    for (auto kind : {ScenarioKind::LoadStep, ScenarioKind::Fault3ph}) {
        for (auto dev : {Device::Sc, Device::Vsc}) {
            auto sc = build_scenario(kind, dev, {{"scenario.sample_stride", "1"}});
            sc.horizon = std::min(sc.horizon, 2.0);
            const auto tr = simulate(sc);
            const auto& pb = tr.diagnostics.at("P_branches");
            const auto& pl = tr.diagnostics.at("P_load");
            const auto& pf = tr.diagnostics.at("P_fault");
            double worst = 0.0;
            for (std::size_t k = 0; k < tr.size(); ++k) worst = std::max(worst, std::abs(pb[k] - pl[k] - pf[k]));
            CHECK(worst < 1e-6);
        }
    }
}

TEST_CASE("power flow satisfies the circuit equations") {
    const CaseParams p;
    const auto zg = scr_to_impedance(p.grid.scr, p.grid.x_over_r);
    Conditions c;
    c.load_p = p.network.load_p;
    c.load_q = p.network.load_q;
    const auto pf = solve_power_flow(p.network, p.grid, c, 1.0, 0.2, 0.0, 1.02);
    // independent forward sweep from the device terminal
    const Dq i_dev = std::conj(Dq(pf.p_device, pf.q_device) / pf.v_lv);
    const Dq v_pcc = pf.v_lv - Dq(p.network.r_tr, p.network.x_tr) * i_dev;
    const Dq y_load = std::conj(Dq(c.load_p, c.load_q)) * p.grid.scr;  // constant admittance at 1 pu
    const Dq i_grid = y_load * v_pcc - i_dev;
    const Dq v_src = v_pcc + Dq(zg.r, zg.x) * i_grid;
    CHECK(std::abs(pf.v_lv) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pf.p_device == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(std::abs(i_dev - pf.i_device) < 1e-9);
    CHECK(std::abs(v_pcc - pf.v_pcc) < 1e-9);
    CHECK(std::abs(i_grid - pf.i_grid) < 1e-9);
    CHECK(std::abs(v_src - pf.v_source) < 1e-9);
    CHECK(std::abs(pf.v_source) == doctest::Approx(1.02).epsilon(1e-10));
}

TEST_CASE("power flow agrees with the dynamic steady state") {
    for (auto dev : {Device::Sc, Device::Vsc}) {
        const auto sc = build_scenario(ScenarioKind::LoadStep, dev);
        const auto st = init_system(sc);
        const auto o = st.system.outputs(st.x);
        const auto& pf = st.power_flow;
        CHECK(std::abs(o.vmag_pcc - std::abs(pf.v_pcc)) < 1e-4);
        CHECK(std::abs(o.vmag_lv - std::abs(pf.v_lv)) < 1e-4);
        CHECK(std::abs(o.imag_pcc - std::abs(pf.i_device)) < 1e-4);
        CHECK(std::abs(o.p_pcc - (pf.v_pcc * std::conj(pf.i_device)).real()) < 1e-4);
        CHECK(std::abs(o.q_pcc - (pf.v_pcc * std::conj(pf.i_device)).imag()) < 1e-4);
        CHECK(std::abs(o.p_grid - pf.p_grid) < 1e-4);
    }
}

TEST_CASE("steady-state droop identity with restoration off") {
    auto sc = build_scenario(ScenarioKind::LoadStep, Device::Vsc,
                             {{"vsc.tgf_mode", "false"}, {"scenario.load_step.horizon", "80"}});
    const auto tr = simulate(sc);
    const auto& gp = sc.params.grid;
    const double f_n = sc.params.network.f_n;
    const double dw = tr.channel("f_grid").back() / f_n - 1.0;
    const double dw_dev = tr.channel("f_dev").back() / f_n - 1.0;
    const double p_dev = tr.channel("P_pcc").back();
    const double p_g = to_grid_base(tr.diagnostics.at("P_grid").back(), gp.scr);
    const double p_g0 = to_grid_base(tr.diagnostics.at("P_grid").front(), gp.scr);
    MESSAGE("dw ", dw, " device ", p_dev, " grid ", p_g - p_g0);
    CHECK(std::abs(dw - dw_dev) < 1e-6);
    // device droop on its own base, grid droop on the grid base
    CHECK(std::abs(p_dev - (sc.params.vsc.p_set - dw / sc.params.vsc.m_p)) < 1e-3);
    CHECK(std::abs((p_g - p_g0) - (-dw / gp.r_droop)) < 1e-3);
}

TEST_CASE("frame invariance") {
    for (auto dev : {Device::Sc, Device::Vsc}) {
        auto a = build_scenario(ScenarioKind::Fault3ph, dev);
        auto b = build_scenario(ScenarioKind::Fault3ph, dev, {{"scenario.frame_angle", "0.7"}});
        a.horizon = b.horizon = 2.0;
        const auto ta = simulate(a);
        const auto tb = simulate(b);
        for (const char* ch : {"P_pcc", "Q_pcc", "f_dev", "f_grid", "Vmag_pcc", "Vmag_lv", "Imag_pcc"}) {
            const double d = max_abs_diff(ta.channel(ch), tb.channel(ch));
            const std::string what = std::string(to_string(dev)) + " " + ch + " " + std::to_string(d);
            INFO(what);
            CHECK(d < 1e-9);
        }
    }
}
