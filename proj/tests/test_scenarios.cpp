#include "gridform/metrics.hpp"
#include "gridform/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace gridform;

namespace {

const char* const kCompared[] = {"P_pcc", "Q_pcc", "f_dev", "f_grid", "Vmag_pcc", "Vmag_lv", "Imag_pcc"};

// RMS difference of two traces on the sample times they share.
double rms_on_common_samples(const TraceSet& a, const TraceSet& b, const std::string& ch) {
    const auto& ya = a.channel(ch);
    const auto& yb = b.channel(ch);
    double s = 0.0;
    int n = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        while (j < b.size() && b.t[j] < a.t[i] - 1e-9) ++j;
        if (j < b.size() && std::abs(b.t[j] - a.t[i]) < 1e-9) {
            const double scale = ch.rfind("f_", 0) == 0 ? 1.0 / 50.0 : 1.0;  // Hz to pu
            s += std::pow((ya[i] - yb[j]) * scale, 2);
            ++n;
        }
    }
    REQUIRE(n > 100);
    return std::sqrt(s / n);
}

}  // namespace

TEST_CASE("scenario defaults") {
    const auto f = build_scenario(ScenarioKind::Fault3ph, Device::Vsc);
    REQUIRE(f.events.size() == 2);
    CHECK(f.events[0].kind == network::EventKind::FaultOn);
    CHECK(f.events[0].time == doctest::Approx(1.0));
    CHECK(f.events[1].kind == network::EventKind::FaultOff);
    CHECK(f.events[1].time == doctest::Approx(1.15));
    CHECK(f.horizon == doctest::Approx(6.0));

    const auto l = build_scenario(ScenarioKind::LoadStep, Device::Sc);
    REQUIRE(l.events.size() == 1);
    CHECK(l.events[0].kind == network::EventKind::LoadStep);
    CHECK(l.events[0].value == doctest::Approx(-0.4));
    CHECK(l.horizon == doctest::Approx(10.0));

    const auto v = build_scenario(ScenarioKind::VoltageDip, Device::Vsc, {{"grid.scr", "6"}});
    const auto z = network::scr_to_impedance(v.params.grid.scr, v.params.grid.x_over_r);
    CHECK(std::abs(z.x - 0.167) < 0.002);
    REQUIRE(v.events.size() == 1);
    CHECK(v.events[0].kind == network::EventKind::VoltageStep);
    CHECK(v.events[0].value == doctest::Approx(-0.05));

    const auto& p = l.params;
    CHECK(p.network.s_n == 1e6);
    CHECK(p.network.u_n == 606.0);
    CHECK(p.network.f_n == 50.0);
    CHECK(p.sc.h == 5.0);
    CHECK(p.vsc.m_p == 0.04);
    CHECK(p.vsc.omega_c == 2.5);
    CHECK(p.vsc.tau_gf == 0.1);
    CHECK(p.vsc.n_q == 0.0);
    CHECK(p.vsc.p_set == 0.0);
    CHECK(p.grid.scr == 3.0);
    CHECK(p.grid.h_g == 5.0);
    CHECK(p.grid.r_droop == 0.04);
    CHECK(p.grid.t_n == 1.0);
    CHECK(p.grid.t_d == 6.0);
    CHECK(p.vsc.tvi.i_thr == 1.0);
    CHECK(p.vsc.tvi.i_max == 1.1);
    CHECK(p.scenario.sample_stride == 10);
}

TEST_CASE("unknown override lists the valid keys") {
    try {
        build_scenario(ScenarioKind::LoadStep, Device::Sc, {{"vsc.no_such_key", "1"}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("vsc.no_such_key") != std::string::npos);
        CHECK(msg.find("vsc.mp") != std::string::npos);
        CHECK(msg.find("grid.scr") != std::string::npos);
    }
}

TEST_CASE("scenario validation") {
    auto s = build_scenario(ScenarioKind::LoadStep, Device::Sc);
    s.events[0].time = 1.00001;  // not on a 50 us boundary
    CHECK_THROWS_AS(validate(s), ConfigError);

    s = build_scenario(ScenarioKind::LoadStep, Device::Sc);
    s.horizon = 0.5;
    CHECK_THROWS_AS(validate(s), ConfigError);

    s = build_scenario(ScenarioKind::Fault3ph, Device::Sc);
    std::swap(s.events[0], s.events[1]);
    CHECK_THROWS_AS(validate(s), ConfigError);
}

TEST_CASE("initial operating point") {
    for (auto dev : {Device::Sc, Device::Vsc}) {
        const auto st = init_system(build_scenario(ScenarioKind::LoadStep, dev));
        const auto o = st.system.outputs(st.x);
        const std::string what = to_string(dev);
        INFO(what);
        CHECK(std::abs(o.p_pcc) < (dev == Device::Vsc ? 1e-3 : 5e-3));
        CHECK(st.soak.duration == doctest::Approx(5.0));
        CHECK(st.soak.max_drift < 1e-4);
        CHECK(st.soak.residual < 1e-6);
    }
}

TEST_CASE("both devices start from the same network state") {
    const auto a = init_system(build_scenario(ScenarioKind::LoadStep, Device::Sc));
    const auto b = init_system(build_scenario(ScenarioKind::LoadStep, Device::Vsc));
    CHECK(std::abs(a.power_flow.v_pcc - b.power_flow.v_pcc) < 1e-3);
    CHECK(std::abs(a.power_flow.v_source - b.power_flow.v_source) < 1e-3);
    CHECK(std::abs(a.power_flow.i_grid - b.power_flow.i_grid) < 1e-3);
    CHECK(std::abs(a.power_flow.p_grid - b.power_flow.p_grid) < 1e-3);
}

TEST_CASE("no events keeps every channel constant") {
    for (auto dev : {Device::Sc, Device::Vsc}) {
        auto s = build_scenario(ScenarioKind::LoadStep, dev);
        s.events.clear();
        const auto tr = simulate(s);
        for (const char* ch : kCompared) {
            const auto& y = tr.channel(ch);
            const double scale = std::string(ch).rfind("f_", 0) == 0 ? 1.0 / 50.0 : 1.0;
            double worst = 0.0;
            for (double v : y) worst = std::max(worst, std::abs(v - y.front()) * scale);
            const std::string what = std::string(to_string(dev)) + " " + ch;
            INFO(what);
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("trace shape") {
    const auto tr = simulate(build_scenario(ScenarioKind::Fault3ph, Device::Vsc));
    REQUIRE(tr.size() > 2);
    const double h = tr.t[1] - tr.t[0];
    CHECK(h == doctest::Approx(tr.sample));
    for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.t[k] - tr.t[k - 1] == doctest::Approx(h).epsilon(1e-9));
    for (const auto& [name, y] : tr.channels) {
        INFO(name);
        CHECK(y.size() == tr.size());
        if (name == "delta") continue;  // empty for the VSC
        for (double v : y) REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("repeated runs are bit-identical") {
    const auto s = build_scenario(ScenarioKind::Fault3ph, Device::Sc);
    const auto a = simulate(s);
    const auto b = simulate(s);
    CHECK(a.t == b.t);
    CHECK(a.channels == b.channels);
}

TEST_CASE("SC load step heads for the grid droop frequency") {
    auto s = build_scenario(ScenarioKind::LoadStep, Device::Sc, {{"scenario.load_step.horizon", "80"}});
    const auto tr = simulate(s);
    // the condenser has no governor, so the grid droop alone balances the step
    const double oracle = 50.0 * (1.0 + s.params.grid.r_droop * 0.4);
    const double f_end = tr.channel("f_grid").back();
    MESSAGE("f at 80 s ", f_end, " vs ", oracle);
    CHECK(std::abs(f_end - oracle) < 0.05 * (oracle - 50.0));
    CHECK(std::abs(tr.channel("f_dev").back() - f_end) < 1e-6);
}

TEST_CASE("VSC fault current stays limited") {
    const auto tr = simulate(build_scenario(ScenarioKind::Fault3ph, Device::Vsc));
    double peak = 0.0;
    for (double i : tr.channel("Imag_pcc")) peak = std::max(peak, i);
    CHECK(peak <= 1.1 * 1.02);
}

TEST_CASE("step halving converges") {
    for (auto kind : {ScenarioKind::LoadStep, ScenarioKind::VoltageDip, ScenarioKind::Fault3ph}) {
        for (auto dev : {Device::Sc, Device::Vsc}) {
            auto a = build_scenario(kind, dev);
            auto b = build_scenario(kind, dev, {{"scenario.dt", "25e-6"}, {"scenario.sample_stride", "20"}});
            a.horizon = b.horizon = 3.0;
            const auto ta = simulate(a);
            const auto tb = simulate(b);
            for (const char* ch : kCompared) {
                const double r = rms_on_common_samples(ta, tb, ch);
                const std::string what = std::string(to_string(kind)) + " " + to_string(dev) + " " + ch + " rms " + std::to_string(r);
                INFO(what);
                CHECK(r < 1e-4);
            }
        }
    }
}

TEST_CASE("controller period") {
    ScenarioSettings s;
    CHECK(control_substeps(s) == 1);
    s.dt = 25e-6;
    CHECK(control_substeps(s) == 2);
    CHECK(control_period(s) == doctest::Approx(50e-6));
    s.dt = 100e-6;
    CHECK(control_substeps(s) == 1);
    CHECK_THROWS_AS(build_scenario(ScenarioKind::LoadStep, Device::Sc, {{"scenario.control_period", "75e-6"}}),
                    ConfigError);
    const auto ok = build_scenario(ScenarioKind::LoadStep, Device::Sc,
                                   {{"scenario.dt", "25e-6"}, {"scenario.control_period", "100e-6"}});
    CHECK(control_substeps(ok.params.scenario) == 4);
}
