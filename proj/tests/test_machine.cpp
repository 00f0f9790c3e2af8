#include "gridform/machine.hpp"
#include "gridform/metrics.hpp"
#include "gridform/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace gridform;
using namespace gridform::machine;

namespace {

constexpr double kWb = 2.0 * std::numbers::pi * 50.0;
constexpr double kDt = 50e-6;

std::vector<double> pack(const ScState& s) { return {s.i_d, s.i_q, s.psi_fd, s.psi_1d, s.psi_2q, s.omega, s.delta}; }
ScState unpack(std::span<const double> x) { return {x[0], x[1], x[2], x[3], x[4], x[5], x[6]}; }

// Terminal P that covers the stator losses at reactive output q: a
// condenser has no prime mover, so it draws R_s |I|^2 from the node.
double loss_power(double r_s, Dq v, double q) {
    double p = 0.0;
    for (int k = 0; k < 50; ++k) p = -r_s * std::norm(Dq(p, q) / v);
    return p;
}

double max_abs(const ScState& d) {
    double m = 0.0;
    for (double v : pack(d)) m = std::max(m, std::abs(v));
    return m;
}

// Machine alone against a fixed node through `branch`, field voltage held.
struct Bench {
    ScModel model;
    ExternalBranch branch;
    Dq v_node;
    double e_fd;

    void run(std::vector<double>& x, double t_end, const std::function<void(double, const ScDerivatives&)>& probe = {}) {
        numerics::FixedStepIntegrator it({kDt});
        auto f = [&](double, std::span<const double> s, std::span<double> d) {
            const auto o = sc_derivatives(model, unpack(s), e_fd, v_node, branch, 1.0);
            const auto v = pack(o.d);
            std::copy(v.begin(), v.end(), d.begin());
        };
        const int n = static_cast<int>(std::lround(t_end / kDt));
        for (int k = 0; k < n; ++k) {
            if (probe) probe(k * kDt, sc_derivatives(model, unpack(x), e_fd, v_node, branch, 1.0));
            it.step(f, x, k * kDt);
        }
        if (probe) probe(n * kDt, sc_derivatives(model, unpack(x), e_fd, v_node, branch, 1.0));
    }
};

}  // namespace

TEST_CASE("swing equation examples") {
    CHECK(swing_acceleration(-0.1, 1.0, 1.0, 5.0, 0.0) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(swing_acceleration(0.0, 1.01, 1.0, 5.0, 10.0) == doctest::Approx(-0.01).epsilon(1e-12));
}

TEST_CASE("short-circuit current I_b") {
    CHECK(std::abs(short_circuit_current_ib(1.0, 0.17) - 5.88) < 0.01);
    CHECK(short_circuit_current_ib(1.0, 0.5) == doctest::Approx(2.0));
    CHECK(std::abs(short_circuit_current_ib(0.95, 0.17) - 5.588) < 1e-3);
    CHECK_THROWS_AS(short_circuit_current_ib(1.0, 0.0), ConfigError);
}

TEST_CASE("parameter conversion round trip") {
    const ScParams p;
    const auto w = to_windings(p, kWb);
    // Standard parameters recomputed from the winding set (independent of the model code).
    const double par_ad_fd = w.x_ad * w.x_fd / (w.x_ad + w.x_fd);
    const double xd_p = p.x_l + par_ad_fd;
    const double xd_pp = p.x_l + 1.0 / (1.0 / w.x_ad + 1.0 / w.x_fd + 1.0 / w.x_1d);
    const double xq_pp = p.x_l + 1.0 / (1.0 / w.x_aq + 1.0 / w.x_2q);
    const double td0_p = (w.x_ad + w.x_fd) / (kWb * w.r_fd);
    const double td0_pp = (w.x_1d + par_ad_fd) / (kWb * w.r_1d);
    const double tq0_pp = (w.x_aq + w.x_2q) / (kWb * w.r_2q);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    CHECK(rel(w.x_ad + p.x_l, p.x_d) < 5e-3);
    CHECK(rel(w.x_aq + p.x_l, p.x_q) < 5e-3);
    CHECK(rel(xd_p, p.x_d_p) < 5e-3);
    CHECK(rel(xd_pp, p.x_d_pp) < 5e-3);
    CHECK(rel(xq_pp, p.x_q_pp) < 5e-3);
    CHECK(rel(td0_p, p.t_d0_p) < 5e-3);
    CHECK(rel(td0_pp, p.t_d0_pp) < 5e-3);
    CHECK(rel(tq0_pp, p.t_q0_pp) < 5e-3);
}

TEST_CASE("invalid machine parameters") {
    ScParams p;
    p.x_d_p = 0.1;  // below X''_d
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = {};
    p.h = 0.0;
    CHECK_THROWS_AS(validate(p), ConfigError);
}

TEST_CASE("init: no-load and loaded equilibria") {
    const ScModel m(ScParams{}, kWb);
    SUBCASE("V = 1, P = Q = 0") {
        const auto op = init_sc_pq(m, Dq(1.0, 0.0), 0.0, 0.0, 1.0, 5.0);
        const auto d = sc_derivatives(m, op.state, op.e_fd, Dq(1.0, 0.0), {}, 1.0);
        CHECK(max_abs(d.d) < 1e-8);
        CHECK(std::abs(d.torque) < 1e-12);
        // Open-circuit excitation: E_fd = 1 gives 1 pu at rated speed.
        CHECK(std::abs(op.e_fd - 1.0) < 1e-9);
    }
    SUBCASE("V = 1, Q = 0.3") {
        const Dq v = std::polar(1.0, 0.3);
        const double p = loss_power(m.params().r_s, v, 0.3);
        const auto op = init_sc_pq(m, v, p, 0.3, 1.0, 5.0);
        const auto d = sc_derivatives(m, op.state, op.e_fd, v, {}, 1.0);
        CHECK(max_abs(d.d) < 1e-8);
        const Dq s = d.v_terminal * std::conj(d.i_terminal);
        CHECK(std::abs(s.imag() - 0.3) < 1e-9);
    }
    SUBCASE("field ceiling") {
        CHECK_THROWS_AS(init_sc_pq(m, Dq(1.0, 0.0), 0.0, 3.0, 1.0, 5.0), InitError);
    }
}

TEST_CASE("soak after init stays put") {
    const ScModel m(ScParams{}, kWb);
    const Dq v(1.0, 0.0);
    const double p = loss_power(m.params().r_s, v, 0.2);
    const auto op = init_sc_pq(m, v, p, 0.2, 1.0, 5.0);
    const ExternalBranch br{0.005, 0.15};
    // Node voltage that delivers the same terminal conditions through the branch.
    const Dq i = std::conj(Dq(p, 0.2) / v);
    Bench b{m, br, v - Dq(br.r, br.x) * i, op.e_fd};
    const auto start = sc_derivatives(m, op.state, op.e_fd, b.v_node, br, 1.0);
    auto x = pack(op.state);
    b.run(x, 5.0);
    const auto end = sc_derivatives(m, unpack(x), op.e_fd, b.v_node, br, 1.0);
    CHECK(std::abs(end.v_terminal - start.v_terminal) < 1e-4);
    CHECK(std::abs(end.i_terminal - start.i_terminal) < 1e-4);
    CHECK(std::abs(x[5] - 1.0) < 1e-4);
}

TEST_CASE("open terminals with frozen field keep |V| constant") {
    const ScModel m(ScParams{}, kWb);
    const auto op = init_sc_pq(m, Dq(1.0, 0.0), 0.0, 0.0, 1.0, 5.0);
    Bench b{m, ExternalBranch{0.0, 0.0, true}, Dq(0.0, 0.0), op.e_fd};
    auto x = pack(op.state);
    double vmin = 10.0, vmax = 0.0;
    b.run(x, 2.0, [&](double, const ScDerivatives& d) {
        vmin = std::min(vmin, std::abs(d.v_terminal));
        vmax = std::max(vmax, std::abs(d.v_terminal));
    });
    CHECK(vmax - vmin < 1e-9);
}

TEST_CASE("energy bookkeeping of the swing equation") {
    const ScModel m(ScParams{}, kWb);
    const Dq v(1.0, 0.0);
    const ExternalBranch br{0.005, 0.15};
    const auto op = init_sc_pq(m, v, 0.0, 0.0, 1.0, 5.0);
    // Rotate the node by 10 degrees: the rotor swings and exchanges energy.
    Bench b{m, br, v * std::polar(1.0, 10.0 * std::numbers::pi / 180.0), op.e_fd};
    auto x = pack(op.state);
    const double h = m.params().h;
    const double ke0 = h * x[5] * x[5];
    double work = 0.0, p_prev = 0.0, peak = 0.0;
    bool first = true;
    b.run(x, 1.0, [&](double, const ScDerivatives& d) {
        if (!first) work += 0.5 * kDt * (p_prev + d.air_gap_power);
        p_prev = d.air_gap_power;
        first = false;
    });
    const double dke = h * x[5] * x[5] - ke0;
    // Rotor must have moved appreciably for the check to mean anything.
    peak = std::abs(dke);
    CHECK(peak > 1e-4);
    CHECK(std::abs(dke + work) <= 1e-3 * std::max(peak, std::abs(work)));
}

TEST_CASE("bolted terminal fault: current at 100 ms near I_b") {
    const ScModel m(ScParams{}, kWb);
    const auto op = init_sc_pq(m, Dq(1.0, 0.0), 0.0, 0.0, 1.0, 5.0);
    Bench b{m, ExternalBranch{0.0, 0.0}, Dq(0.0, 0.0), op.e_fd};
    auto x = pack(op.state);
    b.run(x, 0.1);
    const double i100 = std::hypot(x[0], x[1]);
    const double ib = short_circuit_current_ib(1.0, m.params().x_d_p);
    CHECK(std::abs(i100 - ib) <= 0.2 * ib);
}

TEST_CASE("speed bound") {
    const ScModel m(ScParams{}, kWb);
    ScState s;
    s.omega = 1.25;
    CHECK_THROWS_AS(sc_derivatives(m, s, 1.0, Dq(1.0, 0.0), {}, 1.0), NumericalError);
}

TEST_CASE("AVR: equilibrium and fault forcing") {
    const AvrParams p;
    auto a = init_avr(p, 1.3, 1.0, 1.0);
    const auto a1 = avr_step(a, p, 1.0, kDt);
    CHECK(a1.v_fd() == doctest::Approx(1.3).epsilon(1e-12));

    double t_ceiling = -1.0;
    for (int k = 1; k <= 4000; ++k) {
        a = avr_step(a, p, 0.0, kDt);
        REQUIRE(a.v_fd() <= p.e_fd_max + 1e-12);
        if (t_ceiling < 0.0 && a.v_fd() >= p.e_fd_max - 1e-9) t_ceiling = k * kDt;
    }
    CHECK(t_ceiling > 0.0);
    CHECK(t_ceiling <= 0.2);

    // Overvoltage drives the field down to the floor, never below.
    for (int k = 0; k < 40000; ++k) {
        a = avr_step(a, p, 2.0, kDt);
        REQUIRE(a.v_fd() >= 0.0);
    }
    CHECK(a.v_fd() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("AVR: 2% setpoint step settling on the full test case") {
    auto sc = build_scenario(ScenarioKind::VoltageDip, Device::Sc);
    const double step = 0.02;
    sc.events = {network::Event{sc.event_time(), network::EventKind::SetpointStep, step}};
    sc.horizon = sc.event_time() + 3.0;
    const auto tr = simulate(sc);
    const auto st = metrics::settling_time(tr.t, tr.channel("Vmag_lv"), 1.0 + step, 0.05 * step, tr.event_time);
    MESSAGE("AVR settling time " << st.time << " s");
    CHECK(st.settled);
    CHECK(std::abs(st.time - 0.5) <= 0.15);
}
