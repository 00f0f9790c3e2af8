// Grid search over the AVR PI gains. Each candidate is scored on the full
// SC test case with a 2% step of the voltage reference: the time for the
// terminal voltage to stay within 5% of the step around the new setpoint.
// The pair closest to the target settling time wins; ties go to the smaller
// overshoot.

#include "gridform/metrics.hpp"
#include "gridform/scenario.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

using namespace gridform;

namespace {

struct Score {
    double kp = 0.0, ki = 0.0;
    double settle = 0.0;
    bool settled = false;
    double overshoot = 0.0;
    bool ok = false;
};

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, n > 1 ? double(i) / (n - 1) : 0.0));
    return g;
}

Score evaluate(double kp, double ki, double horizon) {
    Score s{kp, ki};
    try {
        const Overrides ov{{"sc.avr.kp", format_double(kp)}, {"sc.avr.ki", format_double(ki)}};
        auto sc = build_scenario(ScenarioKind::VoltageDip, Device::Sc, ov);
        const double step = 0.02;
        sc.events = {network::Event{sc.event_time(), network::EventKind::SetpointStep, step}};
        sc.horizon = sc.event_time() + horizon;
        const auto tr = simulate(sc);
        const double v_set = 1.0 + step;
        const auto& v = tr.channel("Vmag_lv");
        const auto st = metrics::settling_time(tr.t, v, v_set, 0.05 * step, tr.event_time);
        s.settle = st.time;
        s.settled = st.settled;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (tr.t[k] > tr.event_time) s.overshoot = std::max(s.overshoot, v[k] - v_set);
        }
        s.ok = true;
    } catch (const std::exception&) {
        s.ok = false;
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AVR gain grid search"};
    double target = 0.5;
    double kp_lo = 0.5, kp_hi = 50.0, ki_lo = 1.0, ki_hi = 500.0;
    int n = 15;
    double horizon = 3.0;
    app.add_option("--target", target, "settling-time target [s]");
    app.add_option("--kp-min", kp_lo);
    app.add_option("--kp-max", kp_hi);
    app.add_option("--ki-min", ki_lo);
    app.add_option("--ki-max", ki_hi);
    app.add_option("-n,--points", n, "grid points per axis")->check(CLI::Range(1, 200));
    app.add_option("--horizon", horizon, "simulated time after the step [s]");
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "print every candidate");
    CLI11_PARSE(app, argc, argv);

    Score best;
    double best_err = std::numeric_limits<double>::infinity();
    for (double kp : log_grid(kp_lo, kp_hi, n)) {
        for (double ki : log_grid(ki_lo, ki_hi, n)) {
            const auto s = evaluate(kp, ki, horizon);
            if (verbose) {
                std::printf("kp=%-10.4g ki=%-10.4g %s settle=%.4f overshoot=%.5f\n", kp, ki,
                            s.ok ? (s.settled ? "ok " : "uns") : "err", s.settle, s.overshoot);
            }
            if (!s.ok || !s.settled) continue;
            const double err = std::abs(s.settle - target);
            if (err < best_err - 1e-9 || (std::abs(err - best_err) <= 1e-9 && s.overshoot < best.overshoot)) {
                best = s;
                best_err = err;
            }
        }
    }
    if (!std::isfinite(best_err)) {
        std::fprintf(stderr, "no candidate settled\n");
        return 1;
    }
    std::printf("sc.avr.kp = %s\nsc.avr.ki = %s\n# settling %.4f s, overshoot %.5f pu\n",
                format_double(best.kp).c_str(), format_double(best.ki).c_str(), best.settle, best.overshoot);
    return 0;
}
