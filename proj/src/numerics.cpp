#include "gridform/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gridform::numerics {

void require_finite(double v, std::string_view what) {
    if (!std::isfinite(v)) {
        throw NumericalError("non-finite value in " + std::string(what));
    }
}

BlockState lpf_step(BlockState state, double u, double omega_c, double dt) {
    require_finite(u, "low-pass input");
    if (!(omega_c > 0.0) || !(dt > 0.0)) {
        throw ConfigError("lpf_step requires omega_c > 0 and dt > 0");
    }
    const double alpha = -std::expm1(-omega_c * dt);
    state.value += alpha * (u - state.value);
    return state;
}

namespace {

struct TustinCoeffs {
    double a;
    double b;
};

TustinCoeffs tustin(double t_den, double dt) {
    return {(2.0 * t_den - dt) / (2.0 * t_den + dt), dt / (2.0 * t_den + dt)};
}

}  // namespace

// (1 + s*tn)/(1 + s*td) = tn/td + (1 - tn/td) / (1 + s*td). The lag part is
// discretized with Tustin in transposed direct form: z = w + b*u, w' = a*z + b*u.
LeadLagOutput leadlag_step(BlockState state, double u, double t_num, double t_den, double dt) {
    require_finite(u, "lead-lag input");
    if (!(t_den > 0.0)) {
        throw ConfigError("lead-lag requires T_D > 0");
    }
    if (t_num < 0.0) {
        throw ConfigError("lead-lag requires T_N >= 0");
    }
    const auto [a, b] = tustin(t_den, dt);
    const double ratio = t_num / t_den;
    const double z = state.x + b * u;
    state.x = a * z + b * u;
    state.value = ratio * u + (1.0 - ratio) * z;
    return {state, state.value};
}

BlockState leadlag_settled(double u, double t_num, double t_den, double dt) {
    (void)t_num;
    const auto [a, b] = tustin(t_den, dt);
    // Fixed point of z = w + b*u, w = a*z + b*u with z = u.
    return BlockState{u, (a + b) * u};
}

PiOutput pi_step(PiState state, double error, double dt) {
    require_finite(error, "PI error");
    const double candidate = state.integral + state.ki * error * dt;
    const double y_raw = state.kp * error + candidate;
    bool saturated = false;
    double y = y_raw;
    if (y_raw > state.max) {
        y = state.max;
        saturated = true;
        if (error <= 0.0) {
            state.integral = candidate;
        }
    } else if (y_raw < state.min) {
        y = state.min;
        saturated = true;
        if (error >= 0.0) {
            state.integral = candidate;
        }
    } else {
        state.integral = candidate;
    }
    if (saturated) {
        y = std::clamp(state.kp * error + state.integral, state.min, state.max);
    }
    return {state, y, saturated};
}

std::size_t StateLayout::add(std::string name) {
    if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
        throw ConfigError("duplicate state name: " + name);
    }
    names_.push_back(std::move(name));
    return names_.size() - 1;
}

std::size_t StateLayout::index(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw std::out_of_range("unknown state: " + std::string(name));
    }
    return static_cast<std::size_t>(it - names_.begin());
}

void validate(const IntegratorConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
        throw ConfigError("dt must be > 0");
    }
}

FixedStepIntegrator::FixedStepIntegrator(IntegratorConfig cfg, std::shared_ptr<const StateLayout> layout)
    : cfg_(cfg), layout_(std::move(layout)) {
    validate(cfg_);
}

void FixedStepIntegrator::eval(const DerivativeFn& f, double t, std::span<const double> x, std::span<double> dx) {
    f(t, x, dx);
    for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!std::isfinite(dx[i])) {
            std::ostringstream msg;
            msg << "non-finite derivative at t=" << t << " s in state " << i;
            if (layout_ && i < layout_->size()) {
                msg << " (" << layout_->name(i) << ")";
            }
            throw NumericalError(msg.str());
        }
    }
}

void FixedStepIntegrator::step(const DerivativeFn& f, std::span<double> x, double t) {
    const std::size_t n = x.size();
    const double h = cfg_.dt;
    k1_.resize(n);
    k2_.resize(n);
    k3_.resize(n);
    k4_.resize(n);
    tmp_.resize(n);

    eval(f, t, x, k1_);
    if (cfg_.method == Method::Trapezoidal) {
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * k1_[i];
        eval(f, t + h, tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) x[i] += 0.5 * h * (k1_[i] + k2_[i]);
        return;
    }

    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    eval(f, t + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    eval(f, t + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * k3_[i];
    eval(f, t + h, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
}

StateVector integrate_step(const DerivativeFn& f, StateVector x, double t, const IntegratorConfig& cfg) {
    FixedStepIntegrator integrator(cfg, x.layout);
    integrator.step(f, x.values, t);
    return x;
}

}  // namespace gridform::numerics
