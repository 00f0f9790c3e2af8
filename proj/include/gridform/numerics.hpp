#pragma once

// Fixed-step integration kernel and discrete control-block primitives.
//
// Blocks are pure functions of (state, input, parameters) and return the new
// state; nothing is cached between calls.

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridform {

using Dq = std::complex<double>;

/// Raised when a state or signal stops being finite, or a hard operating
/// bound (speed, DC voltage) is crossed during a run.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid parameter set or scenario definition.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Operating point cannot be reached (e.g. field voltage above ceiling).
class InitError : public std::runtime_error {
public:
    explicit InitError(const std::string& what) : std::runtime_error(what) {}
};

namespace numerics {

/// First-order low-pass or lead-lag state. `x` is only used by the lead-lag
/// (internal Tustin state).
struct BlockState {
    double value = 0.0;
    double x = 0.0;
};

struct PiState {
    double integral = 0.0;
    double kp = 0.0;
    double ki = 0.0;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
};

struct PiOutput {
    PiState state;
    double y = 0.0;
    bool saturated = false;
};

/// Exact exponential update y <- y + (1 - exp(-omega_c*dt)) * (u - y).
BlockState lpf_step(BlockState state, double u, double omega_c, double dt);

struct LeadLagOutput {
    BlockState state;
    double y = 0.0;
};

/// Tustin realization of (1 + s*t_num) / (1 + s*t_den). Unity DC gain.
LeadLagOutput leadlag_step(BlockState state, double u, double t_num, double t_den, double dt);

/// Initial state of a lead-lag settled at a constant input u.
BlockState leadlag_settled(double u, double t_num, double t_den, double dt);

/// PI with output clamp and conditional integration: the integral is frozen
/// whenever the output is clamped and the error pushes further into the limit.
PiOutput pi_step(PiState state, double error, double dt);

/// Clamp-free integrator, y <- y + k*u*dt.
inline double integrator_step(double y, double u, double k, double dt) { return y + k * u * dt; }

// ---------------------------------------------------------------------------
// State vector
// ---------------------------------------------------------------------------

class StateLayout {
public:
    std::size_t add(std::string name);
    std::size_t index(std::string_view name) const;
    const std::string& name(std::size_t i) const { return names_.at(i); }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
};

/// Flat ordered array of continuous states with a named index map.
struct StateVector {
    std::shared_ptr<const StateLayout> layout;
    std::vector<double> values;

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    double at(std::string_view name) const { return values.at(layout->index(name)); }
    std::size_t size() const { return values.size(); }
};

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

enum class Method { Rk4, Trapezoidal };

struct IntegratorConfig {
    double dt = 50e-6;
    Method method = Method::Rk4;
};

void validate(const IntegratorConfig& cfg);

using DerivativeFn = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

/// Reusable stepper; owns its scratch buffers so the hot loop does not
/// allocate. `Trapezoidal` is the explicit predictor-corrector (Heun) form.
class FixedStepIntegrator {
public:
    explicit FixedStepIntegrator(IntegratorConfig cfg, std::shared_ptr<const StateLayout> layout = nullptr);

    void step(const DerivativeFn& f, std::span<double> x, double t);
    const IntegratorConfig& config() const { return cfg_; }

private:
    void eval(const DerivativeFn& f, double t, std::span<const double> x, std::span<double> dx);

    IntegratorConfig cfg_;
    std::shared_ptr<const StateLayout> layout_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

/// One step of `cfg.method` from (t, x). Bit-identical for identical inputs.
StateVector integrate_step(const DerivativeFn& f, StateVector x, double t, const IntegratorConfig& cfg);

/// Throws NumericalError if `v` is not finite.
void require_finite(double v, std::string_view what);

}  // namespace numerics
}  // namespace gridform
