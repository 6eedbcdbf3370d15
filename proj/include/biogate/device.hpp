#pragma once

// Behavioral model of one H-tube: heater coil current -> glass temperature ->
// biological state -> electrical resistance of the protoplasmic tube.

#include "biogate/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace biogate {

// ---------------------------------------------------------------------------
// Heater coil
// ---------------------------------------------------------------------------

struct CoilParams {
    double ambient_temp = 22.0;           ///< degC
    double heat_coeff_k = 28.0;           ///< degC per A^2
    double thermal_time_constant = 30.0;  ///< s

    void check() const {
        if (!(heat_coeff_k > 0.0)) throw InvalidInput("heat coefficient must be positive");
        if (!(thermal_time_constant > 0.0)) throw InvalidInput("thermal time constant must be positive");
        if (!std::isfinite(ambient_temp)) throw InvalidInput("ambient temperature must be finite");
    }

    bool operator==(const CoilParams&) const = default;
};

/// Steady glass-tube temperature under a constant coil current (Joule law).
inline double coil_steady_temp(double current, const CoilParams& params) {
    if (!(current >= 0.0)) throw InvalidInput("coil current must be non-negative");
    return params.ambient_temp + params.heat_coeff_k * current * current;
}

struct ThermalState {
    double temp = 22.0;         ///< degC
    double coil_current = 0.0;  ///< A
};

/// First-order relaxation of the glass temperature toward the steady value for
/// `current`, integrated exactly over `dt`.
inline ThermalState thermal_step(ThermalState state, double current, double dt, const CoilParams& params) {
    if (!(dt > 0.0)) throw InvalidInput("thermal_step: dt must be positive");
    const double target = coil_steady_temp(current, params);
    state.temp = target + (state.temp - target) * std::exp(-dt / params.thermal_time_constant);
    state.coil_current = current;
    return state;
}

// ---------------------------------------------------------------------------
// Protoplasmic tube
// ---------------------------------------------------------------------------

enum class HTubeMode { unentrained, resting, responding, stimulated, reforming, damaged };

constexpr std::string_view to_string(HTubeMode mode) noexcept {
    switch (mode) {
        case HTubeMode::unentrained: return "UNENTRAINED";
        case HTubeMode::resting: return "RESTING";
        case HTubeMode::responding: return "RESPONDING";
        case HTubeMode::stimulated: return "STIMULATED";
        case HTubeMode::reforming: return "REFORMING";
        case HTubeMode::damaged: return "DAMAGED";
    }
    return "?";
}

/// Per-organism parameters. Resistances in ohm, times in seconds,
/// temperatures in degC.
struct HTubeProfile {
    double r_rest_mean = 2.27e6;
    double r_rest_sd = 0.30e6;
    double r_stim_low = 7.0e9;
    double r_stim_high = 1.5e10;
    double r_burst_max = 3.0e14;
    double burst_prob_per_s = 2e-3;
    double response_threshold_temp = 30.0;
    double response_latency_mean = 172.0;
    double response_latency_sd = 9.0;
    double reform_ref_hold = 480.0;
    double reform_ref_duration = 600.0;
    double reform_target_r = 2.5e7;
    /// Time constant of the slow drift from reform_target_r back to the fully
    /// rested level, applied to log(R / r_rest).
    double rest_recovery_tau = 3600.0;
    double damage_temp = 70.0;
    double fatigue_onset = 5100.0;
    double fatigue_slowdown = 0.30;
    bool entrained = true;
    /// Every draw collapses to its central value (zero-noise runs).
    bool noiseless = false;

    static constexpr double min_threshold_temp = 25.0;
    static constexpr double max_threshold_temp = 35.0;

    void check() const {
        const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(r_rest_mean)) throw InvalidInput("r_rest must be positive");
        if (!(r_rest_sd >= 0.0)) throw InvalidInput("r_rest_sd must be non-negative");
        if (!(r_rest_mean < reform_target_r && reform_target_r < r_stim_low && r_stim_low < r_stim_high &&
              r_stim_high < r_burst_max))
            throw InvalidInput("resistance levels must satisfy r_rest < reform_target < r_stim_low < r_stim_high < r_burst_max");
        if (!(burst_prob_per_s >= 0.0 && burst_prob_per_s <= 1.0))
            throw InvalidInput("burst_prob must lie in [0, 1] per second");
        if (!(response_threshold_temp >= min_threshold_temp && response_threshold_temp <= max_threshold_temp))
            throw InvalidInput("threshold_temp must lie in [25, 35] degC");
        if (!(response_threshold_temp < damage_temp)) throw InvalidInput("threshold_temp must be below damage_temp");
        if (!(response_latency_mean >= 0.0) || !(response_latency_sd >= 0.0))
            throw InvalidInput("latency and latency_sd must be non-negative");
        if (!positive(reform_ref_hold) || !positive(reform_ref_duration) || !positive(rest_recovery_tau))
            throw InvalidInput("reform_ref_hold, reform_ref_duration and rest_recovery_tau must be positive");
        if (!positive(fatigue_onset)) throw InvalidInput("fatigue_onset must be positive");
        if (!(fatigue_slowdown >= 0.0 && fatigue_slowdown < 1.0))
            throw InvalidInput("fatigue_slowdown must lie in [0, 1)");
    }

    double stimulated_mid() const { return std::sqrt(r_stim_low * r_stim_high); }

    /// Reforming time constant for a reference-length hold: log R falls at rate
    /// 1/tau, so stimulated_mid() reaches reform_target_r after exactly
    /// reform_ref_duration.
    double reform_tau_ref() const { return reform_ref_duration / std::log(stimulated_mid() / reform_target_r); }

    double rest_floor() const { return std::max(r_rest_mean - 4.0 * r_rest_sd, 0.01 * r_rest_mean); }

    HTubeProfile without_noise() const {
        HTubeProfile p = *this;
        p.r_rest_sd = 0.0;
        p.response_latency_sd = 0.0;
        p.burst_prob_per_s = 0.0;
        p.noiseless = true;
        return p;
    }

    bool operator==(const HTubeProfile&) const = default;
};

struct HTubeState {
    HTubeMode mode = HTubeMode::resting;
    double resistance = 2.27e6;       ///< last sampled value
    double baseline = 2.27e6;         ///< noise-free trajectory the samples scatter around
    double rest_target = 2.27e6;      ///< level the current resting episode relaxes toward
    double latency_target = 0.0;      ///< drawn once per response episode
    double latency_elapsed = 0.0;
    double hold_accumulated = 0.0;    ///< time STIMULATED in the current episode
    double cumulative_stimulated = 0.0;
    double reform_tau = 0.0;          ///< log-resistance slope of the active reforming episode
};

inline HTubeState make_htube(const HTubeProfile& profile) {
    HTubeState s;
    s.mode = profile.entrained ? HTubeMode::resting : HTubeMode::unentrained;
    s.resistance = s.baseline = s.rest_target = profile.r_rest_mean;
    return s;
}

namespace detail {

inline double draw_normal(Rng& rng, double mean, double sd) {
    if (!(sd > 0.0)) return mean;
    return std::normal_distribution<double>(mean, sd)(rng);
}

// Draws from [lo, hi) uniformly in log space.
inline double draw_log_uniform(Rng& rng, double lo, double hi) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return std::clamp(std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))), lo, hi);
}

inline double draw_rest_target(const HTubeProfile& p, Rng& rng) {
    if (p.noiseless) return p.r_rest_mean;
    const double hi = std::min(p.r_rest_mean + 4.0 * p.r_rest_sd, p.reform_target_r);
    return std::clamp(draw_normal(rng, p.r_rest_mean, p.r_rest_sd), p.rest_floor(), hi);
}

// Advances the noise-free trajectory: linear in log R while above the reform
// target, then exponential relaxation of log(R / rest_target).
inline void relax(HTubeState& s, const HTubeProfile& p, double dt) {
    if (s.baseline > p.reform_target_r && s.reform_tau > 0.0) {
        s.baseline *= std::exp(-dt / s.reform_tau);
    } else {
        const double excess = std::log(s.baseline / s.rest_target) * std::exp(-dt / p.rest_recovery_tau);
        s.baseline = s.rest_target * std::exp(excess);
    }
}

inline bool reached_reform_target(const HTubeState& s, const HTubeProfile& p) {
    return s.baseline <= p.reform_target_r * (1.0 + 1e-12);
}

inline void enter_stimulated(HTubeState& s, const HTubeProfile& p) {
    s.mode = HTubeMode::stimulated;
    s.baseline = s.resistance = p.stimulated_mid();
    s.hold_accumulated = 0.0;
    s.latency_elapsed = 0.0;
}

inline void begin_response(HTubeState& s, const HTubeProfile& p, Rng& rng) {
    s.mode = HTubeMode::responding;
    s.latency_elapsed = 0.0;
    s.latency_target =
        p.noiseless ? p.response_latency_mean
                    : std::max(0.0, draw_normal(rng, p.response_latency_mean, p.response_latency_sd));
}

inline void advance_response(HTubeState& s, const HTubeProfile& p, double dt) {
    relax(s, p, dt);
    s.latency_elapsed += dt;
    if (s.latency_elapsed >= s.latency_target) enter_stimulated(s, p);
}

inline void release(HTubeState& s, const HTubeProfile& p, double dt, Rng& rng) {
    // Fatigue counts stimulation from earlier episodes only, so a tube's first
    // episode reforms at the reference speed.
    const double prior = std::max(0.0, s.cumulative_stimulated - s.hold_accumulated);
    const double fatigue = 1.0 + p.fatigue_slowdown * std::min(1.0, prior / p.fatigue_onset);
    s.reform_tau = p.reform_tau_ref() * (std::max(s.hold_accumulated, dt) / p.reform_ref_hold) * fatigue;
    s.baseline = p.stimulated_mid();
    s.rest_target = draw_rest_target(p, rng);
    s.mode = HTubeMode::reforming;
}

}  // namespace detail

/// One biological update over an interval of length `dt` spent at glass
/// temperature `temp`. The returned state's `resistance` is its noise-free
/// baseline; call resistance_sample() for the measured value.
inline HTubeState bio_step(HTubeState s, const HTubeProfile& p, double temp, double dt, Rng& rng) {
    using detail::relax;
    if (!(dt > 0.0)) throw InvalidInput("bio_step: dt must be positive");
    if (s.mode == HTubeMode::damaged) return s;
    if (temp >= p.damage_temp) {
        s.mode = HTubeMode::damaged;
        s.baseline = s.resistance = p.r_burst_max;
        return s;
    }

    const bool hot = temp >= p.response_threshold_temp;
    switch (s.mode) {
        case HTubeMode::unentrained:
            relax(s, p, dt);
            break;
        case HTubeMode::resting:
            if (hot) {
                detail::begin_response(s, p, rng);
                detail::advance_response(s, p, dt);
            } else {
                relax(s, p, dt);
            }
            break;
        case HTubeMode::responding:
            if (hot) {
                detail::advance_response(s, p, dt);
            } else {
                s.latency_elapsed = 0.0;
                s.latency_target = 0.0;
                relax(s, p, dt);
                s.mode = detail::reached_reform_target(s, p) ? HTubeMode::resting : HTubeMode::reforming;
            }
            break;
        case HTubeMode::stimulated:
            if (hot) {
                s.hold_accumulated += dt;
                s.cumulative_stimulated += dt;
            } else {
                detail::release(s, p, dt, rng);
                relax(s, p, dt);
                if (detail::reached_reform_target(s, p)) s.mode = HTubeMode::resting;
            }
            break;
        case HTubeMode::reforming:
            if (hot) {
                detail::begin_response(s, p, rng);
                detail::advance_response(s, p, dt);
            } else {
                relax(s, p, dt);
                if (detail::reached_reform_target(s, p)) s.mode = HTubeMode::resting;
            }
            break;
        case HTubeMode::damaged:
            break;
    }
    s.resistance = s.baseline;
    return s;
}

/// Measured resistance for the current mode. `dt` scales the per-second burst
/// probability.
inline double resistance_sample(const HTubeState& s, const HTubeProfile& p, double dt, Rng& rng) {
    switch (s.mode) {
        case HTubeMode::damaged:
            return p.r_burst_max;
        case HTubeMode::reforming:
            return s.baseline;
        case HTubeMode::stimulated: {
            if (p.noiseless) return p.stimulated_mid();
            if (p.burst_prob_per_s > 0.0) {
                const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                if (u < std::min(1.0, p.burst_prob_per_s * dt)) {
                    // (r_stim_high, r_burst_max]
                    const double v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                    const double lr = std::log(p.r_burst_max) - v * (std::log(p.r_burst_max) - std::log(p.r_stim_high));
                    return std::clamp(std::exp(lr), std::nextafter(p.r_stim_high, p.r_burst_max), p.r_burst_max);
                }
            }
            return detail::draw_log_uniform(rng, p.r_stim_low, p.r_stim_high);
        }
        case HTubeMode::resting: {
            const double r = p.noiseless ? s.baseline : detail::draw_normal(rng, s.baseline, p.r_rest_sd);
            return std::clamp(r, p.rest_floor(), p.reform_target_r);
        }
        case HTubeMode::responding:
        case HTubeMode::unentrained: {
            const double r = p.noiseless ? s.baseline : detail::draw_normal(rng, s.baseline, p.r_rest_sd);
            return std::max(r, p.rest_floor());
        }
    }
    return s.baseline;
}

// ---------------------------------------------------------------------------
// Entrainment
// ---------------------------------------------------------------------------

inline constexpr double entrainment_current = 0.9;  // A
inline constexpr double entrainment_hold = 300.0;   // s

struct EntrainmentResult {
    HTubeState state;
    double duration = 0.0;  ///< simulated seconds from current onset to release
    std::string warning;    ///< set when the call was a no-op
};

/// Primes an unentrained tube: 0.9 A until it responds, a 300 s hold, then
/// release. The result is left REFORMING. Marks `profile.entrained`.
inline EntrainmentResult entrain_htube(const HTubeState& state, HTubeProfile& profile, Rng& rng,
                                       const CoilParams& coil = {}, double dt = 1.0) {
    if (state.mode == HTubeMode::damaged) throw InvalidInput("cannot entrain a damaged H-tube");
    if (state.mode != HTubeMode::unentrained) {
        profile.entrained = true;
        return {state, 0.0, "H-tube is already entrained; entrainment skipped"};
    }
    if (!(dt > 0.0)) throw InvalidInput("entrain_htube: dt must be positive");

    constexpr double give_up_after = 1.0e5;
    HTubeState s = state;
    s.mode = HTubeMode::resting;
    ThermalState thermal{coil.ambient_temp, 0.0};
    double elapsed = 0.0;

    auto advance = [&](double current) {
        thermal = thermal_step(thermal, current, dt, coil);
        s = bio_step(s, profile, thermal.temp, dt, rng);
        elapsed += dt;
        if (s.mode == HTubeMode::damaged) throw InvalidInput("entrainment current damaged the H-tube");
        if (elapsed > give_up_after) throw InvalidInput("H-tube never responded to the entrainment current");
    };

    while (s.mode != HTubeMode::stimulated) advance(entrainment_current);
    for (double held = 0.0; held < entrainment_hold; held += dt) advance(entrainment_current);
    while (s.mode == HTubeMode::stimulated) advance(0.0);

    profile.entrained = true;
    return {s, elapsed, {}};
}

}  // namespace biogate
