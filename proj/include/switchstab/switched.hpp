#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "switchstab/ctmc.hpp"
#include "switchstab/errors.hpp"
#include "switchstab/linalg.hpp"
#include "switchstab/parallel.hpp"
#include "switchstab/rng.hpp"

namespace switchstab {

/// Largest Λ·Δ propagated in one exponential factor by the polar propagator.
inline constexpr double kMaxSegmentGrowth = 30.0;
/// Largest Λ·Δ per substep while tracking the planar angle; keeps each
/// angular increment below 1 rad < π/2.
inline constexpr double kMaxAngleStep = 1.0;

enum class StabilityTag { Stable, Unstable, Inconclusive };

constexpr std::string_view to_string(StabilityTag t) {
    switch (t) {
        case StabilityTag::Stable: return "Stable";
        case StabilityTag::Unstable: return "Unstable";
        case StabilityTag::Inconclusive: return "Inconclusive";
    }
    return "?";
}

/**
 * @brief Linear ODE dX/dt = A_{I_t} X switched by a chain with generator rQ.
 *
 * Holds one matrix per chain state, the generator, the rate multiplier r and
 * the derived bound Λ = max_i ‖A_i‖. Matrix exponential kernels are built once.
 */
class SwitchedSystem {
public:
    SwitchedSystem(std::vector<SquareMatrix> matrices, Generator generator, double rate)
        : matrices_(std::move(matrices)), generator_(std::move(generator)), rate_(rate) {
        if (matrices_.size() != generator_.states())
            throw InputError("SwitchedSystem: " + std::to_string(matrices_.size()) + " matrices for a " +
                             std::to_string(generator_.states()) + "-state generator");
        for (const auto& m : matrices_) SquareMatrix::require_same_dim(matrices_.front(), m, "SwitchedSystem");
        if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw InputError("SwitchedSystem: rate r must be positive");
        kernels_.reserve(matrices_.size());
        for (const auto& m : matrices_) {
            kernels_.emplace_back(m);
            bound_ = std::max(bound_, kernels_.back().norm());
        }
        pi_ = switchstab::stationary(generator_);
    }

    std::size_t dim() const noexcept { return matrices_.front().dim(); }
    std::size_t states() const noexcept { return matrices_.size(); }
    double rate() const noexcept { return rate_; }
    /// Λ = max_i ‖A_i‖ (spectral norm).
    double bound() const noexcept { return bound_; }
    const std::vector<SquareMatrix>& matrices() const noexcept { return matrices_; }
    const Generator& generator() const noexcept { return generator_; }
    const ExpKernel& kernel(std::size_t i) const { return kernels_.at(i); }
    const std::vector<double>& stationary() const noexcept { return pi_; }

    /// Ā = Σ π_i A_i.
    SquareMatrix average() const { return average_matrix(matrices_, pi_); }

    SwitchedSystem with_rate(double r) const { return SwitchedSystem(matrices_, generator_, r); }

private:
    std::vector<SquareMatrix> matrices_;
    Generator generator_;
    double rate_;
    double bound_ = 0.0;
    std::vector<ExpKernel> kernels_;
    std::vector<double> pi_;
};

/// Direction, log-norm and (planar only) lifted angle of X_t.
struct PolarState {
    Vector direction;
    double log_radius = 0.0;
    std::optional<double> theta;
};

struct LyapunovEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t replicas = 0;
    double horizon = 0.0;
    double burn_in = 0.0;
    std::vector<double> values;  ///< per-replica estimates, replica order

    double stderr() const noexcept { return stderr_; }
    /// Sign decision at the given number of standard errors.
    StabilityTag verdict(double k = 3.0) const {
        if (mean + k * stderr_ < 0.0) return StabilityTag::Stable;
        if (mean - k * stderr_ > 0.0) return StabilityTag::Unstable;
        return StabilityTag::Inconclusive;
    }
};

struct NormEstimate {
    double mean = 0.0;
    double stderr = 0.0;
    std::size_t replicas = 0;
    std::vector<double> values;
};

namespace detail {

inline std::pair<double, double> mean_stderr(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    return a < 0.0 ? a + two_pi : a;
}

}  // namespace detail

/// Unit vector (1, 1, ..., 1)/√d, the default starting direction.
inline Vector default_direction(std::size_t d) {
    return Vector::Constant(static_cast<Eigen::Index>(d), 1.0 / std::sqrt(static_cast<double>(d)));
}

/**
 * @brief Exact polar-form propagation along piecewise-constant switching.
 *
 * Each substep applies v = exp(A Δ) u, accumulates log‖v‖ and renormalizes.
 * Substeps satisfy ‖A‖Δ ≤ kMaxSegmentGrowth, or ≤ kMaxAngleStep when the
 * planar angle is tracked; the lift advances by the signed angle between
 * consecutive directions.
 */
class PolarPropagator {
public:
    PolarPropagator(const SwitchedSystem& sys, const Vector& u0, bool track_angle = true)
        : sys_(&sys), u_(u0.data(), u0.data() + u0.size()), v_(u_.size()) {
        if (u_.size() != sys.dim()) throw InputError("PolarPropagator: initial direction has wrong dimension");
        const double n = u0.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw InputError("PolarPropagator: initial direction must be nonzero");
        for (double& x : u_) x /= n;
        track_ = track_angle && sys.dim() == 2;
        if (track_) theta_ = detail::wrap_angle(std::atan2(u_[1], u_[0]));
    }

    void advance(std::size_t state, double duration) {
        if (duration <= 0.0) return;
        const ExpKernel& k = sys_->kernel(state);
        const double limit = track_ ? kMaxAngleStep : kMaxSegmentGrowth;
        const double growth = k.norm() * duration;
        const std::size_t pieces = growth > limit ? static_cast<std::size_t>(std::ceil(growth / limit)) : 1;
        const double step = duration / static_cast<double>(pieces);
        for (std::size_t p = 0; p < pieces; ++p) {
            k.apply(step, u_, v_);
            double nv = 0.0;
            for (double x : v_) nv += x * x;
            nv = std::sqrt(nv);
            log_r_ += std::log(nv);
            if (track_) {
                const double cross = u_[0] * v_[1] - u_[1] * v_[0];
                const double dot = u_[0] * v_[0] + u_[1] * v_[1];
                theta_ += std::atan2(cross, dot);
            }
            for (std::size_t i = 0; i < u_.size(); ++i) u_[i] = v_[i] / nv;
        }
    }

    double log_radius() const noexcept { return log_r_; }
    std::span<const double> direction() const noexcept { return u_; }

    PolarState state() const {
        PolarState s;
        s.direction = Eigen::Map<const Vector>(u_.data(), static_cast<Eigen::Index>(u_.size()));
        s.log_radius = log_r_;
        if (track_) s.theta = theta_;
        return s;
    }

private:
    const SwitchedSystem* sys_;
    std::vector<double> u_, v_;
    double log_r_ = 0.0;
    double theta_ = 0.0;
    bool track_ = false;
};

/**
 * Walks `path`, advancing `prop`, and calls mark(k) when the clock reaches
 * breakpoints[k]. Breakpoints must be sorted and lie in [0, T].
 */
template <class Mark>
void advance_along(PolarPropagator& prop, const JumpPath& path, std::span<const double> breakpoints, Mark&& mark) {
    std::size_t next = 0;
    double clock = 0.0;
    while (next < breakpoints.size() && breakpoints[next] <= 0.0) mark(next++);
    path.for_each_segment([&](std::size_t state, double dt) {
        const double end = clock + dt;
        while (next < breakpoints.size() && breakpoints[next] <= end) {
            prop.advance(state, breakpoints[next] - clock);
            clock = breakpoints[next];
            mark(next++);
        }
        prop.advance(state, end - clock);
        clock = end;
    });
    while (next < breakpoints.size()) mark(next++);
}

/// X_T = exp(A_{ξ_{N+1}} a_T) ··· exp(A_{ξ_1} τ_1) X_0.
inline Vector propagate_dense(const SwitchedSystem& sys, const JumpPath& path, const Vector& x0) {
    if (static_cast<std::size_t>(x0.size()) != sys.dim()) throw InputError("propagate_dense: X0 has wrong dimension");
    const double n0 = x0.norm();
    if (!(n0 > 0.0)) throw InputError("propagate_dense: X0 must be nonzero");
    if (sys.bound() * path.horizon + std::log(n0) > kMaxExpArgument)
        throw OverflowRisk("propagate_dense: Lambda*T = " + std::to_string(sys.bound() * path.horizon) +
                           " may overflow; use propagate_polar");
    std::vector<double> x(x0.data(), x0.data() + x0.size()), y(x.size());
    path.for_each_segment([&](std::size_t state, double dt) {
        sys.kernel(state).apply(dt, x, y);
        std::swap(x, y);
    });
    return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

/// Path-ordered product S = exp(A_{ξ_{N+1}} a_T) ··· exp(A_{ξ_1} τ_1).
inline SquareMatrix propagator(const SwitchedSystem& sys, const JumpPath& path) {
    if (sys.bound() * path.horizon > kMaxExpArgument)
        throw OverflowRisk("propagator: Lambda*T = " + std::to_string(sys.bound() * path.horizon) +
                           " may overflow");
    const std::size_t d = sys.dim();
    std::vector<double> cols(d * d, 0.0), next(d * d);
    for (std::size_t j = 0; j < d; ++j) cols[j * d + j] = 1.0;
    path.for_each_segment([&](std::size_t state, double dt) {
        const auto& k = sys.kernel(state);
        for (std::size_t j = 0; j < d; ++j)
            k.apply(dt, std::span<const double>(cols).subspan(j * d, d), std::span<double>(next).subspan(j * d, d));
        std::swap(cols, next);
    });
    Eigen::MatrixXd s(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < d; ++i)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j * d + i];
    return SquareMatrix(std::move(s));
}

inline PolarState propagate_polar(const SwitchedSystem& sys, const JumpPath& path, const Vector& u0) {
    if (std::abs(u0.norm() - 1.0) > 1e-12) throw InputError("propagate_polar: u0 must be a unit vector");
    PolarPropagator prop(sys, u0, true);
    path.for_each_segment([&](std::size_t state, double dt) { prop.advance(state, dt); });
    return prop.state();
}

struct TrajectoryRow {
    double t;
    std::size_t state;
    double log_radius;
    std::optional<double> theta;
};

/// Polar trajectory sampled at t = 0 and after every sojourn; `state` is the
/// chain state occupied from t onward (the final row carries ξ_{N+1}).
inline std::vector<TrajectoryRow> trajectory(const SwitchedSystem& sys, const JumpPath& path, const Vector& u0) {
    PolarPropagator prop(sys, u0, true);
    std::vector<TrajectoryRow> rows;
    rows.reserve(path.jump_count() + 2);
    double t = 0.0;
    auto snapshot = [&](std::size_t state) {
        const auto s = prop.state();
        rows.push_back({t, state, s.log_radius, s.theta});
    };
    snapshot(path.jumps.empty() ? path.final_state : path.jumps.front().state);
    for (std::size_t k = 0; k < path.jumps.size(); ++k) {
        prop.advance(path.jumps[k].state, path.jumps[k].holding);
        t += path.jumps[k].holding;
        snapshot(k + 1 < path.jumps.size() ? path.jumps[k + 1].state : path.final_state);
    }
    prop.advance(path.final_state, path.residual);
    t = path.horizon;
    snapshot(path.final_state);
    return rows;
}

struct McConfig {
    double horizon = 1000.0;
    std::optional<double> burn_in;  ///< defaults to horizon/10
    std::size_t replicas = 100;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  ///< 0 = hardware concurrency
    std::optional<Vector> u0;  ///< defaults to default_direction(d)
};

/**
 * @brief Monte Carlo estimate of lim (1/t) log‖X_t‖.
 *
 * Replica k draws I_0 from π and a path on [0, burn_in + T] from the stream
 * (seed, k), propagates in polar form and records
 * (log R(burn_in + T) − log R(burn_in)) / T. Replicas reduce in index order.
 */
inline LyapunovEstimate lyapunov_mc(const SwitchedSystem& sys, const McConfig& cfg) {
    const double burn = cfg.burn_in.value_or(cfg.horizon / 10.0);
    if (!(cfg.horizon > burn) || !(burn >= 0.0)) throw InputError("lyapunov_mc: need T > burn_in >= 0");
    if (cfg.replicas < 2) throw InputError("lyapunov_mc: need at least 2 replicas");
    const Vector u0 = cfg.u0.value_or(default_direction(sys.dim()));
    LyapunovEstimate est;
    est.replicas = cfg.replicas;
    est.horizon = cfg.horizon;
    est.burn_in = burn;
    est.values.assign(cfg.replicas, 0.0);
    const double marks[2] = {burn, burn + cfg.horizon};
    parallel_for(cfg.replicas, cfg.threads, [&](std::size_t rep) {
        Stream stream = Stream::derive(cfg.seed, {stream_label::kLyapunov, rep});
        const std::size_t i0 = sample_state(sys.stationary(), stream);
        const JumpPath path = sample_path(sys.generator(), sys.rate(), i0, burn + cfg.horizon, stream);
        PolarPropagator prop(sys, u0, false);
        double at[2] = {0.0, 0.0};
        advance_along(prop, path, marks, [&](std::size_t k) { at[k] = prop.log_radius(); });
        est.values[rep] = (at[1] - at[0]) / cfg.horizon;
    });
    std::tie(est.mean, est.stderr_) = detail::mean_stderr(est.values);
    return est;
}

/// Monte Carlo estimate of E_π‖S_T‖ for the full path-ordered propagator.
inline NormEstimate propagator_norm_mc(const SwitchedSystem& sys, double horizon, std::size_t replicas,
                                       std::uint64_t seed, std::size_t threads = 0) {
    if (!(horizon >= 0.0)) throw InputError("propagator_norm_mc: T must be >= 0");
    if (replicas < 2) throw InputError("propagator_norm_mc: need at least 2 replicas");
    if (sys.bound() * horizon > kMaxExpArgument)
        throw OverflowRisk("propagator_norm_mc: Lambda*T = " + std::to_string(sys.bound() * horizon) +
                           " exceeds the dense-product limit " + std::to_string(kMaxExpArgument));
    NormEstimate est;
    est.replicas = replicas;
    est.values.assign(replicas, 0.0);
    parallel_for(replicas, threads, [&](std::size_t rep) {
        Stream stream = Stream::derive(seed, {stream_label::kPropagatorNorm, rep});
        const std::size_t i0 = sample_state(sys.stationary(), stream);
        const JumpPath path = sample_path(sys.generator(), sys.rate(), i0, horizon, stream);
        est.values[rep] = operator_norm(propagator(sys, path));
    });
    std::tie(est.mean, est.stderr) = detail::mean_stderr(est.values);
    return est;
}

/**
 * Checks that ‖X_t‖ is nonincreasing (relative slack 1e-9) at
 * samples_per_path + 1 uniform times on [0, T] along n_paths sampled paths,
 * each from a random unit direction. Requires every A_i normal and Hurwitz.
 */
inline bool monotone_norm_check(const SwitchedSystem& sys, std::size_t n_paths, double horizon,
                                std::size_t samples_per_path, std::uint64_t seed, std::size_t threads = 0) {
    for (std::size_t i = 0; i < sys.states(); ++i) {
        if (!is_normal(sys.matrices()[i]))
            throw HypothesisViolated("monotone_norm_check: A_" + std::to_string(i) + " is not normal");
        if (is_hurwitz(sys.matrices()[i]) != HurwitzVerdict::Hurwitz)
            throw HypothesisViolated("monotone_norm_check: A_" + std::to_string(i) + " is not Hurwitz");
    }
    if (samples_per_path < 1 || !(horizon > 0.0)) throw InputError("monotone_norm_check: need samples >= 1, T > 0");
    const double slack = std::log1p(1e-9);
    std::vector<double> times(samples_per_path + 1);
    for (std::size_t j = 0; j <= samples_per_path; ++j)
        times[j] = horizon * static_cast<double>(j) / static_cast<double>(samples_per_path);
    std::vector<char> ok(n_paths, 1);
    parallel_for(n_paths, threads, [&](std::size_t rep) {
        Stream stream = Stream::derive(seed, {stream_label::kMonotoneCheck, rep});
        Vector u0(static_cast<Eigen::Index>(sys.dim()));
        for (Eigen::Index i = 0; i < u0.size(); ++i) u0(i) = 2.0 * stream.uniform_open0() - 1.0;
        u0.normalize();
        const std::size_t i0 = sample_state(sys.stationary(), stream);
        const JumpPath path = sample_path(sys.generator(), sys.rate(), i0, horizon, stream);
        PolarPropagator prop(sys, u0, false);
        double prev = 0.0;
        advance_along(prop, path, times, [&](std::size_t k) {
            const double lr = prop.log_radius();
            if (k > 0 && lr > prev + slack) ok[rep] = 0;
            prev = lr;
        });
    });
    return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

}  // namespace switchstab
