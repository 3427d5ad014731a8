#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "switchstab/errors.hpp"
#include "switchstab/quadrature.hpp"
#include "switchstab/switched.hpp"

namespace switchstab {

/// A_0 = [[−α, c], [0, −α]], A_1 = [[−α, 0], [−c, −α]].
struct PlanarParams {
    double alpha = 0.0;
    double c = 1.0;
};

namespace planar_detail {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;
/// Relative accuracy of the inner (per-angle) integrals.
inline constexpr double kInnerRelTol = 1e-13;

inline void require_lambda(double lambda, const char* who) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InputError(std::string(who) + ": lambda must be positive and finite");
}

inline void require_fundamental(double theta, const char* who) {
    if (!(theta > -kHalfPi && theta <= 0.0))
        throw InputError(std::string(who) + ": theta must lie in (-pi/2, 0]");
}

inline std::vector<double> geometric_points(double first, double len) {
    std::vector<double> pts{0.0};
    for (double s = first; s < len; s *= 2.0) pts.push_back(s);
    pts.push_back(len);
    return pts;
}

/**
 * ∫_θ^0 g(E, sin 2y, cos y) dy with E = 2λ(cot 2y − cot 2θ) ≤ 0.
 *
 * [θ, θ/2] is parametrized by d = y − θ and [θ/2, 0] by e = −y, with sin 2y
 * and cos y from addition formulas, so θ − y, sin 2y and cos y keep full
 * relative precision at both ends. Initial panels are geometric toward θ at
 * the peak scale sin²2θ/(4λ) and toward 0 at the cutoff scale λ of e^{−λ/|y|}.
 */
template <class G>
double inner_integral(double theta, double lambda, G&& g, const quad::Options& opt) {
    const double half = -0.5 * theta;
    const double s2t = std::sin(2.0 * theta), c2t = std::cos(2.0 * theta);
    const double st = std::sin(theta), ct = std::cos(theta);
    auto near_theta = [&](double d) {
        const double s2y = s2t * std::cos(2.0 * d) + c2t * std::sin(2.0 * d);
        const double cy = ct * std::cos(d) - st * std::sin(d);
        return g(2.0 * lambda * std::sin(-2.0 * d) / (s2y * s2t), s2y, cy);
    };
    auto near_zero = [&](double e) {
        const double s2y = -std::sin(2.0 * e);
        return g(2.0 * lambda * std::sin(2.0 * (theta + e)) / (s2y * s2t), s2y, std::cos(e));
    };
    const auto left = geometric_points(0.25 * std::min(half, s2t * s2t / (4.0 * lambda)), half);
    const auto right = geometric_points(std::min(half, lambda) / 64.0, half);
    return quad::integrate(near_theta, std::span<const double>(left), opt).value +
           quad::integrate(near_zero, std::span<const double>(right), opt).value;
}

/// Breakpoints on (−π/2, 0) for the outer angular integrals.
inline std::vector<double> outer_points(double lambda) {
    std::vector<double> pts{-kHalfPi, -kHalfPi / 2.0, 0.0};
    for (double s = 0.25 * std::min(1.0, lambda); s < kHalfPi / 4.0; s *= 2.0) {
        pts.push_back(-kHalfPi + s);
        pts.push_back(-s);
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

/// θ = θ' + mπ/2 with θ' ∈ (−π/2, 0]; returns {θ', m mod 2}.
inline std::pair<double, int> reduce(double theta) {
    double m = std::ceil(theta / kHalfPi);
    double t = theta - m * kHalfPi;
    if (t > 0.0) {
        t -= kHalfPi;
        m += 1.0;
    }
    if (t <= -kHalfPi) {
        t += kHalfPi;
        m -= 1.0;
    }
    return {t, static_cast<int>(std::fmod(std::abs(m), 2.0))};
}

/// J(θ) = sin²θ − λH(θ) = ∫_θ^0 e^{E} (−sin 2y) dy, to relative accuracy kInnerRelTol.
inline double deficit(double theta, double lambda) {
    if (theta == 0.0) return 0.0;
    auto f = [](double e, double s2y, double) { return -std::exp(e) * s2y; };
    return inner_integral(theta, lambda, f, {0.0, kInnerRelTol, 100000});
}

}  // namespace planar_detail

/**
 * @brief H(θ; λ) = ∫_θ^0 exp(2λ(cot 2y − cot 2θ)) sec² y dy on (−π/2, 0].
 *
 * The exponent is ≤ 0 on the whole range, so the integrand never
 * overflows. H(0) = 0.
 */
inline double H_eval(double theta, double lambda, double tol = 1e-10) {
    using namespace planar_detail;
    require_lambda(lambda, "H_eval");
    require_fundamental(theta, "H_eval");
    if (theta == 0.0) return 0.0;
    auto f = [](double e, double, double cy) { return std::exp(e) / (cy * cy); };
    return inner_integral(theta, lambda, f, {0.5 * tol, kInnerRelTol, 100000});
}

/**
 * H'(θ) = λH(sec²θ + csc²θ) − sec²θ for θ ∈ (−π/2, 0), evaluated as
 * −J(θ)(sec²θ + csc²θ) with J = sin²θ − λH, which has no cancellation.
 * J carries relative accuracy kInnerRelTol; `tol` is accepted for symmetry
 * with H_eval.
 */
inline double H_deriv(double theta, double lambda, [[maybe_unused]] double tol = 1e-10) {
    planar_detail::require_lambda(lambda, "H_deriv");
    planar_detail::require_fundamental(theta, "H_deriv");
    if (theta == 0.0) throw InputError("H_deriv: theta must be strictly negative");
    const double s = std::sin(theta), c = std::cos(theta);
    return -planar_detail::deficit(theta, lambda) * (1.0 / (c * c) + 1.0 / (s * s));
}

/**
 * @brief Stationary angular density (p_0, p_1) of the planar family at λ = r/c.
 *
 * Evaluated through the deficit J(θ) = sin²θ − λH(θ) ≥ 0, computed directly as
 * ∫_θ^0 e^{2λ(cot 2y − cot 2θ)} (−sin 2y) dy. On (−π/2, 0):
 *   p_0 = C(1 − csc²θ J),  p_1 = C(1 + sec²θ J),
 * which stays accurate where sec² or csc² blows up. Other angles follow from
 * p_i(θ) = p_{1−i}(θ + π/2). At θ = 0: p_0 = 0, p_1 = C. C is fixed at
 * construction.
 */
class AngularDensity {
public:
    explicit AngularDensity(double lambda, double tol = 1e-10) : lambda_(lambda), tol_(tol) {
        planar_detail::require_lambda(lambda, "AngularDensity");
        if (!(tol > 0.0)) throw InputError("AngularDensity: tol must be positive");
        const auto pts = planar_detail::outer_points(lambda_);
        auto f = [&](double th) {
            const double s = std::sin(th), c = std::cos(th);
            return 2.0 + deficit(th) * (1.0 / (c * c) - 1.0 / (s * s));
        };
        const double quarter = quad::integrate(f, std::span<const double>(pts), {tol_ / 4.0, 0.0, 10000}).value;
        C_ = 1.0 / (4.0 * quarter);
    }

    double lambda() const noexcept { return lambda_; }
    double C() const noexcept { return C_; }

    /// J(θ) = sin²θ − λH(θ) for θ ∈ (−π/2, 0].
    double deficit(double theta) const {
        using namespace planar_detail;
        require_fundamental(theta, "AngularDensity::deficit");
        return planar_detail::deficit(theta, lambda_);
    }

    /// (p_0(θ), p_1(θ)) for any real θ.
    std::array<double, 2> operator()(double theta) const {
        const auto [t, parity] = planar_detail::reduce(theta);
        std::array<double, 2> p{};
        if (t == 0.0) {
            p = {0.0, C_};
        } else {
            const double j = deficit(t);
            const double s = std::sin(t), c = std::cos(t);
            p = {C_ * (1.0 - j / (s * s)), C_ * (1.0 + j / (c * c))};
        }
        if (parity) std::swap(p[0], p[1]);
        return p;
    }

    double density(double theta, int state) const {
        if (state != 0 && state != 1) throw InputError("AngularDensity::density: state must be 0 or 1");
        return (*this)(theta)[static_cast<std::size_t>(state)];
    }

    /// G = 4 ∫_{−π/2}^0 (p_0 − p_1) cos θ sin θ dθ = −4C ∫ J / (sin θ cos θ) dθ.
    double G() const {
        const auto pts = planar_detail::outer_points(lambda_);
        auto f = [&](double th) { return -deficit(th) / (std::sin(th) * std::cos(th)); };
        return 4.0 * C_ * quad::integrate(f, std::span<const double>(pts), {tol_ / (4.0 * C_), 0.0, 10000}).value;
    }

    /// ∫_0^{2π} (p_0 − p_1) cos θ sin θ dθ from the density itself.
    double G_full_domain() const {
        return full_integral([](const std::array<double, 2>& p, double th) {
            return (p[0] - p[1]) * std::cos(th) * std::sin(th);
        });
    }

    /// ∫_0^{2π} (p_0 + p_1) dθ; equals 1.
    double normalization() const {
        return full_integral([](const std::array<double, 2>& p, double) { return p[0] + p[1]; });
    }

private:
    template <class W>
    double full_integral(W w) const {
        using planar_detail::kHalfPi;
        std::vector<double> pts;
        const auto quarter = planar_detail::outer_points(lambda_);
        for (int q = 1; q <= 4; ++q)
            for (std::size_t k = (q == 1 ? 0 : 1); k < quarter.size(); ++k) pts.push_back(quarter[k] + q * kHalfPi);
        auto f = [&](double th) { return w((*this)(th), th); };
        return quad::integrate(f, std::span<const double>(pts), {tol_, 0.0, 40000}).value;
    }

    double lambda_;
    double tol_;
    double C_ = 0.0;
};

inline double C_const(double lambda, double tol = 1e-10) { return AngularDensity(lambda, tol).C(); }

/// G(λ) on the fundamental domain (−π/2, 0].
inline double G_eval(double lambda, double tol = 1e-10) { return AngularDensity(lambda, tol).G(); }

/// G(λ) integrated over [0, 2π) through the reduced density.
inline double G_full_domain(double lambda, double tol = 1e-10) { return AngularDensity(lambda, tol).G_full_domain(); }

/// Top Lyapunov exponent of the planar family: c·G(r/c) − α.
inline double lyapunov_analytic(const PlanarParams& p, double r, double tol = 1e-10) {
    if (!(p.c > 0.0)) throw InputError("lyapunov_analytic: c must be positive");
    if (!(r > 0.0)) throw InputError("lyapunov_analytic: r must be positive");
    return p.c * G_eval(r / p.c, tol) - p.alpha;
}

struct StabilityVerdict {
    StabilityTag tag = StabilityTag::Inconclusive;
    double exponent = 0.0;
    double margin = 0.0;  ///< |exponent| − tol; negative when undecided
};

inline StabilityVerdict classify(const PlanarParams& p, double r, double tol = 1e-10) {
    StabilityVerdict v;
    v.exponent = lyapunov_analytic(p, r, tol);
    v.margin = std::abs(v.exponent) - tol;
    if (v.exponent < -tol)
        v.tag = StabilityTag::Stable;
    else if (v.exponent > tol)
        v.tag = StabilityTag::Unstable;
    return v;
}

struct GMaximum {
    double lambda_star = 0.0;
    double g_star = 0.0;
};

/**
 * Maximizes G over λ ∈ [1e-3, 1e3]: 60-point log grid, then golden section in
 * log λ around the best grid point to relative width 1e-6.
 */
inline GMaximum sup_G(double tol = 1e-10) {
    constexpr int kGrid = 60;
    const double lo = std::log(1e-3), hi = std::log(1e3);
    std::vector<double> x(kGrid), g(kGrid);
    for (int k = 0; k < kGrid; ++k) {
        x[k] = lo + (hi - lo) * k / (kGrid - 1);
        g[k] = G_eval(std::exp(x[k]), tol);
    }
    const int best = static_cast<int>(std::max_element(g.begin(), g.end()) - g.begin());
    if (best == 0 || best == kGrid - 1)
        throw SearchBoundaryError("sup_G: maximum at the boundary of [1e-3, 1e3]", g[best]);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = x[best - 1], b = x[best + 1];
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double g1 = G_eval(std::exp(x1), tol), g2 = G_eval(std::exp(x2), tol);
    while (b - a > 1e-6) {
        if (g1 < g2) {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + inv_phi * (b - a);
            g2 = G_eval(std::exp(x2), tol);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - inv_phi * (b - a);
            g1 = G_eval(std::exp(x1), tol);
        }
    }
    GMaximum m;
    m.lambda_star = std::exp(0.5 * (a + b));
    m.g_star = G_eval(m.lambda_star, tol);
    if (g[best] > m.g_star) m = {std::exp(x[best]), g[best]};
    return m;
}

/// Rate interval (a, b) on which the planar exponent is positive.
struct InstabilityWindow {
    double a = 0.0;
    double b = 0.0;
    double r_star = 0.0;
    double peak_exponent = 0.0;
};

/**
 * Window of instability for (α, c) given the maximum of G. Empty when
 * c·G* ≤ α + tol. Otherwise each endpoint is bracketed by repeated halving or
 * doubling from r* = cλ* and bisected to width tol·r.
 */
inline std::optional<InstabilityWindow> find_window(const PlanarParams& p, const GMaximum& gmax, double tol = 1e-10) {
    if (!(p.c > 0.0)) throw InputError("find_window: c must be positive");
    if (p.c * gmax.g_star <= p.alpha + tol) return std::nullopt;
    auto f = [&](double r) { return lyapunov_analytic(p, r, tol); };
    InstabilityWindow w;
    w.r_star = p.c * gmax.lambda_star;
    w.peak_exponent = p.c * gmax.g_star - p.alpha;
    auto endpoint = [&](double factor) {
        double inside = w.r_star, outside = w.r_star;
        for (int k = 0;; ++k) {
            if (k == 60) throw SearchBoundaryError("find_window: exponent did not change sign", outside);
            outside *= factor;
            if (f(outside) < 0.0) break;
            inside = outside;
        }
        while (std::abs(outside - inside) > tol * std::max(inside, outside)) {
            const double mid = std::sqrt(inside * outside);
            (f(mid) < 0.0 ? outside : inside) = mid;
        }
        return 0.5 * (inside + outside);
    };
    w.a = endpoint(0.5);
    w.b = endpoint(2.0);
    return w;
}

inline std::optional<InstabilityWindow> find_window(const PlanarParams& p, double tol = 1e-10) {
    return find_window(p, sup_G(tol), tol);
}

/**
 * Largest |L* p| over the grid for c = 1, r = λ, with the drift term taken from
 * H' and the jump term from the density. Grid points must stay at least 1e-3
 * from every multiple of π/2. `p0_scale` multiplies p_0 on the whole circle
 * (a perturbed density, for sensitivity checks).
 */
inline double stationarity_residual(double lambda, std::span<const double> grid, double tol = 1e-10,
                                    double p0_scale = 1.0) {
    using planar_detail::kHalfPi;
    const AngularDensity dens(lambda, tol);
    const double scale[2] = {p0_scale, 1.0};
    double worst = 0.0;
    for (double th : grid) {
        const auto [t, parity] = planar_detail::reduce(th);
        if (t > -1e-3 || t < -kHalfPi + 1e-3)
            throw InputError("stationarity_residual: grid point within 1e-3 of a multiple of pi/2");
        // ∂θ(sin²θ p_0) = CλH' and ∂θ(cos²θ p_1) = −CλH' on the fundamental domain
        const double drift0 = dens.C() * lambda * H_deriv(t, lambda, tol);
        const auto p = dens(th);
        for (int i = 0; i < 2; ++i) {
            const double drift = ((i ^ parity) == 0) ? drift0 : -drift0;
            const double res = scale[i] * drift + lambda * (scale[1 - i] * p[1 - i] - scale[i] * p[i]);
            worst = std::max(worst, std::abs(res));
        }
    }
    return worst;
}

}  // namespace switchstab
