#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "switchstab/ctmc.hpp"
#include "switchstab/errors.hpp"
#include "switchstab/linalg.hpp"
#include "switchstab/planar.hpp"
#include "switchstab/switched.hpp"

namespace switchstab {

/// Smallest block scale c_k accepted by multi_transition.
inline constexpr double kMinBlockScale = 1e-6;

/// Each A_i has eigenvalue 1, but Ā = (A_0 + A_1)/2 is Hurwitz, so fast
/// symmetric switching is stable.
inline SwitchedSystem example_fast_only(double r = 1.0) {
    return SwitchedSystem({SquareMatrix{{1.0, 4.0}, {0.0, -2.0}}, SquareMatrix{{-2.0, 0.0}, {0.0, 1.0}}},
                          Generator::symmetric_two_state(), r);
}

/// (A_0, A_1) of the planar family; requires α > 0 and c > 0.
inline std::pair<SquareMatrix, SquareMatrix> planar_pair(const PlanarParams& p) {
    if (!(p.alpha > 0.0) || !(p.c > 0.0)) throw InputError("planar_pair: alpha and c must be positive");
    return {SquareMatrix{{-p.alpha, p.c}, {0.0, -p.alpha}}, SquareMatrix{{-p.alpha, 0.0}, {-p.c, -p.alpha}}};
}

/// As planar_pair but also admits c = 0 (both matrices −αI).
inline std::pair<SquareMatrix, SquareMatrix> planar_pair_relaxed(const PlanarParams& p) {
    if (!(p.alpha > 0.0) || !(p.c >= 0.0))
        throw InputError("planar_pair_relaxed: need alpha > 0 and c >= 0");
    return {SquareMatrix{{-p.alpha, p.c}, {0.0, -p.alpha}}, SquareMatrix{{-p.alpha, 0.0}, {-p.c, -p.alpha}}};
}

/// Planar family switched by the symmetric two-state chain at rate r.
inline SwitchedSystem planar_system(const PlanarParams& p, double r) {
    auto [a0, a1] = planar_pair(p);
    return SwitchedSystem({std::move(a0), std::move(a1)}, Generator::symmetric_two_state(), r);
}

/**
 * @brief Block system with k disjoint instability windows.
 *
 * Block i (1-based) is the planar pair with (α_i, c_i) = (α_1, c_1)/N^{i−1};
 * its window is (a_1 N^{1−i}, b_1 N^{1−i}).
 */
struct MultiSystemSpec {
    std::size_t k = 1;
    double alpha1 = 0.0;
    double c1 = 1.0;
    double N = 2.0;
    double r1 = 0.0;
    double a1 = 0.0;
    double b1 = 0.0;

    double scale(std::size_t i) const { return std::pow(N, -static_cast<double>(i - 1)); }
    PlanarParams block(std::size_t i) const { return {alpha1 * scale(i), c1 * scale(i)}; }
    double window_a(std::size_t i) const { return a1 * scale(i); }
    double window_b(std::size_t i) const { return b1 * scale(i); }
    double peak_rate(std::size_t i) const { return r1 * scale(i); }

    /// A^0, A^1 as 2k×2k block-diagonal matrices.
    std::pair<SquareMatrix, SquareMatrix> matrices() const {
        const auto d = static_cast<Eigen::Index>(2 * k);
        Eigen::MatrixXd m0 = Eigen::MatrixXd::Zero(d, d), m1 = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t i = 1; i <= k; ++i) {
            const auto [b0, b1m] = planar_pair(block(i));
            const auto o = static_cast<Eigen::Index>(2 * (i - 1));
            m0.block(o, o, 2, 2) = b0.eigen();
            m1.block(o, o, 2, 2) = b1m.eigen();
        }
        return {SquareMatrix(std::move(m0)), SquareMatrix(std::move(m1))};
    }

    SwitchedSystem system(double r) const {
        auto [m0, m1] = matrices();
        return SwitchedSystem({std::move(m0), std::move(m1)}, Generator::symmetric_two_state(), r);
    }
};

/**
 * Builds the k-window block system from (α_1, c_1). The first window is found
 * with find_window unless supplied; N defaults to 2 b_1/a_1 and must exceed
 * b_1/a_1 so the windows are disjoint.
 */
inline MultiSystemSpec multi_transition(std::size_t k, double alpha1, double c1, std::optional<double> N = std::nullopt,
                                        std::optional<InstabilityWindow> first = std::nullopt, double tol = 1e-10) {
    using K = ConstructionError::Kind;
    if (k < 1) throw InputError("multi_transition: k must be at least 1");
    if (!(c1 > 0.0) || !(alpha1 > 0.0) || !std::isfinite(alpha1) || !std::isfinite(c1))
        throw InputError("multi_transition: alpha1 and c1 must be positive");
    if (!first) first = find_window({alpha1, c1}, tol);
    if (!first)
        throw ConstructionError(K::NoWindow, "multi_transition: no instability window for alpha1 = " +
                                                 std::to_string(alpha1) + ", c1 = " + std::to_string(c1));
    MultiSystemSpec spec;
    spec.k = k;
    spec.alpha1 = alpha1;
    spec.c1 = c1;
    spec.r1 = first->r_star;
    spec.a1 = first->a;
    spec.b1 = first->b;
    spec.N = N.value_or(2.0 * spec.b1 / spec.a1);
    if (!(spec.N > spec.b1 / spec.a1))
        throw ConstructionError(K::ScaleTooSmall, "multi_transition: N = " + std::to_string(spec.N) +
                                                      " must exceed b1/a1 = " + std::to_string(spec.b1 / spec.a1));
    const double ck = c1 * spec.scale(k);
    if (!(ck >= kMinBlockScale))
        throw ConstructionError(K::ScaleUnderflow, "multi_transition: c_k = " + std::to_string(ck) +
                                                       " falls below " + std::to_string(kMinBlockScale));
    return spec;
}

/// Top exponent of the block system: the largest block exponent.
inline double block_lyapunov(const MultiSystemSpec& spec, double r, double tol = 1e-10) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i <= spec.k; ++i) top = std::max(top, lyapunov_analytic(spec.block(i), r, tol));
    return top;
}

}  // namespace switchstab
