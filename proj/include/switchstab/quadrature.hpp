#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "switchstab/errors.hpp"

namespace switchstab::quad {

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    std::size_t max_panels = 10000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t panels = 0;
};

namespace detail {

// 15-point Gauss–Legendre nodes/weights on [-1, 1], by Newton on P_15.
struct GaussLegendre15 {
    static constexpr int n = 15;
    std::array<double, n> x{};
    std::array<double, n> w{};

    GaussLegendre15() {
        const double pi = std::acos(-1.0);
        for (int i = 0; i < n; ++i) {
            double z = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int k = 1; k <= n; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};

inline const GaussLegendre15& rule() {
    static const GaussLegendre15 r;
    return r;
}

struct Panel {
    double a, b;
    double left, right;  // GL15 on each half
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace detail

/// Single 15-point Gauss–Legendre panel on [a, b]. Also returns Σ|w f| in *abs_sum.
template <class F>
double gauss15(F& f, double a, double b, double* abs_sum = nullptr) {
    const auto& r = detail::rule();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0, s_abs = 0.0;
    for (int i = 0; i < r.n; ++i) {
        const double v = r.w[i] * f(mid + half * r.x[i]);
        s += v;
        s_abs += std::abs(v);
    }
    if (abs_sum) *abs_sum = s_abs * std::abs(half);
    return s * half;
}

/**
 * @brief Globally adaptive composite Gauss–Legendre quadrature.
 *
 * Each panel is estimated by GL15 on the whole panel and on its two halves;
 * the difference is the panel error. The panel with the largest error is
 * bisected until the summed error meets max(abs_tol, rel_tol·|I|), bounded
 * below by the rounding floor of the panel sums. Nodes never touch the
 * endpoints, so integrands may be undefined there.
 *
 * `points` (ascending, at least two) seeds the initial panels; use it to
 * resolve features narrower than one GL15 node spacing of the full range.
 */
template <class F>
Result integrate(F&& f, std::span<const double> points, const Options& opt = {}) {
    Result res;
    if (points.size() < 2) throw InputError("adaptive quadrature: need at least two points");
    const double a = points.front(), b = points.back();
    if (a == b) return res;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    std::priority_queue<detail::Panel> heap;
    double total = 0.0, total_err = 0.0, total_abs = 0.0;
    std::vector<detail::Panel> frozen;  // panels too narrow to split

    auto make = [&](double lo, double hi, double whole) {
        const double mid = 0.5 * (lo + hi);
        double abs_l = 0.0, abs_r = 0.0;
        const double l = gauss15(f, lo, mid, &abs_l);
        const double r = gauss15(f, mid, hi, &abs_r);
        detail::Panel p{lo, hi, l, r, std::abs(whole - (l + r))};
        total += l + r;
        total_err += p.error;
        total_abs += abs_l + abs_r;
        return p;
    };

    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        if (!(points[k + 1] > points[k])) {
            if (points[k + 1] == points[k]) continue;
            throw InputError("adaptive quadrature: points must be ascending");
        }
        heap.push(make(points[k], points[k + 1], gauss15(f, points[k], points[k + 1])));
        ++res.panels;
    }

    for (;;) {
        const double floor = 50.0 * eps * total_abs;
        const double target = std::max({opt.abs_tol, opt.rel_tol * std::abs(total), floor});
        if (total_err <= target || heap.empty()) break;
        if (res.panels >= opt.max_panels) {
            throw NumericalError("adaptive quadrature: panel budget of " + std::to_string(opt.max_panels) +
                                     " exhausted on [" + std::to_string(a) + ", " + std::to_string(b) +
                                     "], estimate " + std::to_string(total) + " +/- " + std::to_string(total_err),
                                 total);
        }
        detail::Panel p = heap.top();
        heap.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (std::abs(p.b - p.a) <= 64.0 * eps * std::max(std::abs(p.a), std::abs(p.b)) || p.error <= floor * 1e-3) {
            frozen.push_back(p);
            continue;
        }
        total -= p.left + p.right;
        total_err -= p.error;
        heap.push(make(p.a, mid, p.left));
        heap.push(make(mid, p.b, p.right));
        ++res.panels;
    }

    // Resum from the panels to avoid accumulated cancellation in the running total.
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().left + heap.top().right;
        err += heap.top().error;
        heap.pop();
    }
    for (const auto& p : frozen) {
        sum += p.left + p.right;
        err += p.error;
    }
    res.value = sum;
    res.error = err;
    return res;
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
    if (a == b) return {};
    if (a > b) {
        Result r = integrate(f, b, a, opt);
        r.value = -r.value;
        return r;
    }
    const double pts[2] = {a, b};
    return integrate(f, std::span<const double>(pts), opt);
}

}  // namespace switchstab::quad
