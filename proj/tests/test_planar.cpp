#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "switchstab/planar.hpp"

using namespace switchstab;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

// Frozen values from tests/oracles/planar_oracle.py (40-digit arithmetic,
// cross-checked by a finite-volume solve of the stationary equation).
constexpr double kH_quarter_1 = 0.31593976099557708141;
constexpr double kC_01 = 0.022907355242000217436, kG_01 = 0.16693837167201108299;
constexpr double kC_1 = 0.073620147031618749653, kG_1 = 0.10825874161718671037;
constexpr double kC_10 = 0.079503110204025278292, kG_10 = 0.012476692417202706328;

// fourth-order centered difference; near -pi/2 at small lambda the third
// derivative of H is too large for the second-order stencil
double five_point(double th, double lambda, double h = 1e-5) {
    auto H = [&](double t) { return H_eval(t, lambda, 1e-13); };
    return (H(th - 2.0 * h) - 8.0 * H(th - h) + 8.0 * H(th + h) - H(th + 2.0 * h)) / (12.0 * h);
}

std::vector<double> interior_grid(std::size_t n) {
    std::vector<double> g;
    for (std::size_t k = 0; k < n; ++k) g.push_back(-kPi / 2.0 * (k + 0.5) / n);
    return g;
}

}  // namespace

TEST_CASE("H matches the frozen oracle and its bounds") {
    CHECK(H_eval(-kPi / 4.0, 1.0) == Approx(kH_quarter_1).epsilon(1e-10));
    CHECK(H_eval(0.0, 0.3) == 0.0);
    for (double lambda : {0.1, 1.0, 10.0}) {
        const double s = std::sin(-kPi / 4.0);
        const double lh = lambda * H_eval(-kPi / 4.0, lambda);
        CHECK(lh > 0.0);
        CHECK(lh < s * s);
    }
    CHECK_THROWS_AS(H_eval(0.1, 1.0), InputError);
    CHECK_THROWS_AS(H_eval(-kPi / 2.0, 1.0), InputError);
    CHECK_THROWS_AS(H_eval(-0.5, 0.0), InputError);
}

TEST_CASE("property: 0 <= lambda H < sin^2 on the grid") {
    for (double lambda : {0.1, 1.0, 10.0})
        for (double th : interior_grid(40)) {
            const double lh = lambda * H_eval(th, lambda);
            CHECK(lh >= 0.0);
            CHECK(lh < std::sin(th) * std::sin(th));
        }
}

TEST_CASE("H derivative identity") {
    const double th = -kPi / 4.0, h = 1e-5;
    const double fd = (H_eval(th + h, 1.0, 1e-13) - H_eval(th - h, 1.0, 1e-13)) / (2.0 * h);
    CHECK(std::abs(H_deriv(th, 1.0) - fd) < 1e-6);
    const AngularDensity dens(1.0);
    const auto p = dens(th);
    CHECK(H_deriv(th, 1.0) == Approx((p[0] - p[1]) / dens.C()).epsilon(1e-9));
    CHECK_THROWS_AS(H_deriv(0.0, 1.0), InputError);
}

TEST_CASE("property: H' matches finite differences and is negative") {
    for (double lambda : {0.1, 1.0, 10.0})
        for (double th : interior_grid(25)) {
            const double fd = five_point(th, lambda);
            const double d = H_deriv(th, lambda);
            CHECK(std::abs(d - fd) <= 1e-6);
            CHECK(d < 0.0);
        }
}

TEST_CASE("normalization constant and G match the frozen oracle") {
    CHECK(C_const(0.1) == Approx(kC_01).epsilon(1e-9));
    CHECK(C_const(1.0) == Approx(kC_1).epsilon(1e-9));
    CHECK(C_const(10.0) == Approx(kC_10).epsilon(1e-9));
    CHECK(std::abs(G_eval(0.1) - kG_01) < 1e-9);
    CHECK(std::abs(G_eval(1.0) - kG_1) < 1e-9);
    CHECK(std::abs(G_eval(10.0) - kG_10) < 1e-9);
}

TEST_CASE("property: density is normalized, nonnegative and ordered") {
    for (double lambda : {0.1, 1.0, 10.0}) {
        const double tol = 1e-10;
        const AngularDensity dens(lambda, tol);
        CHECK(dens.C() > 0.0);
        CHECK(std::abs(dens.normalization() - 1.0) <= 10.0 * tol);
        for (double th : interior_grid(50)) {
            const auto p = dens(th);
            CHECK(p[0] >= 0.0);
            CHECK(p[0] < p[1]);
        }
    }
}

TEST_CASE("density values at the special points") {
    const AngularDensity dens(1.0);
    CHECK(dens(0.0)[0] == 0.0);
    CHECK(dens(0.0)[1] == dens.C());
    CHECK(dens.density(-0.3, 0) < dens.density(-0.3, 1));
    CHECK_THROWS_AS(dens.density(0.1, 2), InputError);
}

TEST_CASE("density symmetries") {
    const AngularDensity dens(2.0);
    for (double th : {-0.7, 0.4, 2.9, -5.1}) {
        const auto p = dens(th);
        const auto half = dens(th + kPi);
        const auto quarter = dens(th + kPi / 2.0);
        CHECK(std::abs(p[0] - half[0]) <= 1e-9);
        CHECK(std::abs(p[1] - half[1]) <= 1e-9);
        CHECK(std::abs(quarter[0] - p[1]) <= 1e-9);
        CHECK(std::abs(quarter[1] - p[0]) <= 1e-9);
    }
}

TEST_CASE("G is positive and the fundamental domain agrees with the full circle") {
    for (double lambda : {0.05, 0.5, 5.0, 50.0}) CHECK(G_eval(lambda) > 0.0);
    const double tol = 1e-10;
    CHECK(std::abs(G_eval(1.0, tol) - G_full_domain(1.0, tol)) <= 10.0 * tol);
}

TEST_CASE("property: G positive across the scan range") {
    for (double x = -3.0; x <= 3.0; x += 0.5) CHECK(G_eval(std::pow(10.0, x)) > 0.0);
}

TEST_CASE("lyapunov_analytic scaling and sign") {
    const double tol = 1e-10;
    const PlanarParams p{1.0, 8.0};
    const double n = 10.0;
    const double big = lyapunov_analytic(p, 2.0, tol);
    const double small = lyapunov_analytic({p.alpha / n, p.c / n}, 2.0 / n, tol);
    CHECK(std::abs(small * n - big) <= 10.0 * tol);
    CHECK(classify(p, 2.0, tol).tag == classify({p.alpha / n, p.c / n}, 2.0 / n, tol).tag);
    CHECK(lyapunov_analytic({100.0, 1.0}, 0.5) < 0.0);
    CHECK(lyapunov_analytic({0.1, 1.0}, 1.0) == Approx(kG_1 - 0.1).margin(1e-9));
    CHECK_THROWS_AS(lyapunov_analytic({1.0, 1.0}, 0.0), InputError);
}

TEST_CASE("classify bands") {
    const double tol = 1e-10;
    CHECK(classify({1.0, 1.0}, 1.0, tol).tag == StabilityTag::Stable);
    CHECK(classify({0.01, 1.0}, 1.0, tol).tag == StabilityTag::Unstable);
    // α chosen to put the exponent exactly at zero up to rounding
    const double g = G_eval(1.0, tol);
    const auto v = classify({g, 1.0}, 1.0, tol);
    CHECK(v.tag == StabilityTag::Inconclusive);
    CHECK(v.margin < 0.0);
}

TEST_CASE("sup_G, windows and their certification") {
    const GMaximum m = sup_G();
    CHECK(m.lambda_star > 1e-3);
    CHECK(m.lambda_star < 1e3);
    for (double x : {0.5, 0.9, 1.1, 2.0}) CHECK(G_eval(m.lambda_star * x) <= m.g_star);

    for (double mult : {1.0, 2.0, 5.0}) {
        const PlanarParams stable{mult * m.g_star + 0.01, 1.0};
        for (double r : {1e-3, 0.1, m.lambda_star, 10.0, 1e3})
            CHECK(classify(stable, r).tag == StabilityTag::Stable);
    }

    const PlanarParams p{0.5 * m.g_star, 1.0};
    const auto w = find_window(p, m);
    REQUIRE(w);
    CHECK(w->a < w->r_star);
    CHECK(w->r_star < w->b);
    CHECK(w->r_star == Approx(m.lambda_star));
    CHECK(w->peak_exponent > 0.0);
    CHECK(classify(p, w->a / 2.0).tag == StabilityTag::Stable);
    CHECK(classify(p, 2.0 * w->b).tag == StabilityTag::Stable);
    CHECK(classify(p, w->r_star).tag == StabilityTag::Unstable);
    CHECK(std::abs(lyapunov_analytic(p, w->a)) < 1e-7);
    CHECK(std::abs(lyapunov_analytic(p, w->b)) < 1e-7);

    CHECK_FALSE(find_window({10.0 * m.g_star, 1.0}, m).has_value());

    // c scales the window
    const auto w2 = find_window({2.0 * p.alpha, 2.0}, m);
    REQUIRE(w2);
    CHECK(w2->a == Approx(2.0 * w->a).epsilon(1e-8));
    CHECK(w2->b == Approx(2.0 * w->b).epsilon(1e-8));
}

TEST_CASE("stationarity residual") {
    std::vector<double> grid;
    for (int k = 0; k < 100; ++k) grid.push_back(-1e-3 - (kPi / 2.0 - 2e-3) * k / 99.0);
    CHECK(stationarity_residual(1.0, grid) <= 1e-6);
    for (double lambda : {0.1, 10.0}) CHECK(stationarity_residual(lambda, grid) <= 1e-6);
    CHECK(stationarity_residual(1.0, grid, 1e-10, 1.01) >= 1e-3);

    for (double th : {-0.2, -0.9, -1.4}) {
        const double base[1] = {th};
        const double r0 = stationarity_residual(1.5, base, 1e-10, 1.01);
        for (int q = 1; q < 4; ++q) {
            const double copy[1] = {th + q * kPi / 2.0};
            CHECK(stationarity_residual(1.5, copy, 1e-10, 1.01) == Approx(r0).epsilon(1e-9));
        }
    }
    const double bad[1] = {-1e-4};
    CHECK_THROWS_AS(stationarity_residual(1.0, bad), InputError);
}
