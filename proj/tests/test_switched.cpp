#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "switchstab/constructions.hpp"
#include "switchstab/switched.hpp"

using namespace switchstab;
using Catch::Approx;

namespace {

SwitchedSystem single(const SquareMatrix& a) {
    // a two-state chain with identical matrices behaves as a single-state system
    return SwitchedSystem({a, a}, Generator::symmetric_two_state(), 1.0);
}

Vector unit(double x, double y) { return Vector{{x, y}}.normalized(); }

SquareMatrix random_matrix(Stream& s, std::size_t d, double scale) {
    Eigen::MatrixXd m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = scale * (2.0 * s.uniform_open0() - 1.0);
    return SquareMatrix(m);
}

}  // namespace

TEST_CASE("SwitchedSystem validation and derived quantities") {
    const auto sys = example_fast_only(3.0);
    CHECK(sys.dim() == 2);
    CHECK(sys.states() == 2);
    CHECK(sys.rate() == 3.0);
    CHECK(sys.bound() == Approx(operator_norm(sys.matrices()[0])));
    CHECK(sys.average() == (SquareMatrix{{-0.5, 2.0}, {0.0, -0.5}}));
    CHECK(sys.with_rate(7.0).rate() == 7.0);
    CHECK_THROWS_AS(SwitchedSystem({SquareMatrix::identity(2)}, Generator::symmetric_two_state(), 1.0), InputError);
    CHECK_THROWS_AS(SwitchedSystem({SquareMatrix::identity(2), SquareMatrix::identity(3)},
                                   Generator::symmetric_two_state(), 1.0),
                    InputError);
    CHECK_THROWS_AS(example_fast_only(0.0), InputError);
}

TEST_CASE("propagate_dense: no jumps and one jump") {
    const auto sys = example_fast_only();
    const Vector x0{{0.3, -1.2}};
    JumpPath still;
    still.initial_state = still.final_state = 1;
    still.horizon = still.residual = 0.8;
    const Vector a = propagate_dense(sys, still, x0);
    const Vector b = mat_exp(sys.matrices()[1], 0.8).eigen() * x0;
    CHECK((a - b).norm() < 1e-14);

    JumpPath one;
    one.initial_state = 0;
    one.jumps = {{0, 0.5}};
    one.final_state = 1;
    one.residual = 0.25;
    one.horizon = 0.75;
    const Vector c = propagate_dense(sys, one, x0);
    const Vector d = mat_exp(sys.matrices()[1], 0.25).eigen() * (mat_exp(sys.matrices()[0], 0.5).eigen() * x0);
    CHECK((c - d).norm() < 1e-13);
    CHECK((propagator(sys, one).eigen() * x0 - d).norm() < 1e-13);
}

TEST_CASE("propagate_dense guards overflow") {
    const auto sys = example_fast_only();
    JumpPath long_path;
    long_path.horizon = long_path.residual = 1000.0;
    CHECK_THROWS_AS(propagate_dense(sys, long_path, Vector{{1.0, 0.0}}), OverflowRisk);
    CHECK_THROWS_AS(propagator(sys, long_path), OverflowRisk);
}

TEST_CASE("polar form of -I") {
    const auto sys = single(-1.0 * SquareMatrix::identity(2));
    const Vector u0 = unit(0.6, 0.8);
    JumpPath p;
    p.horizon = p.residual = 3.5;
    const auto s = propagate_polar(sys, p, u0);
    CHECK(s.log_radius == Approx(-3.5).epsilon(1e-14));
    CHECK((s.direction - u0).norm() < 1e-14);
    REQUIRE(s.theta);
    CHECK(*s.theta == Approx(std::atan2(0.8, 0.6)).epsilon(1e-14));
    CHECK_THROWS_AS(propagate_polar(sys, p, Vector{{1.0, 1.0}}), InputError);
}

TEST_CASE("property: polar and dense propagation agree") {
    Stream s = Stream::derive(5, {});
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t d = 2 + trial % 3;
        std::vector<SquareMatrix> ms;
        for (int i = 0; i < 3; ++i) ms.push_back(random_matrix(s, d, 1.0));
        const Generator g({{-1.0, 0.5, 0.5}, {0.2, -0.4, 0.2}, {1.0, 1.0, -2.0}});
        const SwitchedSystem sys(ms, g, 0.5 + 3.0 * s.uniform_open0());
        const double T = std::min(20.0 / sys.bound(), 30.0);
        const JumpPath path = sample_path(g, sys.rate(), trial % 3, T, s);
        const Vector u0 = default_direction(d);
        const double dense = std::log(propagate_dense(sys, path, u0).norm());
        const auto polar = propagate_polar(sys, path, u0);
        CHECK(std::abs(dense - polar.log_radius) <= 1e-8 * (1.0 + sys.bound() * T));

        // path composition: halves propagate sequentially to the whole
        const auto [head, tail] = split_path(path, T / 2.0);
        const Vector whole = propagate_dense(sys, path, u0);
        const Vector seq = propagate_dense(sys, tail, propagate_dense(sys, head, u0));
        CHECK((whole - seq).norm() <= 1e-10 * whole.norm());
        CHECK(std::abs(propagator(sys, path).determinant()) > 0.0);
    }
}

TEST_CASE("planar angle is nonincreasing and lifts the direction") {
    const auto sys = planar_system({0.3, 2.0}, 0.7);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Stream st = Stream::derive(seed, {});
        const Vector u0 = unit(2.0 * st.uniform_open0() - 1.0, 2.0 * st.uniform_open0() - 1.0);
        const JumpPath path = sample_path(sys.generator(), sys.rate(), seed % 2, 60.0, st);
        const auto rows = trajectory(sys, path, u0);
        REQUIRE(rows.size() == path.jump_count() + 2);
        for (std::size_t k = 1; k < rows.size(); ++k) {
            REQUIRE(rows[k].theta);
            CHECK(*rows[k].theta <= *rows[k - 1].theta + 1e-12);
        }
        const auto fin = propagate_polar(sys, path, u0);
        CHECK(std::abs(std::cos(*fin.theta) - fin.direction(0)) < 1e-9);
        CHECK(std::abs(std::sin(*fin.theta) - fin.direction(1)) < 1e-9);
        CHECK(rows.back().log_radius == Approx(fin.log_radius).margin(1e-12));
    }
}

TEST_CASE("theta is absent for d != 2") {
    const auto sys = single(SquareMatrix{{-1.0, 0.0, 0.0}, {0.0, -2.0, 0.0}, {0.0, 0.0, -3.0}});
    JumpPath p;
    p.horizon = p.residual = 1.0;
    CHECK_FALSE(propagate_polar(sys, p, default_direction(3)).theta.has_value());
}

TEST_CASE("lyapunov_mc of a diagonal flow is the top eigenvalue") {
    const auto sys = single(SquareMatrix{{-1.0, 0.0}, {0.0, -3.0}});
    McConfig cfg;
    cfg.horizon = 200.0;
    cfg.replicas = 4;
    cfg.seed = 1;
    const auto est = lyapunov_mc(sys, cfg);
    CHECK(est.mean == Approx(-1.0).margin(1e-10));
    CHECK(est.verdict() == StabilityTag::Stable);
    CHECK(est.burn_in == 20.0);

    McConfig bad = cfg;
    bad.replicas = 1;
    CHECK_THROWS_AS(lyapunov_mc(sys, bad), InputError);
    bad = cfg;
    bad.burn_in = 300.0;
    CHECK_THROWS_AS(lyapunov_mc(sys, bad), InputError);
}

TEST_CASE("lyapunov_mc matches the planar closed form") {
    const PlanarParams p{0.1, 1.0};
    const double r = 0.5;
    McConfig cfg;
    cfg.horizon = 2000.0;
    cfg.replicas = 100;
    cfg.seed = 2;
    const auto est = lyapunov_mc(planar_system(p, r), cfg);
    const double exact = lyapunov_analytic(p, r);
    CHECK(std::abs(est.mean - exact) <= 3.0 * est.stderr() + 1e-8);
}

TEST_CASE("fast switching stabilizes the fast-only example") {
    McConfig cfg;
    cfg.horizon = 200.0;
    cfg.replicas = 50;
    cfg.seed = 3;
    const auto est = lyapunov_mc(example_fast_only(100.0), cfg);
    CHECK(est.verdict() == StabilityTag::Stable);
}

TEST_CASE("commuting diagonal pair is stable at every rate") {
    const SwitchedSystem base({SquareMatrix{{1.0, 0.0}, {0.0, -2.0}}, SquareMatrix{{-2.0, 0.0}, {0.0, 1.0}}},
                              Generator::symmetric_two_state(), 1.0);
    for (double r : {0.1, 1.0, 10.0}) {
        McConfig cfg;
        cfg.horizon = 1000.0;
        cfg.replicas = 40;
        cfg.seed = 4;
        const auto est = lyapunov_mc(base.with_rate(r), cfg);
        CHECK(est.mean + 3.0 * est.stderr() < 0.0);
    }
}

TEST_CASE("slow switching below the window is stable") {
    const auto w = find_window({0.05, 1.0});
    REQUIRE(w);
    const double r = w->a / 4.0;
    McConfig cfg;
    cfg.horizon = 400.0 / r;
    cfg.replicas = 60;
    cfg.seed = 6;
    const auto est = lyapunov_mc(planar_system({0.05, 1.0}, r), cfg);
    CHECK(est.mean + 3.0 * est.stderr() < 0.0);
}

TEST_CASE("lyapunov_mc is independent of the thread count") {
    McConfig cfg;
    cfg.horizon = 300.0;
    cfg.replicas = 16;
    cfg.seed = 9;
    const auto sys = planar_system({0.1, 1.0}, 0.3);
    cfg.threads = 1;
    const auto a = lyapunov_mc(sys, cfg);
    cfg.threads = 4;
    const auto b = lyapunov_mc(sys, cfg);
    CHECK(a.values == b.values);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr() == b.stderr());
}

TEST_CASE("propagator_norm_mc") {
    const SquareMatrix a{{-0.5, 2.0}, {0.0, -1.0}};
    const auto est = propagator_norm_mc(single(a), 2.0, 10, 1);
    CHECK(est.mean == Approx(operator_norm(mat_exp(a, 2.0))).epsilon(1e-12));
    CHECK(est.stderr < 1e-12);

    const auto sys = example_fast_only(10.0);
    const double T = 3.0;
    const auto e = propagator_norm_mc(sys, T, 100, 2);
    CHECK(e.mean <= std::exp(sys.bound() * T) * (1.0 + 3.0 * e.stderr));
    for (double v : e.values) CHECK(v <= std::exp(sys.bound() * T) * (1.0 + 1e-12));
    CHECK_THROWS_AS(propagator_norm_mc(sys, 1000.0, 10, 1), OverflowRisk);
    CHECK_THROWS_AS(propagator_norm_mc(sys, 1.0, 1, 1), InputError);
}

TEST_CASE("monotone_norm_check") {
    const SwitchedSystem spd({SquareMatrix{{-2.0, 0.5}, {0.5, -1.0}}, SquareMatrix{{-1.0, 0.0}, {0.0, -0.3}}},
                             Generator::symmetric_two_state(), 1.0);
    CHECK(monotone_norm_check(spd, 20, 10.0, 200, 1));
    const SwitchedSystem rot({SquareMatrix{{-1.0, 2.0}, {-2.0, -1.0}}, SquareMatrix{{-2.0, -5.0}, {5.0, -2.0}}},
                             Generator::symmetric_two_state(), 2.0);
    CHECK(monotone_norm_check(rot, 20, 10.0, 500, 2));
    CHECK_THROWS_AS(monotone_norm_check(planar_system({1.0, 2.0}, 1.0), 5, 1.0, 10, 3), HypothesisViolated);
    const SwitchedSystem unstable({SquareMatrix{{0.5, 0.0}, {0.0, -1.0}}, SquareMatrix{{-1.0, 0.0}, {0.0, -1.0}}},
                                  Generator::symmetric_two_state(), 1.0);
    CHECK_THROWS_AS(monotone_norm_check(unstable, 5, 1.0, 10, 3), HypothesisViolated);
}
