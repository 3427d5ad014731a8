#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "switchstab/errors.hpp"
#include "switchstab/rng.hpp"

namespace switchstab {

/// Generator validation failure; names the offending entry or component.
class GeneratorError : public InputError {
public:
    enum class Kind { Shape, RowSumViolation, NegativeRate, NotIrreducible };

    GeneratorError(Kind kind, const std::string& what, std::size_t row = 0, std::size_t col = 0)
        : InputError(what), kind_(kind), row_(row), col_(col) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    Kind kind_;
    std::size_t row_;
    std::size_t col_;
};

namespace detail {

inline std::vector<bool> reachable(const std::vector<std::vector<double>>& q, std::size_t from, bool reverse) {
    const std::size_t n = q.size();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n; ++j) {
            const double rate = reverse ? q[j][i] : q[i][j];
            if (j != i && rate > 0.0 && !seen[j]) {
                seen[j] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

}  // namespace detail

/// Checks shape, nonnegative off-diagonal rates, zero row sums and irreducibility.
inline void validate_generator(const std::vector<std::vector<double>>& q) {
    using K = GeneratorError::Kind;
    const std::size_t n = q.size();
    if (n < 2) throw GeneratorError(K::Shape, "generator: need at least 2 states, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (q[i].size() != n)
            throw GeneratorError(K::Shape, "generator: row " + std::to_string(i) + " has " +
                                               std::to_string(q[i].size()) + " entries, expected " +
                                               std::to_string(n), i);
        for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(q[i][j]))
                throw GeneratorError(K::Shape, "generator: entry Q[" + std::to_string(i) + "][" +
                                                   std::to_string(j) + "] is not finite", i, j);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0, scale = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && q[i][j] < 0.0)
                throw GeneratorError(K::NegativeRate, "generator: negative rate Q[" + std::to_string(i) + "][" +
                                                          std::to_string(j) + "] = " + std::to_string(q[i][j]),
                                     i, j);
            sum += q[i][j];
            scale += std::abs(q[i][j]);
        }
        if (std::abs(sum) > 1e-12 * std::max(1.0, scale))
            throw GeneratorError(K::RowSumViolation, "generator: row " + std::to_string(i) + " sums to " +
                                                         std::to_string(sum) + ", expected 0",
                                 i);
    }
    const auto fwd = detail::reachable(q, 0, false);
    const auto bwd = detail::reachable(q, 0, true);
    for (std::size_t i = 0; i < n; ++i) {
        if (!fwd[i])
            throw GeneratorError(K::NotIrreducible,
                                 "generator: state " + std::to_string(i) + " is not reachable from state 0", i);
        if (!bwd[i])
            throw GeneratorError(K::NotIrreducible,
                                 "generator: state 0 is not reachable from state " + std::to_string(i), i);
    }
}

/**
 * @brief Validated generator Q of an irreducible finite-state chain.
 *
 * The exit rate of state i is q_i = −Q[i][i] (positive for every state of an
 * irreducible chain); the chain run at rate multiplier r holds in i for an
 * Exponential(r q_i) time.
 */
class Generator {
public:
    explicit Generator(std::vector<std::vector<double>> q) : q_(std::move(q)) {
        validate_generator(q_);
        exit_.resize(q_.size());
        for (std::size_t i = 0; i < q_.size(); ++i) exit_[i] = -q_[i][i];
    }

    /// Symmetric two-state generator [[−1, 1], [1, −1]].
    static Generator symmetric_two_state() { return Generator({{-1.0, 1.0}, {1.0, -1.0}}); }

    std::size_t states() const noexcept { return q_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return q_[i][j]; }
    double exit_rate(std::size_t i) const { return exit_[i]; }
    const std::vector<std::vector<double>>& rows() const noexcept { return q_; }

    /// Embedded-chain step: cumulative-sum inversion over j ≠ i in ascending order.
    std::size_t next_state(std::size_t i, double u) const {
        const double target = u * exit_[i];
        double cum = 0.0;
        std::size_t last = i;
        for (std::size_t j = 0; j < q_.size(); ++j) {
            if (j == i || q_[i][j] <= 0.0) continue;
            cum += q_[i][j];
            last = j;
            if (cum >= target) return j;
        }
        return last;
    }

private:
    std::vector<std::vector<double>> q_;
    std::vector<double> exit_;
};

/// Solves πQ = 0, Σπ = 1 with the normalization replacing the last balance equation.
inline std::vector<double> stationary(const Generator& gen) {
    const std::size_t n = gen.states();
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd m(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) m(i, j) = gen(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
    m.row(N - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    rhs(N - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw NumericalError("stationary: balance system is singular");
    const Eigen::VectorXd pi = lu.solve(rhs);
    return {pi.data(), pi.data() + pi.size()};
}

struct Sojourn {
    std::size_t state;
    double holding;
};

/**
 * @brief Realization of the switching chain on [0, T].
 *
 * `jumps` holds the completed sojourns (ξ_k, τ_k), k = 1..N(T); the chain
 * then sits in `final_state` = ξ_{N+1} for the residual a_T.
 */
struct JumpPath {
    std::size_t initial_state = 0;
    std::vector<Sojourn> jumps;
    std::size_t final_state = 0;
    double residual = 0.0;
    double horizon = 0.0;

    std::size_t jump_count() const noexcept { return jumps.size(); }

    /// Calls f(state, duration) for every sojourn including the residual one.
    template <class F>
    void for_each_segment(F&& f) const {
        for (const auto& s : jumps) f(s.state, s.holding);
        f(final_state, residual);
    }

    /// State occupied at time t (right-continuous).
    std::size_t state_at(double t) const {
        double acc = 0.0;
        for (const auto& s : jumps) {
            acc += s.holding;
            if (t < acc) return s.state;
        }
        return final_state;
    }
};

/// Samples the chain with generator rQ from state i0 on [0, T] using `stream`.
inline JumpPath sample_path(const Generator& gen, double r, std::size_t i0, double horizon, Stream& stream) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InputError("sample_path: rate r must be positive and finite");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw InputError("sample_path: horizon must be >= 0");
    if (i0 >= gen.states()) throw InputError("sample_path: initial state out of range");
    JumpPath path;
    path.initial_state = i0;
    path.horizon = horizon;
    std::size_t state = i0;
    double elapsed = 0.0;
    for (;;) {
        const double hold = stream.exponential(r * gen.exit_rate(state));
        if (elapsed + hold >= horizon) break;
        path.jumps.push_back({state, hold});
        elapsed += hold;
        state = gen.next_state(state, stream.uniform_open0());
    }
    path.final_state = state;
    path.residual = horizon - elapsed;
    return path;
}

inline JumpPath sample_path(const Generator& gen, double r, std::size_t i0, double horizon, std::uint64_t seed) {
    Stream stream = Stream::derive(seed, {stream_label::kPathSample});
    return sample_path(gen, r, i0, horizon, stream);
}

/// Draws a state from a probability vector by cumulative inversion.
inline std::size_t sample_state(std::span<const double> probs, Stream& stream) {
    const double u = stream.uniform_open0();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u <= cum) return i;
    }
    return probs.size() - 1;
}

/// Fraction of [0, T] spent in each state.
inline std::vector<double> occupation_fractions(const JumpPath& path, std::size_t n_states) {
    if (!(path.horizon > 0.0)) throw InputError("occupation_fractions: horizon must be positive");
    std::vector<double> occ(n_states, 0.0);
    path.for_each_segment([&](std::size_t s, double dt) {
        if (s >= n_states) throw InputError("occupation_fractions: state index out of range");
        occ[s] += dt;
    });
    for (double& o : occ) o /= path.horizon;
    return occ;
}

/// Splits a path at time t into the pieces on [0, t] and [t, T].
inline std::pair<JumpPath, JumpPath> split_path(const JumpPath& path, double t) {
    if (!(t >= 0.0 && t <= path.horizon)) throw InputError("split_path: split time outside [0, T]");
    JumpPath head, tail;
    head.initial_state = path.initial_state;
    head.horizon = t;
    tail.horizon = path.horizon - t;
    double elapsed = 0.0;
    bool split_done = false;
    auto visit = [&](std::size_t state, double dt, bool last) {
        if (!split_done) {
            if (elapsed + dt <= t && !last) {
                head.jumps.push_back({state, dt});
                elapsed += dt;
                return;
            }
            head.final_state = state;
            head.residual = t - elapsed;
            tail.initial_state = state;
            split_done = true;
            const double rest = dt - head.residual;
            if (last) {
                tail.final_state = state;
                tail.residual = rest;
            } else {
                tail.jumps.push_back({state, rest});
            }
            return;
        }
        if (last) {
            tail.final_state = state;
            tail.residual = dt;
        } else {
            tail.jumps.push_back({state, dt});
        }
    };
    for (const auto& s : path.jumps) visit(s.state, s.holding, false);
    visit(path.final_state, path.residual, true);
    return {std::move(head), std::move(tail)};
}

}  // namespace switchstab
