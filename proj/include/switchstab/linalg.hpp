#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "switchstab/errors.hpp"

namespace switchstab {

using Vector = Eigen::VectorXd;

inline constexpr double kHurwitzTol = 1e-10;
inline constexpr double kPredicateTol = 1e-10;
/// Largest ‖A‖·t for which exp(A t) is formed explicitly; e^709 overflows.
inline constexpr double kMaxExpArgument = 700.0;

/**
 * @brief Dense real d×d matrix with finite entries.
 *
 * Thin immutable wrapper over Eigen::MatrixXd that enforces the shape and
 * finiteness invariants at construction.
 */
class SquareMatrix {
public:
    explicit SquareMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
        if (m_.rows() < 1 || m_.rows() != m_.cols())
            throw InputError("SquareMatrix: expected a nonempty square matrix, got " +
                             std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
        if (!m_.allFinite())
            throw InputError("SquareMatrix: entries must be finite");
    }

    SquareMatrix(std::initializer_list<std::initializer_list<double>> rows)
        : SquareMatrix(from_rows(std::vector<std::vector<double>>(rows.begin(), rows.end()))) {}

    static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        const auto d = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd m(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            if (static_cast<Eigen::Index>(rows[i].size()) != d)
                throw InputError("SquareMatrix: row " + std::to_string(i) + " has " +
                                 std::to_string(rows[i].size()) + " entries, expected " +
                                 std::to_string(d));
            for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rows[i][j];
        }
        return SquareMatrix(std::move(m));
    }

    static SquareMatrix identity(std::size_t d) {
        return SquareMatrix(Eigen::MatrixXd::Identity(idx(d), idx(d)));
    }
    static SquareMatrix zero(std::size_t d) { return SquareMatrix(Eigen::MatrixXd::Zero(idx(d), idx(d))); }
    static SquareMatrix diagonal(std::span<const double> diag) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(idx(diag.size()), idx(diag.size()));
        for (std::size_t i = 0; i < diag.size(); ++i) m(idx(i), idx(i)) = diag[i];
        return SquareMatrix(std::move(m));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    double operator()(std::size_t i, std::size_t j) const { return m_(idx(i), idx(j)); }
    const Eigen::MatrixXd& eigen() const noexcept { return m_; }

    std::vector<std::vector<double>> rows() const {
        std::vector<std::vector<double>> out(dim(), std::vector<double>(dim()));
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j) out[i][j] = (*this)(i, j);
        return out;
    }

    SquareMatrix transpose() const { return SquareMatrix(m_.transpose()); }
    double trace() const { return m_.trace(); }
    double determinant() const { return m_.determinant(); }
    double frobenius_norm() const { return m_.norm(); }

    friend SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b) {
        require_same_dim(a, b, "operator+");
        return SquareMatrix(a.m_ + b.m_);
    }
    friend SquareMatrix operator-(const SquareMatrix& a, const SquareMatrix& b) {
        require_same_dim(a, b, "operator-");
        return SquareMatrix(a.m_ - b.m_);
    }
    friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
        require_same_dim(a, b, "operator*");
        return SquareMatrix(a.m_ * b.m_);
    }
    friend SquareMatrix operator*(double s, const SquareMatrix& a) { return SquareMatrix(s * a.m_); }
    friend Vector operator*(const SquareMatrix& a, const Vector& x) {
        if (static_cast<std::size_t>(x.size()) != a.dim()) throw InputError("matrix-vector dimension mismatch");
        return a.m_ * x;
    }
    friend bool operator==(const SquareMatrix& a, const SquareMatrix& b) {
        return a.dim() == b.dim() && a.m_ == b.m_;
    }

    static void require_same_dim(const SquareMatrix& a, const SquareMatrix& b, std::string_view where) {
        if (a.dim() != b.dim())
            throw InputError(std::string(where) + ": dimension mismatch (" + std::to_string(a.dim()) +
                             " vs " + std::to_string(b.dim()) + ")");
    }

private:
    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

    Eigen::MatrixXd m_;
};

struct Spectrum {
    std::vector<std::complex<double>> eigenvalues;
    double spectral_abscissa = 0.0;
};

/// Eigenvalues with multiplicity. 2×2 uses the characteristic quadratic;
/// larger matrices use Eigen's Hessenberg-QR with an iteration cap of 100·d.
inline Spectrum eigenvalues(const SquareMatrix& a) {
    Spectrum s;
    const std::size_t d = a.dim();
    if (d == 1) {
        s.eigenvalues = {a(0, 0)};
    } else if (d == 2) {
        const double half_tr = 0.5 * (a(0, 0) + a(1, 1));
        const double half_diff = 0.5 * (a(0, 0) - a(1, 1));
        const double disc = half_diff * half_diff + a(0, 1) * a(1, 0);
        if (disc >= 0.0) {
            const double root = std::sqrt(disc);
            // larger-magnitude root first, then Vieta for the other to avoid cancellation
            const double big = half_tr + std::copysign(root, half_tr);
            const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
            const double small = big != 0.0 ? det / big : half_tr - std::copysign(root, half_tr);
            s.eigenvalues = {big, small};
        } else {
            const double im = std::sqrt(-disc);
            s.eigenvalues = {{half_tr, im}, {half_tr, -im}};
        }
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> solver;
        solver.setMaxIterations(static_cast<Eigen::Index>(100 * d));
        solver.compute(a.eigen(), /*computeEigenvectors=*/false);
        if (solver.info() != Eigen::Success)
            throw NumericalError("eigenvalues: QR iteration did not converge within " +
                                 std::to_string(100 * d) + " iterations");
        const auto& ev = solver.eigenvalues();
        s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    }
    s.spectral_abscissa = s.eigenvalues.front().real();
    for (const auto& z : s.eigenvalues) s.spectral_abscissa = std::max(s.spectral_abscissa, z.real());
    return s;
}

enum class HurwitzVerdict { Hurwitz, Marginal, Unstable };

constexpr std::string_view to_string(HurwitzVerdict v) {
    switch (v) {
        case HurwitzVerdict::Hurwitz: return "Hurwitz";
        case HurwitzVerdict::Marginal: return "Marginal";
        case HurwitzVerdict::Unstable: return "Unstable";
    }
    return "?";
}

inline HurwitzVerdict is_hurwitz(const SquareMatrix& a, double tol = kHurwitzTol) {
    if (!(tol >= 0.0)) throw InputError("is_hurwitz: tol must be >= 0");
    const double abscissa = eigenvalues(a).spectral_abscissa;
    if (abscissa < -tol) return HurwitzVerdict::Hurwitz;
    if (abscissa > tol) return HurwitzVerdict::Unstable;
    return HurwitzVerdict::Marginal;
}

inline bool is_normal(const SquareMatrix& a, double tol = kPredicateTol) {
    if (!(tol >= 0.0)) throw InputError("is_normal: tol must be >= 0");
    const Eigen::MatrixXd& m = a.eigen();
    const double f = m.norm();
    return (m * m.transpose() - m.transpose() * m).norm() <= tol * (1.0 + f * f);
}

inline bool commute(const SquareMatrix& a, const SquareMatrix& b, double tol = kPredicateTol) {
    SquareMatrix::require_same_dim(a, b, "commute");
    if (!(tol >= 0.0)) throw InputError("commute: tol must be >= 0");
    const auto& x = a.eigen();
    const auto& y = b.eigen();
    return (x * y - y * x).norm() <= tol * (1.0 + x.norm() * y.norm());
}

/// Spectral norm (largest singular value).
inline double operator_norm(const SquareMatrix& a) {
    const std::size_t d = a.dim();
    if (d == 1) return std::abs(a(0, 0));
    if (d == 2) {
        const double f2 = a.eigen().squaredNorm();
        const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        const double gap = std::sqrt(std::max(0.0, (f2 - 2.0 * det) * (f2 + 2.0 * det)));
        return std::sqrt(0.5 * (f2 + gap));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.eigen());
    return svd.singularValues()(0);
}

/// Weighted sum Σ w_i A_i for a probability vector w.
inline SquareMatrix average_matrix(std::span<const SquareMatrix> matrices, std::span<const double> weights) {
    if (matrices.empty()) throw InputError("average_matrix: no matrices");
    if (matrices.size() != weights.size())
        throw InputError("average_matrix: " + std::to_string(matrices.size()) + " matrices but " +
                         std::to_string(weights.size()) + " weights");
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw InputError("average_matrix: weight " + std::to_string(i) + " is negative");
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("average_matrix: weights do not sum to 1");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(matrices[0].eigen().rows(), matrices[0].eigen().cols());
    for (std::size_t i = 0; i < matrices.size(); ++i) {
        SquareMatrix::require_same_dim(matrices[0], matrices[i], "average_matrix");
        acc += weights[i] * matrices[i].eigen();
    }
    return SquareMatrix(std::move(acc));
}

/**
 * @brief Precomputed evaluator for t ↦ exp(A t).
 *
 * Chooses a closed form when one applies:
 *  - ShiftedNilpotent: A = D + M with D diagonal, M² = 0 and DM = MD exactly,
 *    so exp(At) = e^{Dt}(I + tM). Covers diagonal matrices and the planar
 *    construction family (−αI + cN) including its block-diagonal stacking.
 *  - TwoByTwo: exp(At) = e^{st}(φ(t)I + ψ(t)(A − sI)) with s = tr(A)/2.
 *  - General: scaling-and-squaring with a Padé approximant (Eigen).
 */
class ExpKernel {
public:
    enum class Kind { ShiftedNilpotent, TwoByTwo, General };

    explicit ExpKernel(const SquareMatrix& a) : a_(a), norm_(operator_norm(a)) {
        const std::size_t d = a.dim();
        diag_.resize(d);
        for (std::size_t i = 0; i < d; ++i) diag_[i] = a(i, i);
        if (shifted_nilpotent(a)) {
            kind_ = Kind::ShiftedNilpotent;
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    if (i != j && a(i, j) != 0.0) off_.push_back({i, j, a(i, j)});
        } else if (d == 2) {
            kind_ = Kind::TwoByTwo;
            shift_ = 0.5 * (a(0, 0) + a(1, 1));
            const double h = 0.5 * (a(0, 0) - a(1, 1));
            q_ = h * h + a(0, 1) * a(1, 0);
        } else {
            kind_ = Kind::General;
        }
    }

    Kind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return a_.dim(); }
    /// Spectral norm of A.
    double norm() const noexcept { return norm_; }

    /// y = exp(A t) x. x and y must not alias.
    void apply(double t, std::span<const double> x, std::span<double> y) const {
        const std::size_t d = dim();
        switch (kind_) {
            case Kind::ShiftedNilpotent: {
                for (std::size_t i = 0; i < d; ++i) y[i] = x[i];
                for (const auto& e : off_) y[e.row] += t * e.value * x[e.col];
                for (std::size_t i = 0; i < d; ++i) y[i] *= std::exp(diag_[i] * t);
                return;
            }
            case Kind::TwoByTwo: {
                double c[4];
                two_by_two(t, c);
                y[0] = c[0] * x[0] + c[1] * x[1];
                y[1] = c[2] * x[0] + c[3] * x[1];
                return;
            }
            case Kind::General: {
                const Eigen::MatrixXd e = (a_.eigen() * t).exp();
                Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(d));
                Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(d));
                yv.noalias() = e * xv;
                return;
            }
        }
    }

    /// exp(A t) as a matrix.
    SquareMatrix matrix(double t) const {
        const std::size_t d = dim();
        if (kind_ == Kind::General) return SquareMatrix((a_.eigen() * t).exp());
        Eigen::MatrixXd out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        if (kind_ == Kind::TwoByTwo) {
            double c[4];
            two_by_two(t, c);
            out << c[0], c[1], c[2], c[3];
            return SquareMatrix(std::move(out));
        }
        std::vector<double> col(d), res(d);
        for (std::size_t j = 0; j < d; ++j) {
            std::fill(col.begin(), col.end(), 0.0);
            col[j] = 1.0;
            apply(t, col, res);
            for (std::size_t i = 0; i < d; ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = res[i];
        }
        return SquareMatrix(std::move(out));
    }

private:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    static bool shifted_nilpotent(const SquareMatrix& a) {
        const std::size_t d = a.dim();
        Eigen::MatrixXd m = a.eigen();
        for (std::size_t i = 0; i < d; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (a(i, j) != 0.0 && a(i, i) != a(j, j)) return false;
        return (m * m).cwiseAbs().maxCoeff() == 0.0;
    }

    // Row-major coefficients of exp(A t) for the 2×2 case.
    void two_by_two(double t, double* c) const {
        const double x = q_ * t * t;
        double phi, psi;
        if (std::abs(x) < 1e-8) {
            phi = 1.0 + x / 2.0 + x * x / 24.0;
            psi = t * (1.0 + x / 6.0 + x * x / 120.0);
        } else if (q_ > 0.0) {
            const double mu = std::sqrt(q_);
            phi = std::cosh(mu * t);
            psi = std::sinh(mu * t) / mu;
        } else {
            const double mu = std::sqrt(-q_);
            phi = std::cos(mu * t);
            psi = std::sin(mu * t) / mu;
        }
        const double g = std::exp(shift_ * t);
        const double h = 0.5 * (diag_[0] - diag_[1]);
        c[0] = g * (phi + psi * h);
        c[1] = g * psi * a_(0, 1);
        c[2] = g * psi * a_(1, 0);
        c[3] = g * (phi - psi * h);
    }

    SquareMatrix a_;
    double norm_;
    Kind kind_ = Kind::General;
    std::vector<double> diag_;
    std::vector<Entry> off_;
    double shift_ = 0.0;
    double q_ = 0.0;
};

/// exp(A t) for t ≥ 0. Throws OverflowRisk when ‖A‖·t exceeds kMaxExpArgument.
inline SquareMatrix mat_exp(const SquareMatrix& a, double t) {
    if (!std::isfinite(t) || t < 0.0) throw InputError("mat_exp: t must be finite and >= 0");
    const ExpKernel kernel(a);
    if (kernel.norm() * t > kMaxExpArgument)
        throw OverflowRisk("mat_exp: ||A||*t = " + std::to_string(kernel.norm() * t) +
                           " would overflow; propagate in polar form instead");
    return kernel.matrix(t);
}

}  // namespace switchstab
