#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "switchstab/constructions.hpp"
#include "switchstab/ctmc.hpp"
#include "switchstab/errors.hpp"
#include "switchstab/linalg.hpp"
#include "switchstab/planar.hpp"
#include "switchstab/switched.hpp"

namespace switchstab::io {

using json = nlohmann::json;

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

/// Input error naming the JSON field at fault, e.g. "matrices[1].rows[0]".
class FieldError : public InputError {
public:
    FieldError(const std::string& field, const std::string& what)
        : InputError("field '" + field + "': " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw FieldError(where.empty() ? "<root>" : where, "expected an object");
    const auto it = obj.find(key);
    const std::string field = where.empty() ? key : where + "." + key;
    if (it == obj.end()) throw FieldError(field, "missing");
    return *it;
}

inline double number(const json& v, const std::string& field) {
    if (!v.is_number()) throw FieldError(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw FieldError(field, "must be finite");
    return x;
}

inline std::size_t count(const json& v, const std::string& field) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw FieldError(field, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

inline std::vector<std::vector<double>> rows(const json& v, std::size_t n, const std::string& field) {
    if (!v.is_array()) throw FieldError(field, "expected an array of rows");
    if (v.size() != n)
        throw FieldError(field, "expected " + std::to_string(n) + " rows, got " + std::to_string(v.size()));
    std::vector<std::vector<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string rf = field + "[" + std::to_string(i) + "]";
        if (!v[i].is_array() || v[i].size() != n)
            throw FieldError(rf, "expected an array of " + std::to_string(n) + " numbers");
        for (std::size_t j = 0; j < n; ++j) out[i].push_back(number(v[i][j], rf + "[" + std::to_string(j) + "]"));
    }
    return out;
}

}  // namespace detail

/// {"dim": d, "rows": [[...], ...]}
inline SquareMatrix parse_matrix(const json& v, const std::string& where = "") {
    const std::size_t d = detail::count(detail::require(v, "dim", where), where + ".dim");
    if (d == 0) throw FieldError(where + ".dim", "must be positive");
    return SquareMatrix::from_rows(detail::rows(detail::require(v, "rows", where), d, where + ".rows"));
}

inline json matrix_to_json(const SquareMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return {{"dim", m.dim()}, {"rows", std::move(rows)}};
}

/// {"states": n, "Q": [[...], ...]}
inline Generator parse_generator(const json& v, const std::string& where = "") {
    const std::size_t n = detail::count(detail::require(v, "states", where), where + ".states");
    auto q = detail::rows(detail::require(v, "Q", where), n, where + ".Q");
    try {
        return Generator(std::move(q));
    } catch (const GeneratorError& e) {
        throw FieldError(where + ".Q", e.what());
    }
}

inline json generator_to_json(const Generator& g) { return {{"states", g.states()}, {"Q", g.rows()}}; }

/// Explicit system document {"matrices": [...], "Q": {...}, "r": r}.
inline json system_to_json(const SwitchedSystem& sys) {
    json mats = json::array();
    for (const auto& m : sys.matrices()) mats.push_back(matrix_to_json(m));
    return {{"matrices", std::move(mats)}, {"Q", generator_to_json(sys.generator())}, {"r", sys.rate()}};
}

inline json windows_report(const MultiSystemSpec& spec) {
    json ws = json::array();
    for (std::size_t i = 1; i <= spec.k; ++i)
        ws.push_back({{"a", spec.window_a(i)}, {"b", spec.window_b(i)}, {"r_star", spec.peak_rate(i)}});
    return {{"windows", std::move(ws)}, {"N", spec.N}};
}

inline json window_to_json(const std::optional<InstabilityWindow>& w) {
    if (!w) return {{"window", nullptr}};
    return {{"a", w->a}, {"b", w->b}, {"r_star", w->r_star}, {"peak_exponent", w->peak_exponent}};
}

/// Columns k, state, holding_time; the last row (k = N+1) is the residual sojourn.
inline void write_path_csv(std::ostream& os, const JumpPath& path) {
    os << "k,state,holding_time\n";
    std::size_t k = 0;
    path.for_each_segment([&](std::size_t state, double dt) { os << ++k << ',' << state << ',' << fmt(dt) << '\n'; });
}

/// Columns t, state, log_radius, theta (empty when d ≠ 2).
inline void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRow> rows) {
    os << "t,state,log_radius,theta\n";
    for (const auto& r : rows) os << fmt(r.t) << ',' << r.state << ',' << fmt(r.log_radius) << ',' << fmt(r.theta) << '\n';
}

/// θ_k = (k + ½)·2π/points; footer "# G=…,C=…".
inline void write_density_csv(std::ostream& os, const AngularDensity& dens, std::size_t points) {
    if (points == 0) throw InputError("write_density_csv: points must be positive");
    os << "theta,p0,p1\n";
    for (std::size_t k = 0; k < points; ++k) {
        const double th = (static_cast<double>(k) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(points);
        const auto p = dens(th);
        os << fmt(th) << ',' << fmt(p[0]) << ',' << fmt(p[1]) << '\n';
    }
    os << "# G=" << fmt(dens.G()) << ",C=" << fmt(dens.C()) << '\n';
}

inline void write_gscan_csv(std::ostream& os, std::span<const double> lambdas, std::span<const double> g) {
    os << "lambda,G\n";
    for (std::size_t i = 0; i < lambdas.size(); ++i) os << fmt(lambdas[i]) << ',' << fmt(g[i]) << '\n';
}

/// Splits one CSV line on commas (no quoting; the writers never quote).
inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out(1);
    for (char ch : line) {
        if (ch == ',')
            out.emplace_back();
        else if (ch != '\r')
            out.back() += ch;
    }
    return out;
}

}  // namespace switchstab::io
