#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "switchstab/constructions.hpp"
#include "switchstab/io.hpp"

namespace switchstab {

/**
 * @brief Parsed system description.
 *
 * Accepted documents:
 *   {"matrices": [matrix, ...], "Q": generator, "r": number}
 *   {"family": "planar", "alpha": a, "c": c, "r": number}
 *   {"family": "multi", "k": k, "alpha1": a, "c1": c [, "N": n] [, "r": number]}
 * The multi family's rate defaults to the first window's peak rate r_1.
 */
struct SystemSpecFile {
    enum class Family { General, Planar, Multi };

    Family family;
    SwitchedSystem system;
    std::optional<PlanarParams> planar;
    std::optional<MultiSystemSpec> multi;

    /// Closed-form top exponent at rate r for the planar and multi families.
    std::optional<double> analytic(double r, double tol = 1e-10) const {
        if (planar) return lyapunov_analytic(*planar, r, tol);
        if (multi) return block_lyapunov(*multi, r, tol);
        return std::nullopt;
    }
};

namespace spec_detail {

inline double positive(const io::json& doc, const char* key) {
    const double x = io::detail::number(io::detail::require(doc, key, ""), key);
    if (!(x > 0.0)) throw io::FieldError(key, "must be positive");
    return x;
}

}  // namespace spec_detail

/// Parses a spec document; syntax errors report line and column.
inline SystemSpecFile parse_spec(const std::string& text) {
    using io::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError("spec: JSON syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what());
    }
    if (!doc.is_object()) throw io::FieldError("<root>", "expected a JSON object");

    if (!doc.contains("family")) {
        const json& mats = io::detail::require(doc, "matrices", "");
        if (!mats.is_array() || mats.empty()) throw io::FieldError("matrices", "expected a nonempty array");
        std::vector<SquareMatrix> ms;
        for (std::size_t i = 0; i < mats.size(); ++i)
            ms.push_back(io::parse_matrix(mats[i], "matrices[" + std::to_string(i) + "]"));
        for (std::size_t i = 1; i < ms.size(); ++i)
            if (ms[i].dim() != ms[0].dim())
                throw io::FieldError("matrices[" + std::to_string(i) + "].dim",
                                     "all matrices must share dimension " + std::to_string(ms[0].dim()));
        Generator gen = io::parse_generator(io::detail::require(doc, "Q", ""), "Q");
        if (gen.states() != ms.size())
            throw io::FieldError("Q.states", "generator has " + std::to_string(gen.states()) + " states but " +
                                                 std::to_string(ms.size()) + " matrices were given");
        const double r = spec_detail::positive(doc, "r");
        return {SystemSpecFile::Family::General, SwitchedSystem(std::move(ms), std::move(gen), r), std::nullopt,
                std::nullopt};
    }

    const json& fam = doc["family"];
    if (!fam.is_string()) throw io::FieldError("family", "expected a string");
    const std::string name = fam.get<std::string>();
    if (name == "planar") {
        const PlanarParams p{spec_detail::positive(doc, "alpha"), spec_detail::positive(doc, "c")};
        const double r = spec_detail::positive(doc, "r");
        return {SystemSpecFile::Family::Planar, planar_system(p, r), p, std::nullopt};
    }
    if (name == "multi") {
        const std::size_t k = io::detail::count(io::detail::require(doc, "k", ""), "k");
        if (k < 1) throw io::FieldError("k", "must be at least 1");
        const double alpha1 = spec_detail::positive(doc, "alpha1");
        const double c1 = spec_detail::positive(doc, "c1");
        std::optional<double> N;
        if (doc.contains("N")) N = spec_detail::positive(doc, "N");
        MultiSystemSpec spec = multi_transition(k, alpha1, c1, N);
        const double r = doc.contains("r") ? spec_detail::positive(doc, "r") : spec.r1;
        return {SystemSpecFile::Family::Multi, spec.system(r), std::nullopt, spec};
    }
    throw io::FieldError("family", "unknown family '" + name + "' (expected \"planar\" or \"multi\")");
}

inline SystemSpecFile load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("spec: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

}  // namespace switchstab
