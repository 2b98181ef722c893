#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "operators.hpp"

namespace convgreen {

// Three-point transport scheme with averaged time level:
//   u^{n+1}_j = (1+lambda)/2 u^n_{j-1} + (1-lambda)/2 u^n_{j+1},
// stable and dissipative for 0 < lambda < 1.
inline SchemePair lax_friedrichs(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw ParameterOutOfRange("lax_friedrichs: lambda must lie in (0, 1)");
    ConvolutionOperator q0{1, 1, {cplx((1.0 + lambda) / 2.0, 0.0), cplx(0.0, 0.0),
                                  cplx((1.0 - lambda) / 2.0, 0.0)}};
    ConvolutionOperator q1 = ConvolutionOperator::identity();
    std::ostringstream name;
    name << "lf:" << lambda;
    return SchemePair(q0, q1, name.str());
}

// Implicit centered transport scheme:
//   u^{n+1}_j + lambda/2 (u^{n+1}_{j+1} - u^{n+1}_{j-1}) = u^n_j,
// unconditionally stable for lambda > 0.
inline SchemePair implicit_centered(double lambda) {
    if (!(lambda > 0.0))
        throw ParameterOutOfRange("implicit_centered: lambda must be positive");
    ConvolutionOperator q1{1, 1, {cplx(-lambda / 2.0, 0.0), cplx(1.0, 0.0),
                                  cplx(lambda / 2.0, 0.0)}};
    ConvolutionOperator q0 = ConvolutionOperator::identity();
    std::ostringstream name;
    name << "imp:" << lambda;
    return SchemePair(q0, q1, name.str());
}

// Three-point transport scheme with a second-order corrector:
//   u^{n+1}_j = u^n_j - lambda/2 (u^n_{j+1} - u^n_{j-1})
//             + lambda^2/2 (u^n_{j+1} - 2 u^n_j + u^n_{j-1}),
// fourth-order dissipative (mu = 2) for 0 < lambda < 1.
inline SchemePair lax_wendroff(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw ParameterOutOfRange("lax_wendroff: lambda must lie in (0, 1)");
    ConvolutionOperator q0{1, 1, {cplx(lambda * (1.0 + lambda) / 2.0, 0.0),
                                  cplx(1.0 - lambda * lambda, 0.0),
                                  cplx(-lambda * (1.0 - lambda) / 2.0, 0.0)}};
    ConvolutionOperator q1 = ConvolutionOperator::identity();
    std::ostringstream name;
    name << "lw:" << lambda;
    return SchemePair(q0, q1, name.str());
}

namespace detail_schemes {

inline cplx parse_entry(const nlohmann::json& v, const char* which) {
    if (v.is_number()) return cplx(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
    throw ParameterOutOfRange(std::string("scheme json: entries of ") + which +
                              " must be numbers or [re, im] pairs");
}

inline std::vector<cplx> parse_coeffs(const nlohmann::json& arr, const char* which, int r, int p) {
    if (!arr.is_array())
        throw ParameterOutOfRange(std::string("scheme json: ") + which + " must be an array");
    if (static_cast<int>(arr.size()) != r + p + 1)
        throw ParameterOutOfRange(std::string("scheme json: ") + which + " must have r + p + 1 entries");
    std::vector<cplx> out;
    out.reserve(arr.size());
    for (const auto& v : arr) out.push_back(parse_entry(v, which));
    return out;
}

} // namespace detail_schemes

// Parse a pair from its JSON description:
//   {"name": ..., "r": ..., "p": ..., "a0": [...], "a1": [...]}
// with coefficient entries given lowest index (-r) first, either as bare
// numbers or [re, im] pairs.
inline SchemePair scheme_from_json(const nlohmann::json& doc) {
    for (const char* key : {"name", "r", "p", "a0", "a1"})
        if (!doc.contains(key))
            throw ParameterOutOfRange(std::string("scheme json: missing field '") + key + "'");
    if (!doc["name"].is_string())
        throw ParameterOutOfRange("scheme json: 'name' must be a string");
    if (!doc["r"].is_number_integer() || !doc["p"].is_number_integer())
        throw ParameterOutOfRange("scheme json: 'r' and 'p' must be integers");
    const int r = doc["r"].get<int>();
    const int p = doc["p"].get<int>();
    if (r < 0 || p < 0 || r + p == 0)
        throw ParameterOutOfRange("scheme json: need r >= 0, p >= 0, r + p >= 1");
    ConvolutionOperator q0{r, p, detail_schemes::parse_coeffs(doc["a0"], "a0", r, p)};
    ConvolutionOperator q1{r, p, detail_schemes::parse_coeffs(doc["a1"], "a1", r, p)};
    return SchemePair(q0, q1, doc["name"].get<std::string>());
}

inline nlohmann::json scheme_to_json(const SchemePair& pair) {
    nlohmann::json doc;
    doc["name"] = pair.name;
    doc["r"] = pair.r();
    doc["p"] = pair.p();
    auto dump = [](const ConvolutionOperator& op) {
        nlohmann::json arr = nlohmann::json::array();
        for (const cplx& c : op.coeffs) arr.push_back({c.real(), c.imag()});
        return arr;
    };
    doc["a0"] = dump(pair.q0);
    doc["a1"] = dump(pair.q1);
    return doc;
}

inline SchemePair load_scheme(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterOutOfRange("load_scheme: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterOutOfRange("load_scheme: invalid json in '" + path + "': " + e.what());
    }
    return scheme_from_json(doc);
}

inline void save_scheme(const SchemePair& pair, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParameterOutOfRange("save_scheme: cannot open '" + path + "'");
    out << scheme_to_json(pair).dump(2) << '\n';
}

// Resolve a command-line scheme designator: "lf:<lambda>", "imp:<lambda>",
// "lw:<lambda>", or a path to a JSON description.
inline SchemePair parse_scheme_spec(const std::string& spec) {
    auto tail_number = [&](std::size_t at) {
        const std::string body = spec.substr(at);
        try {
            std::size_t used = 0;
            const double v = std::stod(body, &used);
            if (used != body.size())
                throw ParameterOutOfRange("parse_scheme_spec: trailing junk in '" + spec + "'");
            return v;
        } catch (const std::invalid_argument&) {
            throw ParameterOutOfRange("parse_scheme_spec: bad number in '" + spec + "'");
        } catch (const std::out_of_range&) {
            throw ParameterOutOfRange("parse_scheme_spec: number out of range in '" + spec + "'");
        }
    };
    if (spec.rfind("lf:", 0) == 0) return lax_friedrichs(tail_number(3));
    if (spec.rfind("imp:", 0) == 0) return implicit_centered(tail_number(4));
    if (spec.rfind("lw:", 0) == 0) return lax_wendroff(tail_number(3));
    return load_scheme(spec);
}

} // namespace convgreen
