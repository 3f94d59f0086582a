#pragma once

// JSON wire formats: stencils as {"dim","order","taps":[{"offset",[..],"re","im"}]},
// polynomials as {"dim","degree","terms":[{"exp":[..],"re","im"}]} with terms
// in graded-lex order, graded series as layer lists.  Rationals ride as
// "p/q" strings so round-trips stay exact.

#include "latkern/graded.hpp"
#include "latkern/polynomial.hpp"
#include "latkern/stencil.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace latkern {

using nlohmann::json;

inline json poly_to_json(const PolyQ& p) {
    json terms = json::array();
    for (const auto& [a, c] : p.terms()) {
        json t;
        t["exp"] = a.e;
        t["re"] = rational_str(c.re);
        t["im"] = rational_str(c.im);
        terms.push_back(t);
    }
    return json{{"dim", p.dim()}, {"degree", p.empty() ? 0 : p.degree_max()}, {"terms", terms}};
}

inline PolyQ poly_from_json(const json& j) {
    PolyQ p(j.at("dim").get<int>());
    for (const auto& t : j.at("terms")) {
        MultiIndex a(t.at("exp").get<std::vector<int>>());
        RatC c(parse_rational(t.at("re").get<std::string>()), parse_rational(t.at("im").get<std::string>()));
        p.add_term(std::move(a), std::move(c));
    }
    return p;
}

inline json series_to_json(const SeriesQ& s) {
    json layers = json::array();
    for (const auto& [k, p] : s.layers) layers.push_back(json{{"grade", k}, {"poly", poly_to_json(p)}});
    return json{{"dim", s.dim}, {"offset", s.offset}, {"layers", layers}};
}

inline json stencil_to_json(const Stencil& st) {
    json taps = json::array();
    for (const auto& [s, c] : st.taps()) {
        json t;
        t["offset"] = s;
        t["re"] = rational_str(c.re);
        t["im"] = rational_str(c.im);
        taps.push_back(t);
    }
    return json{{"dim", st.dim()}, {"order", st.order()}, {"taps", taps}, {"name", st.name()}};
}

inline Stencil stencil_from_json(const json& j) {
    std::map<Offset, RatC> taps;
    for (const auto& t : j.at("taps")) {
        Offset off = t.at("offset").get<std::vector<int>>();
        taps[off] = RatC(parse_rational(t.at("re").get<std::string>()),
                         parse_rational(t.value("im", std::string("0"))));
    }
    return Stencil(j.at("dim").get<int>(), j.at("order").get<int>(), std::move(taps),
                   j.value("name", std::string("stencil")));
}

// Builder names ("laplacian1d:N", "simple-walk:d", "triangular") or a path
// to a stencil JSON file.
inline Stencil make_stencil(const std::string& spec) {
    if (spec.rfind("laplacian1d:", 0) == 0) return laplacian_1d(std::stoi(spec.substr(12)));
    if (spec.rfind("simple-walk:", 0) == 0) return simple_walk(std::stoi(spec.substr(12)));
    if (spec == "triangular") return triangular();
    std::ifstream in(spec);
    if (!in) throw StructuralError("make_stencil: unknown builder or unreadable file '" + spec + "'");
    json j;
    in >> j;
    return stencil_from_json(j);
}

}  // namespace latkern
