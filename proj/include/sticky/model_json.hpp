#pragma once

// JSON encoding of ModelSpec:
//   {"domain": {"kind": "Interval", "a": 0, "b": 1, "sticky": ["left", "right"]},
//    "V": {"form": "Zero"}, "W": {"form": "PowerTau", "tau": 2},
//    "gamma": 0.5, "delta": 0, "truncation_L": 10, "collar_s0": 0.25}

#include "sticky/error.hpp"
#include "sticky/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace sticky {

using Json = nlohmann::json;

namespace detail {

template <class T>
T json_get(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw Error(ErrorCode::ParseError, where + ": missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, where + ": bad \"" + key + "\": " + e.what());
    }
}

template <class T>
T json_get_or(const Json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return json_get<T>(j, key, where);
}

} // namespace detail

inline Potential potential_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, where + " must be an object");
    const auto form = detail::json_get<std::string>(j, "form", where);
    if (form == "Zero") return Potential::zero();
    if (form == "PowerTau") return Potential::power_tau(detail::json_get<double>(j, "tau", where));
    if (form == "Tabulated")
        return Potential::from_table(detail::json_get<std::vector<double>>(j, "x", where),
                                     detail::json_get<std::vector<double>>(j, "values", where));
    throw Error(ErrorCode::ParseError, where + ": unknown potential form \"" + form + "\"");
}

inline Json potential_to_json(const Potential& p) {
    switch (p.form()) {
    case Potential::Form::Zero: return Json{{"form", "Zero"}};
    case Potential::Form::PowerTau: return Json{{"form", "PowerTau"}, {"tau", p.tau()}};
    case Potential::Form::Tabulated:
        if (p.table_x()) return Json{{"form", "Tabulated"}, {"x", *p.table_x()}, {"values", *p.table_values()}};
        return Json{{"form", "Tabulated"}, {"description", p.description()}};
    }
    return Json{};
}

/// Parses the model part of a configuration document. The half-line length may
/// be given either as domain.L or as the top-level truncation_L.
inline ModelSpec model_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "model config must be a JSON object");
    const Json& d = j.contains("domain") ? j.at("domain") : throw Error(ErrorCode::ParseError, "missing \"domain\"");
    if (!d.is_object()) throw Error(ErrorCode::ParseError, "domain must be an object");
    const auto kind = detail::json_get<std::string>(d, "kind", "domain");

    ModelSpec model;
    if (kind == "Interval") {
        model.domain = DomainSpec::interval(detail::json_get_or<double>(d, "a", 0.0, "domain"),
                                            detail::json_get_or<double>(d, "b", 1.0, "domain"));
    } else if (kind == "TruncatedHalfLine") {
        double L = detail::json_get_or<double>(j, "truncation_L", 10.0, "config");
        L = detail::json_get_or<double>(d, "L", L, "domain");
        model.domain = DomainSpec::half_line(L);
    } else if (kind == "Strip") {
        model.domain = DomainSpec::strip(detail::json_get_or<double>(d, "width", 1.0, "domain"),
                                         detail::json_get_or<double>(d, "circumference", 1.0, "domain"));
    } else {
        throw Error(ErrorCode::ParseError, "unknown domain kind \"" + kind + "\"");
    }
    if (d.contains("sticky")) {
        const auto sides = detail::json_get<std::vector<std::string>>(d, "sticky", "domain");
        model.domain.sticky_left = model.domain.sticky_right = false;
        for (const auto& s : sides) {
            if (s == "left")
                model.domain.sticky_left = true;
            else if (s == "right")
                model.domain.sticky_right = true;
            else
                throw Error(ErrorCode::ParseError, "sticky side must be \"left\" or \"right\"");
        }
    }
    model.V = j.contains("V") ? potential_from_json(j.at("V"), "V") : Potential::zero();
    model.W = j.contains("W") ? potential_from_json(j.at("W"), "W") : Potential::zero();
    model.gamma = detail::json_get<double>(j, "gamma", "config");
    model.delta = detail::json_get_or<double>(j, "delta", 0.0, "config");
    model.validate();
    return model;
}

inline Json model_to_json(const ModelSpec& model) {
    Json d;
    const auto& dom = model.domain;
    d["kind"] = dom.kind_name();
    if (auto* iv = std::get_if<Interval>(&dom.kind)) {
        d["a"] = iv->a;
        d["b"] = iv->b;
    } else if (auto* hl = std::get_if<TruncatedHalfLine>(&dom.kind)) {
        d["L"] = hl->L;
    } else {
        const auto& st = std::get<Strip>(dom.kind);
        d["width"] = st.width;
        d["circumference"] = st.circumference;
    }
    Json sides = Json::array();
    if (dom.sticky_left) sides.push_back("left");
    if (dom.sticky_right) sides.push_back("right");
    d["sticky"] = sides;
    return Json{{"domain", d},
                {"V", potential_to_json(model.V)},
                {"W", potential_to_json(model.W)},
                {"gamma", model.gamma},
                {"delta", model.delta}};
}

/// FNV-1a over the canonical JSON text of the model.
inline std::uint64_t model_hash(const ModelSpec& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : model_to_json(model).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace sticky
