#pragma once

// JSON round-trip for sequence definitions: {"kind": ..., "params": {...}}.
// Consumers add the vendored single-header nlohmann/json to their include
// path.

#include <json.hpp>

#include <string>
#include <vector>

#include "biortho/catalog.hpp"
#include "biortho/sequences.hpp"

namespace biortho {

using json = nlohmann::json;

struct SequenceSpec {
    std::string kind;
    json params;

    json to_json() const { return json{{"kind", kind}, {"params", params}}; }
};

namespace detail {

inline void require_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigInvalid("unknown field '" + it.key() + "' in " + where);
    }
}

inline Rational rational_from(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigInvalid("missing field '" + key + "'");
    const auto& v = j.at(key);
    if (v.is_number_integer()) return Rational(static_cast<long>(v.get<std::int64_t>()));
    if (v.is_number_float()) return Rational(v.get<double>()); // binary doubles convert exactly
    if (v.is_string()) {
        // "p/q" or a decimal string
        std::string s = v.get<std::string>();
        auto slash = s.find('/');
        if (slash != std::string::npos)
            return Rational(BigInt(s.substr(0, slash))) / Rational(BigInt(s.substr(slash + 1)));
        return Rational(BigInt(s));
    }
    throw ConfigInvalid("field '" + key + "' must be a number");
}

} // namespace detail

inline SequenceSpec parse_sequence_spec(const json& j) {
    if (!j.is_object()) throw ConfigInvalid("sequence spec must be an object");
    detail::require_keys(j, {"kind", "params"}, "sequence spec");
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigInvalid("sequence spec needs a 'kind' string");
    SequenceSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    spec.params = j.contains("params") ? j.at("params") : json::object();

    if (spec.kind == "quadratic") {
        detail::require_keys(spec.params, {"inv_p", "omega"}, "quadratic params");
    } else if (spec.kind == "grouped") {
        detail::require_keys(spec.params, {"m"}, "grouped params");
    } else if (spec.kind == "dirichlet_pair") {
        detail::require_keys(spec.params, {"d"}, "dirichlet_pair params");
    } else if (spec.kind == "perturbed") {
        detail::require_keys(spec.params, {"gamma"}, "perturbed params");
    } else if (spec.kind == "phase_field") {
        detail::require_keys(spec.params, {"xi", "rho", "tau", "n"}, "phase_field params");
    } else if (spec.kind == "explicit") {
        detail::require_keys(spec.params, {"terms"}, "explicit params");
        if (!spec.params.contains("terms") || !spec.params.at("terms").is_array() ||
            spec.params.at("terms").empty())
            throw ConfigInvalid("explicit sequence needs a nonempty 'terms' array");
    } else {
        throw ConfigInvalid("unknown sequence kind '" + spec.kind + "'");
    }
    return spec;
}

inline EigenSequence make_sequence(const SequenceSpec& spec) {
    if (spec.kind == "quadratic") {
        Rational omega = spec.params.contains("omega") ? detail::rational_from(spec.params, "omega") : Rational(0);
        return gen_quadratic(detail::rational_from(spec.params, "inv_p"), omega);
    }
    if (spec.kind == "grouped") {
        if (!spec.params.contains("m")) throw ConfigInvalid("grouped sequence needs 'm'");
        return gen_grouped(spec.params.at("m").get<std::int64_t>());
    }
    if (spec.kind == "dirichlet_pair") return gen_dirichlet_pair(detail::rational_from(spec.params, "d"));
    if (spec.kind == "perturbed") return gen_perturbed(detail::rational_from(spec.params, "gamma"));
    if (spec.kind == "phase_field") {
        std::int64_t n = spec.params.contains("n") ? spec.params.at("n").get<std::int64_t>() : 600;
        auto res = gen_phase_field(detail::rational_from(spec.params, "xi"),
                                   detail::rational_from(spec.params, "rho"),
                                   detail::rational_from(spec.params, "tau"), n);
        return res.sequence;
    }
    if (spec.kind == "explicit") {
        std::vector<Complex> terms;
        for (const auto& t : spec.params.at("terms")) {
            if (t.is_array() && t.size() == 2)
                terms.emplace_back(Real(t.at(0).get<double>()), Real(t.at(1).get<double>()));
            else if (t.is_number())
                terms.emplace_back(Real(t.get<double>()));
            else
                throw ConfigInvalid("explicit terms must be numbers or [re, im] pairs");
        }
        return EigenSequence::explicit_terms("explicit", std::move(terms));
    }
    throw ConfigInvalid("unknown sequence kind '" + spec.kind + "'");
}

} // namespace biortho
