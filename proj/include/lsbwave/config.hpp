#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/general_transform.hpp"
#include "lsbwave/potential.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lsbwave {

/// Optional transform block for the general-check pipeline.
struct TransformConfig {
    std::string type;  // translation | inversion | scaling
    double parameter = 0.0;
    Interval domain;

    GeneralTransform build() const {
        if (type == "translation") return GeneralTransform::translation(parameter, domain);
        if (type == "inversion") return GeneralTransform::inversion(parameter, domain);
        return GeneralTransform::scaling(parameter, domain);
    }
};

struct ParsedConfig {
    PotentialSpec potential;
    std::optional<TransformConfig> transform;
};

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void fail(int domain, const std::string& field, const std::string& what) {
    throw InputError("config", domain, field, what);
}

inline double number(const json& j, const char* key, int domain, std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        fail(domain, key, std::string("missing field '") + key + "'");
    }
    const auto& v = j.at(key);
    if (!v.is_number()) fail(domain, key, std::string("field '") + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(domain, key, std::string("field '") + key + "' must be finite");
    return x;
}

inline std::vector<double> numbers(const json& j, const char* key, int domain) {
    if (!j.contains(key) || !j.at(key).is_array()) fail(domain, key, std::string("field '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) fail(domain, key, std::string("field '") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline Interval interval(const json& j, const char* key, int domain) {
    const auto v = numbers(j, key, domain);
    if (v.size() != 2) fail(domain, key, std::string("field '") + key + "' must be [lo, hi]");
    if (!(v[1] > v[0])) fail(domain, key, std::string("field '") + key + "' needs lo < hi");
    return {v[0], v[1]};
}

inline CellProfile parse_profile(const json& j, int d) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        fail(d, "profile", "profile needs a string 'type'");
    const std::string type = j.at("type").get<std::string>();
    try {
        if (type == "constant") return CellProfile::constant(number(j, "value", d));
        if (type == "cosine")
            return CellProfile::cosine(number(j, "amplitude", d), number(j, "period", d), number(j, "phase", d, 0.0),
                                       number(j, "offset", d, 0.0));
        if (type == "gaussian")
            return CellProfile::gaussian(number(j, "height", d), number(j, "center", d), number(j, "width", d));
        if (type == "linear") return CellProfile::linear(number(j, "intercept", d, 0.0), number(j, "slope", d));
        if (type == "log_cosine")
            return CellProfile::log_cosine(number(j, "amplitude", d), number(j, "base", d, 2.0),
                                           number(j, "phase", d, 0.0), number(j, "offset", d, 0.0));
        if (type == "samples") return CellProfile::samples(numbers(j, "x", d), numbers(j, "v", d));
    } catch (const InputError& e) {
        if (e.module() == "config") throw;
        fail(d, "profile", e.what());
    }
    fail(d, "profile", "unknown profile type '" + type + "'");
}

inline DomainSpec parse_domain(const json& j, int d) {
    if (!j.is_object()) fail(d, "domain", "domain entries must be objects");
    if (!j.contains("kind") || !j.at("kind").is_string()) fail(d, "kind", "domain needs a string 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    const Interval bounds = interval(j, "bounds", d);

    std::optional<CellProfile> full;
    if (j.contains("full_samples")) {
        const auto& fs = j.at("full_samples");
        try {
            full = CellProfile::samples(numbers(fs, "x", d), numbers(fs, "v", d));
        } catch (const InputError& e) {
            if (e.module() == "config") throw;
            fail(d, "full_samples", e.what());
        }
    }
    CellProfile profile = full ? *full : CellProfile{};
    if (j.contains("profile")) profile = parse_profile(j.at("profile"), d);
    else if (!full) fail(d, "profile", "domain needs a 'profile' or 'full_samples'");

    int cells = 1;
    if (j.contains("cells")) {
        const auto& c = j.at("cells");
        if (!c.is_number_integer()) fail(d, "cells", "'cells' must be an integer");
        cells = c.get<int>();
    }

    DomainSpec out;
    try {
        if (kind == "inversion") {
            if (j.contains("cells") && cells != 2) fail(d, "cells", "inversion domain has 2 cells");
            out = DomainSpec::inversion(bounds, profile);
        } else if (kind == "translation") {
            if (!j.contains("cells")) fail(d, "cells", "translation domain needs 'cells'");
            out = DomainSpec::translation(bounds, cells, profile);
        } else if (kind == "none") {
            if (cells != 1) fail(d, "cells", "domain without symmetry has a single cell");
            out = DomainSpec::plain(bounds, profile);
        } else {
            fail(d, "kind", "unknown domain kind '" + kind + "'");
        }
    } catch (const InputError& e) {
        if (e.module() == "config") throw;
        fail(d, "domain", e.what());
    }
    out.index = d;
    out.sampled_profile = full;
    return out;
}

inline TransformConfig parse_transform(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        fail(0, "general_transform", "transform needs a string 'type'");
    TransformConfig t;
    t.type = j.at("type").get<std::string>();
    t.domain = interval(j, "domain", 0);
    if (t.type == "translation") t.parameter = number(j, "length", 0);
    else if (t.type == "inversion") t.parameter = number(j, "alpha", 0);
    else if (t.type == "scaling") t.parameter = number(j, "factor", 0);
    else fail(0, "general_transform", "unknown transform type '" + t.type + "'");
    return t;
}

}  // namespace config_detail

/// Parses the JSON configuration. Domains carrying "full_samples" go through
/// the import path, which rejects a declared symmetry that the samples break
/// unless enforce_symmetry is false (the validate command reports instead).
inline ParsedConfig parse_config(const nlohmann::json& j, bool enforce_symmetry = true) {
    using namespace config_detail;
    if (!j.is_object()) fail(0, "config", "top level must be an object");
    if (!j.contains("domains") || !j.at("domains").is_array() || j.at("domains").empty())
        fail(0, "domains", "'domains' must be a non-empty array");
    std::vector<DomainSpec> domains;
    bool imported = false;
    int d = 0;
    for (const auto& dj : j.at("domains")) {
        domains.push_back(parse_domain(dj, ++d));
        imported = imported || domains.back().sampled_profile.has_value();
    }
    double left = 0.0, right = 0.0;
    if (j.contains("leads")) {
        const auto& l = j.at("leads");
        if (!l.is_object()) fail(0, "leads", "'leads' must be an object");
        left = number(l, "left", 0, 0.0);
        right = number(l, "right", 0, 0.0);
    }
    std::optional<TransformConfig> transform;
    if (j.contains("general_transform")) transform = parse_transform(j.at("general_transform"));
    if (imported && enforce_symmetry) return {import_potential(std::move(domains), left, right), transform};
    return {PotentialSpec(std::move(domains), left, right), transform};
}

inline ParsedConfig parse_config_text(const std::string& text, bool enforce_symmetry = true) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("config", 0, "json", e.what());
    }
    return parse_config(j, enforce_symmetry);
}

inline ParsedConfig load_config(const std::string& path, bool enforce_symmetry = true) {
    std::ifstream in(path);
    if (!in) throw InputError("config", 0, "path", "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), enforce_symmetry);
}

}  // namespace lsbwave
