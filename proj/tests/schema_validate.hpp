#pragma once

// Minimal JSON Schema checker (draft-07 subset) used to hold the tool's
// emitted files to the schemas shipped in schemas/.  Supported keywords:
// type, enum, required, properties, additionalProperties, items, minItems,
// minimum.  Anything the schemas do not use is out of scope.

#include <cstddef>
#include <string>

#include <json.hpp>

namespace schema {

using json = nlohmann::ordered_json;

inline bool type_matches(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "null") return v.is_null();
    return false;
}

// Empty string when `value` conforms to `sch`; otherwise a path-prefixed
// reason for the first violation found.
inline std::string validate(const json& value, const json& sch,
                            const std::string& path = "$") {
    if (sch.contains("type")) {
        std::string t = sch.at("type").get<std::string>();
        if (!type_matches(value, t)) return path + ": expected type " + t;
    }
    if (sch.contains("enum")) {
        bool found = false;
        for (const auto& e : sch.at("enum"))
            if (e == value) found = true;
        if (!found) return path + ": value not in enum";
    }
    if (sch.contains("minimum") && value.is_number()) {
        if (value.get<double>() < sch.at("minimum").get<double>())
            return path + ": below minimum";
    }
    if (value.is_object()) {
        if (sch.contains("required")) {
            for (const auto& key : sch.at("required")) {
                if (!value.contains(key.get<std::string>()))
                    return path + ": missing required property '" +
                           key.get<std::string>() + "'";
            }
        }
        const json* props =
            sch.contains("properties") ? &sch.at("properties") : nullptr;
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (props && props->contains(it.key())) {
                std::string err = validate(it.value(), props->at(it.key()),
                                           path + "." + it.key());
                if (!err.empty()) return err;
            } else if (sch.contains("additionalProperties")) {
                const json& ap = sch.at("additionalProperties");
                if (ap.is_boolean() && !ap.get<bool>())
                    return path + ": unexpected property '" + it.key() + "'";
                if (ap.is_object()) {
                    std::string err =
                        validate(it.value(), ap, path + "." + it.key());
                    if (!err.empty()) return err;
                }
            }
        }
    }
    if (value.is_array()) {
        if (sch.contains("minItems") &&
            value.size() < sch.at("minItems").get<std::size_t>())
            return path + ": fewer than minItems elements";
        if (sch.contains("items")) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                std::string err =
                    validate(value[i], sch.at("items"),
                             path + "[" + std::to_string(i) + "]");
                if (!err.empty()) return err;
            }
        }
    }
    return "";
}

}  // namespace schema
