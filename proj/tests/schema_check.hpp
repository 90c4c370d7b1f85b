#pragma once

// Minimal JSON-Schema checker covering the subset used by
// docs/report-schema.json: type (string or list), properties/required/
// additionalProperties, items, enum, and local $ref into $defs.

#include <string>
#include <vector>

#include <json.hpp>

namespace schema_check {

using nlohmann::json;

inline bool type_matches(const std::string& type, const json& value) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
    if (type == "number") return value.is_number();
    return false;
}

inline void validate(const json& root, const json& schema, const json& value,
                     const std::string& path, std::vector<std::string>& errors) {
    if (schema.contains("$ref")) {
        const std::string ref = schema.at("$ref").get<std::string>();
        const std::string prefix = "#/$defs/";
        if (ref.rfind(prefix, 0) != 0) {
            errors.push_back(path + ": unsupported $ref " + ref);
            return;
        }
        validate(root, root.at("$defs").at(ref.substr(prefix.size())), value, path, errors);
        return;
    }

    if (schema.contains("enum")) {
        for (const auto& candidate : schema.at("enum"))
            if (candidate == value) return;
        errors.push_back(path + ": value not in enum");
        return;
    }

    if (schema.contains("type")) {
        const auto& t = schema.at("type");
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(t.get<std::string>(), value);
        } else {
            for (const auto& alt : t) ok = ok || type_matches(alt.get<std::string>(), value);
        }
        if (!ok) {
            errors.push_back(path + ": type mismatch (got " + std::string(value.type_name()) +
                             ")");
            return;
        }
    }

    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema.at("required"))
                if (!value.contains(key.get<std::string>()))
                    errors.push_back(path + ": missing required key '" +
                                     key.get<std::string>() + "'");
        const json props =
            schema.contains("properties") ? schema.at("properties") : json::object();
        for (const auto& [key, item] : value.items()) {
            if (props.contains(key)) {
                validate(root, props.at(key), item, path + "/" + key, errors);
            } else if (schema.contains("additionalProperties")) {
                const auto& ap = schema.at("additionalProperties");
                if (ap.is_boolean()) {
                    if (!ap.get<bool>())
                        errors.push_back(path + ": unexpected key '" + key + "'");
                } else {
                    validate(root, ap, item, path + "/" + key, errors);
                }
            }
        }
    }

    if (value.is_array() && schema.contains("items")) {
        std::size_t i = 0;
        for (const auto& item : value)
            validate(root, schema.at("items"), item, path + "/" + std::to_string(i++), errors);
    }
}

inline std::vector<std::string> check(const json& schema, const json& value) {
    std::vector<std::string> errors;
    validate(schema, schema, value, "", errors);
    return errors;
}

}  // namespace schema_check
