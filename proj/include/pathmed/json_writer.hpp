#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

// Deterministic JSON emitter for reports: object keys are sorted (std::map),
// floating-point numbers carry 17 significant digits so a parse/re-render
// cycle is byte-identical, and non-finite values degrade to null. Parsing is
// out of scope here; the vendored nlohmann/json handles input documents.

namespace pathmed {

class JsonValue {
public:
    using array_t = std::vector<JsonValue>;
    using object_t = std::map<std::string, JsonValue>;

    JsonValue() : value_(nullptr) {}
    JsonValue(std::nullptr_t) : value_(nullptr) {}
    JsonValue(bool b) : value_(b) {}
    JsonValue(double d) : value_(d) {}
    JsonValue(int i) : value_(static_cast<std::int64_t>(i)) {}
    JsonValue(long i) : value_(static_cast<std::int64_t>(i)) {}
    JsonValue(long long i) : value_(static_cast<std::int64_t>(i)) {}
    JsonValue(unsigned long long u) : value_(static_cast<std::uint64_t>(u)) {}
    JsonValue(unsigned long u) : value_(static_cast<std::uint64_t>(u)) {}
    JsonValue(const char* s) : value_(std::string(s)) {}
    JsonValue(std::string s) : value_(std::move(s)) {}
    JsonValue(array_t a) : value_(std::move(a)) {}
    JsonValue(object_t o) : value_(std::move(o)) {}

    static JsonValue object() { return JsonValue(object_t{}); }
    static JsonValue array() { return JsonValue(array_t{}); }

    JsonValue& operator[](const std::string& key) {
        return std::get<object_t>(value_)[key];
    }
    void push_back(JsonValue v) { std::get<array_t>(value_).push_back(std::move(v)); }

    bool is_object() const { return std::holds_alternative<object_t>(value_); }

    std::string dump() const {
        std::string out;
        write(out);
        return out;
    }

private:
    std::variant<std::nullptr_t, bool, std::int64_t, std::uint64_t, double, std::string,
                 array_t, object_t>
        value_;

    static void write_escaped(std::string& out, const std::string& s) {
        out += '"';
        for (const char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\r': out += "\\r"; break;
                case '\t': out += "\\t"; break;
                case '\b': out += "\\b"; break;
                case '\f': out += "\\f"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        out += '"';
    }

    void write(std::string& out) const {
        std::visit(
            [&out](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::nullptr_t>) {
                    out += "null";
                } else if constexpr (std::is_same_v<T, bool>) {
                    out += v ? "true" : "false";
                } else if constexpr (std::is_same_v<T, std::int64_t>) {
                    out += std::to_string(v);
                } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                    out += std::to_string(v);
                } else if constexpr (std::is_same_v<T, double>) {
                    if (!std::isfinite(v)) {
                        out += "null";
                    } else {
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "%.17g", v);
                        out += buf;
                    }
                } else if constexpr (std::is_same_v<T, std::string>) {
                    write_escaped(out, v);
                } else if constexpr (std::is_same_v<T, array_t>) {
                    out += '[';
                    bool first = true;
                    for (const auto& item : v) {
                        if (!first) out += ',';
                        first = false;
                        item.write(out);
                    }
                    out += ']';
                } else {  // object_t, keys already sorted by std::map
                    out += '{';
                    bool first = true;
                    for (const auto& [key, item] : v) {
                        if (!first) out += ',';
                        first = false;
                        write_escaped(out, key);
                        out += ':';
                        item.write(out);
                    }
                    out += '}';
                }
            },
            value_);
    }
};

/// Optional numeric -> JSON, empty mapping to null.
template <typename Opt>
inline JsonValue json_or_null(const Opt& opt) {
    if (opt) return JsonValue(*opt);
    return JsonValue(nullptr);
}

}  // namespace pathmed
