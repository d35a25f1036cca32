#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace collusim {

// Minimal ordered JSON value for program output. Keys keep insertion
// order and doubles print with 12 significant digits, so identical runs
// serialize byte-identically.
class JsonValue {
public:
    enum class Type { Number, Integer, UInteger, String, Bool, Array, Object };

    JsonValue() : type_(Type::Object) {}
    static JsonValue number(double v) { return JsonValue(Type::Number, v, 0, 0, {}, false); }
    static JsonValue integer(std::int64_t v) { return JsonValue(Type::Integer, 0, v, 0, {}, false); }
    static JsonValue uinteger(std::uint64_t v) { return JsonValue(Type::UInteger, 0, 0, v, {}, false); }
    static JsonValue string(std::string v) { return JsonValue(Type::String, 0, 0, 0, std::move(v), false); }
    static JsonValue boolean(bool v) { return JsonValue(Type::Bool, 0, 0, 0, {}, v); }
    static JsonValue array() {
        JsonValue j;
        j.type_ = Type::Array;
        return j;
    }
    static JsonValue object() { return JsonValue(); }

    JsonValue& set(const std::string& key, JsonValue v) {
        members_.emplace_back(key, std::move(v));
        return *this;
    }
    JsonValue& set(const std::string& key, double v) { return set(key, number(v)); }
    JsonValue& set(const std::string& key, int v) { return set(key, integer(v)); }
    JsonValue& set(const std::string& key, std::int64_t v) { return set(key, integer(v)); }
    JsonValue& set(const std::string& key, std::uint64_t v) { return set(key, uinteger(v)); }
    JsonValue& set(const std::string& key, const std::string& v) { return set(key, string(v)); }
    JsonValue& set(const std::string& key, const char* v) { return set(key, string(v)); }
    JsonValue& set(const std::string& key, bool v) { return set(key, boolean(v)); }

    JsonValue& push(JsonValue v) {
        members_.emplace_back(std::string(), std::move(v));
        return *this;
    }
    JsonValue& push(double v) { return push(number(v)); }
    JsonValue& push(int v) { return push(integer(v)); }

    static std::string format_double(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return buf;
    }

    std::string dump() const {
        std::string out;
        write(out);
        return out;
    }

private:
    JsonValue(Type t, double n, std::int64_t i, std::uint64_t u, std::string s, bool b)
        : type_(t), num_(n), int_(i), uint_(u), str_(std::move(s)), bool_(b) {}

    static void escape(const std::string& s, std::string& out) {
        out += '"';
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        out += '"';
    }

    void write(std::string& out) const {
        switch (type_) {
            case Type::Number: out += format_double(num_); break;
            case Type::Integer: out += std::to_string(int_); break;
            case Type::UInteger: out += std::to_string(uint_); break;
            case Type::String: escape(str_, out); break;
            case Type::Bool: out += bool_ ? "true" : "false"; break;
            case Type::Array: {
                out += '[';
                for (std::size_t i = 0; i < members_.size(); ++i) {
                    if (i) out += ',';
                    members_[i].second.write(out);
                }
                out += ']';
                break;
            }
            case Type::Object: {
                out += '{';
                for (std::size_t i = 0; i < members_.size(); ++i) {
                    if (i) out += ',';
                    escape(members_[i].first, out);
                    out += ':';
                    members_[i].second.write(out);
                }
                out += '}';
                break;
            }
        }
    }

    Type type_;
    double num_ = 0.0;
    std::int64_t int_ = 0;
    std::uint64_t uint_ = 0;
    std::string str_;
    bool bool_ = false;
    std::vector<std::pair<std::string, JsonValue>> members_;
};

}  // namespace collusim
