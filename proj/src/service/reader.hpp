#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmw/service/config.hpp"

namespace bmw::service::detail {

using nlohmann::json;

// Field reader that records problems instead of throwing at the first one.
class Reader {
   public:
    std::vector<std::string> issues;

    void fail(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

    const json* object(const json& parent, const std::string& key, const std::string& path, bool required) {
        if (!parent.contains(key)) {
            if (required) fail(path, "is required");
            return nullptr;
        }
        const json& v = parent.at(key);
        if (!v.is_object()) {
            fail(path, "must be an object");
            return nullptr;
        }
        return &v;
    }

    std::optional<double> number(const json& parent, const std::string& key, const std::string& path,
                                 bool required) {
        if (!parent.contains(key)) {
            if (required) fail(path, "is required");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (!v.is_number()) {
            fail(path, "must be a number");
            return std::nullopt;
        }
        return v.get<double>();
    }

    std::optional<std::uint64_t> unsigned_int(const json& parent, const std::string& key, const std::string& path,
                                              bool required) {
        if (!parent.contains(key)) {
            if (required) fail(path, "is required");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail(path, "must be a non-negative integer");
            return std::nullopt;
        }
        return v.get<std::uint64_t>();
    }

    std::optional<std::string> string(const json& parent, const std::string& key, const std::string& path,
                                      bool required) {
        if (!parent.contains(key)) {
            if (required) fail(path, "is required");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (!v.is_string()) {
            fail(path, "must be a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    std::optional<bool> boolean(const json& parent, const std::string& key, const std::string& path) {
        if (!parent.contains(key)) return std::nullopt;
        const json& v = parent.at(key);
        if (!v.is_boolean()) {
            fail(path, "must be true or false");
            return std::nullopt;
        }
        return v.get<bool>();
    }

    std::optional<std::vector<double>> numbers(const json& parent, const std::string& key, const std::string& path,
                                               bool required) {
        if (!parent.contains(key)) {
            if (required) fail(path, "is required");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (!v.is_array() || v.empty()) {
            fail(path, "must be a nonempty array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) {
                fail(path, "must be a nonempty array of numbers");
                return std::nullopt;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    void probability_vector(const std::vector<double>& v, const std::string& path) {
        for (double q : v)
            if (!(q > 0.0 && q < 1.0)) {
                fail(path, "entries must lie in (0,1)");
                return;
            }
    }

    // Either an explicit list or {"from", "to", "step"}.
    std::optional<std::vector<double>> axis(const json& parent, const std::string& key, const std::string& path) {
        if (!parent.contains(key)) return std::nullopt;
        const json& v = parent.at(key);
        if (v.is_array()) return numbers(parent, key, path, true);
        if (!v.is_object()) {
            fail(path, "must be an array or an object with from/to/step");
            return std::nullopt;
        }
        const auto from = number(v, "from", path + ".from", true);
        const auto to = number(v, "to", path + ".to", true);
        const auto step = number(v, "step", path + ".step", true);
        if (!from || !to || !step) return std::nullopt;
        if (!(*step > 0.0) || *to < *from) {
            fail(path, "needs step > 0 and to >= from");
            return std::nullopt;
        }
        const auto count = static_cast<std::size_t>(std::floor((*to - *from) / *step + 1e-9)) + 1;
        if (count > 100000) {
            fail(path, "has too many points");
            return std::nullopt;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(std::round((*from + static_cast<double>(i) * *step) * 1e10) / 1e10);
        return out;
    }

    std::optional<LambdaGamma> lambda_gamma(const json& parent, const std::string& key, const std::string& path) {
        const json* o = object(parent, key, path, false);
        if (!o) return std::nullopt;
        const auto l = number(*o, "lambda", path + ".lambda", true);
        const auto g = number(*o, "gamma", path + ".gamma", true);
        if (!l || !g) return std::nullopt;
        if (!(*l >= 0.0 && *l <= 1.0)) fail(path + ".lambda", "must lie in [0,1]");
        if (!(*g >= 0.0 && *g <= 1.0)) fail(path + ".gamma", "must lie in [0,1]");
        return LambdaGamma{*l, *g};
    }
};

}  // namespace bmw::service::detail
