#include "synthaudit/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace synthaudit {

std::string engine_version() { return SYNTHAUDIT_VERSION; }

namespace {

double round_significant(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r; // folds -0
}

} // namespace

nlohmann::json canonicalize(const nlohmann::json& value) {
    switch (value.type()) {
    case nlohmann::json::value_t::object: {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : value.items()) out[k] = canonicalize(v);
        return out;
    }
    case nlohmann::json::value_t::array: {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : value) out.push_back(canonicalize(v));
        return out;
    }
    case nlohmann::json::value_t::number_float: {
        const double v = value.get<double>();
        if (!std::isfinite(v)) return nullptr;
        return round_significant(v);
    }
    default:
        return value;
    }
}

std::string canonical_dump(const nlohmann::json& value) {
    return canonicalize(value).dump(2, ' ', false, nlohmann::json::error_handler_t::strict) + "\n";
}

} // namespace synthaudit
