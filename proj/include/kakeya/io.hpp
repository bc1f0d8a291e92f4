#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kakeya/cantor.hpp"
#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"

namespace kakeya {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return json::parse(in);
}

inline Rational rational_from_json(const json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return make_rational(j.get<long long>());
  return parse_rational(j.dump());
}

// {"default": [a, b], "by_level": [[a, b], ...], "by_prefix": {"0,2": [a, b]}}
inline Selector selector_from_json(const json& j, int M) {
  std::pair<int, int> def{0, M - 1};
  if (j.contains("default")) def = {j["default"][0].get<int>(), j["default"][1].get<int>()};
  std::vector<std::pair<int, int>> by_level;
  if (j.contains("by_level"))
    for (const auto& e : j["by_level"]) by_level.emplace_back(e[0].get<int>(), e[1].get<int>());
  std::map<std::string, std::pair<int, int>> by_prefix;
  if (j.contains("by_prefix"))
    for (const auto& [k, e] : j["by_prefix"].items()) by_prefix[k] = {e[0].get<int>(), e[1].get<int>()};
  return {"custom", [=](const std::vector<int>& prefix) {
            std::string key;
            for (std::size_t i = 0; i < prefix.size(); ++i) key += (i ? "," : "") + std::to_string(prefix[i]);
            if (auto it = by_prefix.find(key); it != by_prefix.end()) return it->second;
            if (prefix.size() < by_level.size()) return by_level[prefix.size()];
            return def;
          }};
}

inline Selector make_selector(const std::string& name, int M) {
  if (name == "middle") return middle_selector(M);
  if (name == "varying") return varying_selector(M);
  return selector_from_json(read_json_file(name), M);
}

// {"coefficients": [[b0, b1, ...], ...]} with one row per coordinate after the leading 1.
inline DirectionCurve curve_from_json(const json& j) {
  std::vector<std::vector<Rational>> rows;
  for (const auto& row : j.at("coefficients")) {
    std::vector<Rational> r;
    for (const auto& x : row) r.push_back(rational_from_json(x));
    rows.push_back(std::move(r));
  }
  return DirectionCurve(j.value("name", std::string("poly")), std::move(rows));
}

inline DirectionCurve make_curve(const std::string& name, int d) {
  if (name == "affine") return DirectionCurve::affine(d);
  if (name == "moment") return DirectionCurve::moment(d);
  auto c = curve_from_json(read_json_file(name));
  if (c.d() != d) throw ConfigError("curve file dimension does not match d");
  return c;
}

inline json rational_json(const Rational& q) { return json{{"exact", to_string(q)}, {"float", to_double(q)}}; }

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace kakeya
