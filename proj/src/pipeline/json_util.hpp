#pragma once

#include <initializer_list>
#include <string>
#include <type_traits>

#include "flexload/errors.hpp"
#include "json.hpp"

namespace flexload::pipeline::detail {

using nlohmann::json;

inline void check_object(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw SchemaError(where + ": unknown key '" + it.key() + "'");
  }
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(where + ": missing key '" + key + "'");
  return j.at(key);
}

template <class T>
T as(const json& j, const std::string& where) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!j.is_number()) throw SchemaError(where + ": expected a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!j.is_number_integer()) throw SchemaError(where + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)
          throw SchemaError(where + ": expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw SchemaError(where + ": expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw SchemaError(where + ": expected a string");
    }
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

template <class T>
void opt(const json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = as<T>(j.at(key), where + "." + key);
}

json parse_json(const std::string& text, const std::string& where);

// Rounded to 9 significant digits so serialized files are stable.
double round9(double x);

}  // namespace flexload::pipeline::detail
