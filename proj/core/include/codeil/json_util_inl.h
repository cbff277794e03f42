#ifndef CODEIL_JSON_UTIL_INL_H_
#define CODEIL_JSON_UTIL_INL_H_

#include "codeil/error.h"

namespace codeil {

template <typename T>
void ReadOptional(const Json& object, const char* key, T& out,
                  const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(where + "." + key + ": wrong type (" +
                          it->dump() + ")");
  }
}

}  // namespace codeil

#endif  // CODEIL_JSON_UTIL_INL_H_
