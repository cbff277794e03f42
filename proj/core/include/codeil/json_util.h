#ifndef CODEIL_JSON_UTIL_H_
#define CODEIL_JSON_UTIL_H_

#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

namespace codeil {

using Json = nlohmann::ordered_json;

// Throws InvalidArgument unless `value` is an object whose keys all appear in
// `allowed`. `where` names the section in the message.
void RequireKeys(const Json& value, std::initializer_list<const char*> allowed,
                 const std::string& where);

// Reads `key` into `out` when present; type errors name the key.
template <typename T>
void ReadOptional(const Json& object, const char* key, T& out,
                  const std::string& where);

// Parses a JSON document, mapping syntax errors to InvalidArgument.
Json ParseJson(const std::string& text, const std::string& what);

}  // namespace codeil

#include "codeil/json_util_inl.h"

#endif  // CODEIL_JSON_UTIL_H_
