#include "codeil/json_util.h"

#include <algorithm>

#include "codeil/error.h"

namespace codeil {

void RequireKeys(const Json& value, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  if (!value.is_object()) throw InvalidArgument(where + " must be an object");
  for (const auto& [key, unused] : value.items()) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* a) { return key == a; });
    if (!known) {
      std::string list;
      for (const char* a : allowed) list += list.empty() ? a : std::string(", ") + a;
      throw InvalidArgument("unknown key '" + key + "' in " + where +
                            " (valid: " + list + ")");
    }
  }
}

Json ParseJson(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(what + ": " + e.what());
  }
}

}  // namespace codeil
