#ifndef CODEIL_FORMAT_H_
#define CODEIL_FORMAT_H_

#include <string>

namespace codeil {

// Shortest decimal form that parses back to the same double; "inf", "-inf"
// and "nan" for non-finite values.
std::string FormatDouble(double value);

}  // namespace codeil

#endif  // CODEIL_FORMAT_H_
