// alignkit/text.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ALIGNKIT_TEXT_HPP_
#define ALIGNKIT_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace alignkit {

/// Splits on runs of ASCII whitespace; no empty fields.
std::vector<std::string> split_whitespace(std::string_view line);

/// Splits on every occurrence of `sep`; keeps empty fields.
std::vector<std::string> split(std::string_view text, std::string_view sep);

/// %.17g; round-trips every finite double.
std::string format_real17(double x);

/// Shortest decimal that round-trips (std::to_chars).
std::string format_real_shortest(double x);

/// Fixed-point with `decimals` digits.
std::string format_fixed(double x, int decimals);

/// Parses the whole of `text` as a double; throws MalformedInput otherwise.
double parse_real(std::string_view text);
long long parse_integer(std::string_view text);

/// Lower-cases UTF-8 text code point by code point.  Falls back to ASCII
/// folding when no UTF-8 locale is installed.
std::u32string fold_case_utf8(std::string_view text);

std::u32string decode_utf8(std::string_view text);

}  // namespace alignkit

#endif  // ALIGNKIT_TEXT_HPP_
