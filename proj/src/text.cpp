// src/text.cpp

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

#include "alignkit/text.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cwctype>
#include <locale>

#include "alignkit/error.hpp"

namespace alignkit {

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t k = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
           c == '\v';
  };
  while (k < line.size()) {
    while (k < line.size() && is_space(line[k])) ++k;
    const auto start = k;
    while (k < line.size() && !is_space(line[k])) ++k;
    if (k > start) out.emplace_back(line.substr(start, k - start));
  }
  return out;
}

std::vector<std::string> split(std::string_view text, std::string_view sep) {
  std::vector<std::string> out;
  if (sep.empty()) {
    out.emplace_back(text);
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::string format_real17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_real_shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != last)
    throw MalformedInput("not a number: '" + std::string(text) + "'");
  return value;
}

long long parse_integer(std::string_view text) {
  long long value = 0;
  const auto res =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() ||
      res.ptr != text.data() + text.size())
    throw MalformedInput("not an integer: '" + std::string(text) + "'");
  return value;
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t k = 0;
  while (k < text.size()) {
    const auto c = static_cast<unsigned char>(text[k]);
    char32_t cp = c;
    int extra = 0;
    if (c >= 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else if (c >= 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if (c >= 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    }
    ++k;
    for (int e = 0; e < extra && k < text.size(); ++e, ++k)
      cp = (cp << 6) | (static_cast<unsigned char>(text[k]) & 0x3F);
    out.push_back(cp);
  }
  return out;
}

namespace {

std::locale find_utf8_locale() {
  for (const char* name : {"C.UTF-8", "en_US.UTF-8", "C.utf8"}) {
    try {
      return std::locale(name);
    } catch (const std::runtime_error&) {
    }
  }
  return std::locale::classic();
}

const std::ctype<wchar_t>* utf8_ctype() {
  static const std::locale loc = find_utf8_locale();
  static const std::ctype<wchar_t>* facet =
      loc == std::locale::classic() ? nullptr
                                    : &std::use_facet<std::ctype<wchar_t>>(loc);
  return facet;
}

}  // namespace

std::u32string fold_case_utf8(std::string_view text) {
  auto cps = decode_utf8(text);
  const auto* facet = utf8_ctype();
  for (auto& cp : cps) {
    if (facet != nullptr && sizeof(wchar_t) >= 4) {
      cp = static_cast<char32_t>(facet->tolower(static_cast<wchar_t>(cp)));
    } else if (cp >= U'A' && cp <= U'Z') {
      cp = cp - U'A' + U'a';
    }
  }
  return cps;
}

}  // namespace alignkit
