// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/common/utf8.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::searchsim {

namespace {

bool IsSpace(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == U'　';
}

}  // namespace

std::u32string Normalize(std::string_view text) {
  const std::u32string in = utf8::Decode(text);
  std::u32string out;
  out.reserve(in.size());
  bool pending_space = false;
  for (char32_t c : in) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
    out.push_back(c);
  }
  return out;
}

std::string NormalizeUtf8(std::string_view text) { return utf8::Encode(Normalize(text)); }

}  // namespace toxq::searchsim
