// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <set>

#include "doctest.h"
#include "toxq/common/errors.hpp"
#include "toxq/common/hash.hpp"
#include "toxq/common/jsonl.hpp"
#include "toxq/common/rng.hpp"
#include "toxq/common/utf8.hpp"

using namespace toxq;

TEST_CASE("utf8 round trip over mixed scripts") {
  const std::string text = "abc 违规商品 Ünïcödé 🙂";
  const auto cps = utf8::Decode(text);
  CHECK(cps.size() == utf8::Length(text));
  CHECK(utf8::Encode(cps) == text);
  CHECK(utf8::Length("违规") == 2);
  CHECK(utf8::Encode(U'违') == "违");
}

TEST_CASE("sha256 known vectors") {
  CHECK(Sha256Hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(Sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 h;
  h.Update("a").Update("bc");
  CHECK(h.Hex() == Sha256Hex("abc"));
}

TEST_CASE("rng streams are reproducible and salted") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.Next() == b.Next());
  auto x = Rng::Derive(1, 2, 3), y = Rng::Derive(1, 2, 4);
  CHECK(x.Next() != y.Next());
  Rng r(5);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.Range(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("json lines round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "toxq_test_common";
  std::filesystem::create_directories(dir);
  const std::vector<Json> rows{Json{{"a", 1}}, Json{{"b", "违规"}}};
  WriteJsonLines(dir / "x.jsonl", rows);
  CHECK(ReadJsonLines(dir / "x.jsonl") == rows);
  WriteJsonFile(dir / "y.json", rows[1]);
  CHECK(ReadJsonFile(dir / "y.json") == rows[1]);
  std::filesystem::remove_all(dir);
}
