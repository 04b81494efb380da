#include <doctest.h>

#include <cctype>

#include "ikon/hash.hpp"
#include "ikon/text.hpp"
#include "support.hpp"

using namespace ikon;

TEST_SUITE("text") {
  TEST_CASE("to_lower folds ASCII, Latin-1 and Cyrillic") {
    CHECK(text::to_lower("Cats") == "cats");
    CHECK(text::to_lower("ОНТОЛОГИЯ Ёж") == "онтология ёж");
    CHECK(text::to_lower("ÉCOLE") == "école");
    CHECK(text::to_lower("ЇЖАК Є") == "їжак є");
    CHECK(text::to_lower("日本") == "日本");
  }

  TEST_CASE("word tokens split on punctuation and keep casing") {
    CHECK(text::word_tokens("Hello, world! x-y") == std::vector<std::string>{"Hello", "world", "x", "y"});
    CHECK(text::normalized_tokens("Знания БАЗЫ, data2") == std::vector<std::string>{"знания", "базы", "data2"});
    CHECK(text::word_tokens("").empty());
    CHECK(text::word_tokens(" ... ").empty());
  }

  TEST_CASE("normalize_label lowercases, collapses and trims") {
    CHECK(text::normalize_label("  Data   Model ") == "data model");
    CHECK(text::normalize_label("a\tb\nc") == "a b c");
    CHECK(text::normalize_label("") == "");
  }

  TEST_CASE("utf8 validation") {
    CHECK(text::is_valid_utf8("plain"));
    CHECK(text::is_valid_utf8("предметная"));
    CHECK_FALSE(text::is_valid_utf8(std::string("\xff\xfe", 2)));
    CHECK_FALSE(text::is_valid_utf8(std::string("\xd0", 1)));
    CHECK_FALSE(text::is_valid_utf8(std::string("\xc0\xaf", 2)));  // overlong
  }

  TEST_CASE("percent encoding round trips arbitrary bytes") {
    CHECK(text::percent_encode("a b/c") == "a%20b%2Fc");
    testing::Rng rng(7);
    for (int i = 0; i < 500; ++i) {
      std::string s;
      for (std::size_t n = testing::uniform(rng, 0, 12); n > 0; --n)
        s += static_cast<char>(testing::uniform(rng, 0, 255));
      const std::string enc = text::percent_encode(s);
      for (const char c : enc) CHECK((std::isalnum(static_cast<unsigned char>(c)) || c == '%'));
      std::string back;
      REQUIRE(text::percent_decode(enc, back));
      CHECK(back == s);
    }
    std::string out;
    CHECK_FALSE(text::percent_decode("%4", out));
    CHECK_FALSE(text::percent_decode("%zz", out));
  }

  TEST_CASE("tsv_field and split") {
    CHECK(text::tsv_field("a\tb\r\nc") == "a b  c");
    CHECK(text::split("a\t\tb", '\t') == std::vector<std::string>{"a", "", "b"});
    CHECK(text::split("", ',') == std::vector<std::string>{""});
    CHECK(text::join({"x", "y"}, ", ") == "x, y");
  }

  TEST_CASE("format_fixed and timestamp shape") {
    CHECK(text::format_fixed(0.5, 4) == "0.5000");
    CHECK(text::format_fixed(2.0 / 3.0, 2) == "0.67");
    const auto ts = text::utc_timestamp();
    CHECK(ts.size() == 20);
    CHECK(ts[10] == 'T');
    CHECK(ts.back() == 'Z');
  }

  TEST_CASE("sha256 of known inputs") {
    CHECK(ikon::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(ikon::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
