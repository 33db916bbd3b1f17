#include "doctest.h"

#include "doccheck/error.hpp"
#include "doccheck/tokenizer.hpp"

#include <filesystem>
#include <random>

using namespace doccheck;
using namespace doccheck::tokenize;

namespace {

// Mixed code/text samples, including multi-byte UTF-8 and raw control bytes.
std::vector<std::string> fuzz_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> pieces = {
      "def ", "return ", "self", ".", "(", ")", "{", "}", " ", "  ", "\n", "\t", "x", "value",
      "Returns the sum.", "// ", "/** ", " */", "#", "\"", "'", "==", "=>", "0", "42", "é", "日本",
      "🙂", "_", "getName", "snake_case", "\r\n", ";", ",", "if", "for", "\\", "<", ">"};
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    const std::size_t len = rng() % 24;
    for (std::size_t k = 0; k < len; ++k) {
      if (rng() % 10 == 0) s += static_cast<char>(rng() % 256);  // arbitrary byte
      else s += pieces[rng() % pieces.size()];
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("train_bpe: single merge on aaaa") {
  Vocabulary v = train_bpe({"aaaa"}, kBaseVocab + 1, 7);
  REQUIRE(v.merges().size() == 1);
  int a = Vocabulary::byte_id('a');
  CHECK(v.merges()[0] == std::pair{a, a});
  CHECK(v.size() == kBaseVocab + 1);
  auto ids = encode("aaaa", v);
  CHECK(ids == std::vector<int>{kBaseVocab, kBaseVocab});
}

TEST_CASE("train_bpe: no budget means no merges") {
  Vocabulary v = train_bpe({"hello world"}, kBaseVocab, 1);
  CHECK(v.merges().empty());
  CHECK(v.size() == kBaseVocab);
}

TEST_CASE("train_bpe: rejects empty corpus and too small sizes") {
  CHECK_THROWS_AS(train_bpe({}, kBaseVocab + 10), Error);
  CHECK_THROWS_AS(train_bpe({"", ""}, kBaseVocab + 10), Error);
  CHECK_THROWS_AS(train_bpe({"abc"}, kBaseVocab - 1), Error);
}

TEST_CASE("train_bpe: deterministic and tie-broken lexicographically") {
  auto corpus = fuzz_corpus(200, 3);
  CHECK(train_bpe(corpus, 600, 1).merges() == train_bpe(corpus, 600, 99).merges());

  // "ab" and "cd" occur equally often; ("a","b") sorts first.
  Vocabulary v = train_bpe({"ab cd", "cd ab"}, kBaseVocab + 1);
  REQUIRE(v.merges().size() == 1);
  CHECK(v.token_bytes(v.merge_result(0)) == "ab");
}

TEST_CASE("train_bpe: merges follow frequency") {
  // hand-run: pairs in "abab abab ab": (a,b)x5, (b,a)x2, (' ',a)x2
  Vocabulary v = train_bpe({"abab abab ab"}, kBaseVocab + 2);
  REQUIRE(v.merges().size() == 2);
  CHECK(v.token_bytes(v.merge_result(0)) == "ab");
  // then (ab,ab)x2 ties with (' ',ab)x2 and ' ' sorts before "ab"
  CHECK(v.token_bytes(v.merge_result(1)) == " ab");
}

TEST_CASE("encode/decode specials") {
  Vocabulary v;
  CHECK(encode("", v, Wrap::bos_eos) == std::vector<int>{BOS, EOS});
  CHECK(encode("", v, Wrap::cls_sep) == std::vector<int>{CLS, SEP});
  CHECK(encode("", v).empty());
  std::vector<int> be{BOS, EOS};
  CHECK(decode(be, v).empty());
  std::vector<int> bad{v.size()};
  CHECK_THROWS_AS(decode(bad, v), Error);
  std::vector<int> neg{-1};
  CHECK_THROWS_AS(decode(neg, v), Error);
}

TEST_CASE("round trip on a fuzz corpus of 1000 samples") {
  Vocabulary v = train_bpe(fuzz_corpus(300, 11), 900);
  for (const std::string& s : fuzz_corpus(1000, 12)) {
    auto ids = encode(s, v, Wrap::bos_eos);
    for (int id : ids) CHECK(id != PAD);
    CHECK(decode(ids, v) == s);
  }
}

TEST_CASE("pretokenize partitions the input") {
  for (const std::string& s : fuzz_corpus(200, 5)) {
    std::string joined;
    for (auto c : pretokenize(s)) {
      CHECK_FALSE(c.empty());
      joined += c;
    }
    CHECK(joined == s);
  }
  auto chunks = pretokenize("def  add(x):");
  std::vector<std::string> got(chunks.begin(), chunks.end());
  CHECK(got == std::vector<std::string>{"def", " ", " add", "(", "x", "):"});
}

TEST_CASE("more merges never lengthen an encoding") {
  auto corpus = fuzz_corpus(300, 21);
  Vocabulary full = train_bpe(corpus, 800);
  // greedy training makes smaller budgets a prefix of larger ones
  CHECK(train_bpe(corpus, 500).merges() ==
        std::vector(full.merges().begin(), full.merges().begin() + 500 - kBaseVocab));
  auto probes = fuzz_corpus(100, 22);
  for (const std::string& s : probes) {
    std::size_t prev = s.size();
    for (std::size_t n = 0; n <= full.merges().size(); n += 60) {
      std::size_t len = encode(s, full.prefix(n)).size();
      CHECK(len <= prev);
      prev = len;
    }
  }
}

TEST_CASE("vocabulary JSON round-trips") {
  Vocabulary v = train_bpe(fuzz_corpus(200, 31), 700);
  Vocabulary w = Vocabulary::from_json(nlohmann::json::parse(v.to_json().dump()));
  CHECK(w == v);
  CHECK(w.size() == v.size());
  for (const std::string& s : fuzz_corpus(50, 32)) CHECK(encode(s, w) == encode(s, v));

  auto path = std::filesystem::temp_directory_path() / "doccheck_vocab_test.json";
  v.save(path);
  CHECK(Vocabulary::load(path) == v);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(Vocabulary::from_json(nlohmann::json::parse(R"({"version":2,"merges":[]})")), Error);
  CHECK_THROWS_AS(Vocabulary::from_json(nlohmann::json::parse(R"({"version":1,"merges":[["zz","q"]]})")),
                  Error);
}
