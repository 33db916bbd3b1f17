#include "doccheck/tokenizer.hpp"

#include "doccheck/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace doccheck::tokenize {
namespace {

constexpr std::array<std::string_view, kNumSpecials> kSpecialNames = {
    "<pad>", "<unk>", "<s>", "</s>", "<cls>", "<sep>", "<mask>"};

std::uint64_t key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// GPT-2's reversible byte -> printable code point table, so merges can be
// stored as JSON strings.
const std::array<char32_t, 256>& byte_to_unicode() {
  static const std::array<char32_t, 256> table = [] {
    std::array<char32_t, 256> t{};
    std::array<bool, 256> printable{};
    for (int b = '!'; b <= '~'; ++b) printable[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) printable[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) printable[b] = true;
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) t[b] = printable[b] ? static_cast<char32_t>(b) : next++;
    return t;
  }();
  return table;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string bytes_to_printable(std::string_view bytes) {
  std::string out;
  for (unsigned char b : bytes) append_utf8(out, byte_to_unicode()[b]);
  return out;
}

std::string printable_to_bytes(std::string_view s) {
  static const std::map<char32_t, unsigned char> inverse = [] {
    std::map<char32_t, unsigned char> m;
    for (int b = 0; b < 256; ++b) m[byte_to_unicode()[b]] = static_cast<unsigned char>(b);
    return m;
  }();
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp;
    std::size_t len;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else {
      throw Error(ErrorKind::BadFormat, "vocabulary: unexpected code point in merge");
    }
    if (i + len > s.size()) throw Error(ErrorKind::BadFormat, "vocabulary: truncated UTF-8");
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    auto it = inverse.find(cp);
    if (it == inverse.end()) throw Error(ErrorKind::BadFormat, "vocabulary: unmapped code point");
    out += static_cast<char>(it->second);
    i += len;
  }
  return out;
}

enum class CharClass { letter, digit, space, other };

CharClass classify(unsigned char c) {
  if (std::isalpha(c) || c == '_' || c >= 0x80) return CharClass::letter;
  if (std::isdigit(c)) return CharClass::digit;
  if (std::isspace(c)) return CharClass::space;
  return CharClass::other;
}

}  // namespace

Vocabulary::Vocabulary() {
  tokens_.reserve(kBaseVocab);
  for (std::string_view name : kSpecialNames) tokens_.emplace_back(name);
  for (int b = 0; b < 256; ++b) {
    tokens_.emplace_back(1, static_cast<char>(b));
    ids_.emplace(tokens_.back(), kNumSpecials + b);
  }
}

int Vocabulary::find(std::string_view bytes) const {
  auto it = ids_.find(std::string(bytes));
  return it == ids_.end() ? -1 : it->second;
}

int Vocabulary::add_merge(int left, int right) {
  if (left < kNumSpecials || right < kNumSpecials || left >= size() || right >= size()) {
    throw Error(ErrorKind::InvalidArgument, "merge of special or unknown id");
  }
  if (rank(left, right) >= 0) throw Error(ErrorKind::InvalidArgument, "duplicate merge");
  std::string bytes = tokens_[static_cast<std::size_t>(left)] + tokens_[static_cast<std::size_t>(right)];
  int id = find(bytes);
  if (id < 0) {
    id = size();
    tokens_.push_back(bytes);
    ids_.emplace(std::move(bytes), id);
  }
  rank_.emplace(key(left, right), static_cast<int>(merges_.size()));
  merges_.emplace_back(left, right);
  results_.push_back(id);
  return id;
}

int Vocabulary::rank(int left, int right) const {
  auto it = rank_.find(key(left, right));
  return it == rank_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::prefix(std::size_t n) const {
  Vocabulary v;
  for (std::size_t i = 0; i < std::min(n, merges_.size()); ++i) v.add_merge(merges_[i].first, merges_[i].second);
  return v;
}

nlohmann::ordered_json Vocabulary::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  nlohmann::ordered_json specials = nlohmann::ordered_json::object();
  for (int i = 0; i < kNumSpecials; ++i) specials[std::string(kSpecialNames[i])] = i;
  j["specials"] = specials;
  nlohmann::ordered_json merges = nlohmann::ordered_json::array();
  for (auto [a, b] : merges_) {
    merges.push_back({bytes_to_printable(token_bytes(a)), bytes_to_printable(token_bytes(b))});
  }
  j["merges"] = merges;
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("version", 0) != 1 || !j.contains("merges")) {
    throw Error(ErrorKind::BadFormat, "vocabulary: expected version 1 object with merges");
  }
  if (j.contains("specials")) {
    for (int i = 0; i < kNumSpecials; ++i) {
      const auto& s = j["specials"];
      auto it = s.find(std::string(kSpecialNames[i]));
      if (it == s.end() || it->get<int>() != i) {
        throw Error(ErrorKind::BadFormat, "vocabulary: special ids differ from the fixed layout");
      }
    }
  }
  Vocabulary v;
  for (const auto& m : j["merges"]) {
    if (!m.is_array() || m.size() != 2) throw Error(ErrorKind::BadFormat, "vocabulary: bad merge entry");
    int a = v.find(printable_to_bytes(m[0].get<std::string>()));
    int b = v.find(printable_to_bytes(m[1].get<std::string>()));
    if (a < 0 || b < 0) throw Error(ErrorKind::BadFormat, "vocabulary: merge refers to an unknown token");
    v.add_merge(a, b);
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json().dump(1) << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadFormat, path.string() + ": " + e.what());
  }
}

std::string_view special_name(int id) {
  return Vocabulary::is_special(id) ? kSpecialNames[static_cast<std::size_t>(id)] : std::string_view{};
}

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    CharClass c = classify(static_cast<unsigned char>(text[i]));
    if (c == CharClass::space) {
      std::size_t j = i;
      while (j < text.size() && classify(static_cast<unsigned char>(text[j])) == CharClass::space) ++j;
      // a single trailing ' ' joins the following word
      if (j < text.size() && j - i >= 1 && text[j - 1] == ' ') {
        if (j - 1 > i) {
          out.push_back(text.substr(i, j - 1 - i));
          i = j - 1;
          continue;
        }
        c = classify(static_cast<unsigned char>(text[j]));
        i = j;
      } else {
        out.push_back(text.substr(i, j - i));
        i = j;
        continue;
      }
    }
    while (i < text.size() && classify(static_cast<unsigned char>(text[i])) == c) ++i;
    out.push_back(text.substr(start, i - start));
  }
  return out;
}

Vocabulary train_bpe(const std::vector<std::string>& corpus, int vocab_size, std::uint64_t /*seed*/) {
  if (vocab_size < kBaseVocab) {
    throw Error(ErrorKind::InvalidArgument,
                "vocab_size must be at least " + std::to_string(kBaseVocab));
  }
  std::map<std::string_view, long> chunk_counts;
  for (const std::string& doc : corpus) {
    for (std::string_view chunk : pretokenize(doc)) ++chunk_counts[chunk];
  }
  if (chunk_counts.empty()) throw Error(ErrorKind::CorpusEmpty, "training corpus has no text");

  Vocabulary vocab;
  std::vector<std::vector<int>> words;
  std::vector<long> freq;
  for (auto [chunk, n] : chunk_counts) {
    std::vector<int> w;
    for (unsigned char b : chunk) w.push_back(Vocabulary::byte_id(b));
    words.push_back(std::move(w));
    freq.push_back(n);
  }

  // Candidates ordered by descending count, then by the token pair's bytes.
  struct Entry {
    long count;
    int a;
    int b;
  };
  auto less = [&vocab](const Entry& x, const Entry& y) {
    if (x.count != y.count) return x.count > y.count;
    const std::string& xa = vocab.token_bytes(x.a);
    const std::string& ya = vocab.token_bytes(y.a);
    if (xa != ya) return xa < ya;
    const std::string& xb = vocab.token_bytes(x.b);
    const std::string& yb = vocab.token_bytes(y.b);
    if (xb != yb) return xb < yb;
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  };
  std::set<Entry, decltype(less)> queue(less);
  std::unordered_map<std::uint64_t, long> counts;
  std::unordered_map<std::uint64_t, std::unordered_set<std::size_t>> where;

  auto bump = [&](int a, int b, long delta, std::size_t word) {
    const std::uint64_t k = key(a, b);
    long& c = counts[k];
    if (c > 0) queue.erase(Entry{c, a, b});
    c += delta;
    if (c > 0) queue.insert(Entry{c, a, b});
    if (delta > 0) where[k].insert(word);
  };
  auto add_word = [&](std::size_t w, long sign) {
    const std::vector<int>& s = words[w];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) bump(s[i], s[i + 1], sign * freq[w], w);
  };
  for (std::size_t w = 0; w < words.size(); ++w) add_word(w, +1);

  while (vocab.size() < vocab_size && !queue.empty()) {
    const Entry best = *queue.begin();
    const int merged = vocab.add_merge(best.a, best.b);
    std::vector<std::size_t> touched(where[key(best.a, best.b)].begin(), where[key(best.a, best.b)].end());
    std::sort(touched.begin(), touched.end());
    for (std::size_t w : touched) {
      add_word(w, -1);
      std::vector<int>& s = words[w];
      std::vector<int> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == best.a && s[i + 1] == best.b) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(s[i]);
        }
      }
      s = std::move(next);
      add_word(w, +1);
    }
  }
  return vocab;
}

namespace {

void encode_chunk(std::string_view chunk, const Vocabulary& vocab, std::vector<int>& out) {
  std::vector<int> s;
  s.reserve(chunk.size());
  for (unsigned char b : chunk) s.push_back(Vocabulary::byte_id(b));
  // Repeatedly merge the lowest-ranked adjacent pair, which applies merges
  // in training order.
  while (s.size() > 1) {
    int best_rank = -1;
    std::size_t best_at = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      int r = vocab.rank(s[i], s[i + 1]);
      if (r >= 0 && (best_rank < 0 || r < best_rank)) {
        best_rank = r;
        best_at = i;
      }
    }
    if (best_rank < 0) break;
    const auto [a, b] = vocab.merges()[static_cast<std::size_t>(best_rank)];
    const int merged = vocab.merge_result(best_rank);
    std::vector<int> next;
    next.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i >= best_at && i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
        next.push_back(merged);
        ++i;
      } else {
        next.push_back(s[i]);
      }
    }
    s = std::move(next);
  }
  out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

std::vector<int> encode(std::string_view text, const Vocabulary& vocab, Wrap wrap) {
  std::vector<int> out;
  if (wrap == Wrap::bos_eos) out.push_back(BOS);
  if (wrap == Wrap::cls_sep) out.push_back(CLS);
  for (std::string_view chunk : pretokenize(text)) encode_chunk(chunk, vocab, out);
  if (wrap == Wrap::bos_eos) out.push_back(EOS);
  if (wrap == Wrap::cls_sep) out.push_back(SEP);
  return out;
}

std::string decode(std::span<const int> ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= vocab.size()) {
      throw Error(ErrorKind::UnknownId, "token id " + std::to_string(id) + " outside vocabulary of " +
                                            std::to_string(vocab.size()));
    }
    if (Vocabulary::is_special(id)) continue;
    out += vocab.token_bytes(id);
  }
  return out;
}

}  // namespace doccheck::tokenize
