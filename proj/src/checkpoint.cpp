#include "doccheck/checkpoint.hpp"

#include "doccheck/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace doccheck::model {

namespace {

constexpr char kMagic[8] = {'D', 'O', 'C', 'C', 'H', 'E', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw Error(ErrorKind::BadFormat, "checkpoint truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

nlohmann::ordered_json header_of(const Checkpoint& c) {
  nlohmann::ordered_json h;
  h["config"] = c.config.to_json();
  h["vocab"] = c.vocab.to_json();
  h["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : tensors(c.params)) h["tensors"].push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  return h;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  const std::string header = header_of(c).dump();
  std::string out(kMagic, sizeof(kMagic));
  put(out, kFormatVersion);
  put(out, static_cast<std::uint64_t>(header.size()));
  out += header;
  for (const auto& t : tensors(c.params)) {
    out.append(reinterpret_cast<const char*>(t.data), static_cast<std::size_t>(t.size()) * sizeof(double));
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view in) {
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::BadFormat, "not a checkpoint");
  }
  in.remove_prefix(sizeof(kMagic));
  if (auto v = take<std::uint32_t>(in); v != kFormatVersion) {
    throw Error(ErrorKind::BadFormat, "unsupported checkpoint version " + std::to_string(v));
  }
  const auto hlen = take<std::uint64_t>(in);
  if (hlen > in.size()) throw Error(ErrorKind::BadFormat, "checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.substr(0, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadFormat, std::string("checkpoint header: ") + e.what());
  }
  in.remove_prefix(hlen);

  Checkpoint c;
  c.config = ModelConfig::from_json(header.at("config"));
  c.vocab = tokenize::Vocabulary::from_json(header.at("vocab"));
  if (c.vocab.size() > c.config.vocab_size) throw Error(ErrorKind::BadFormat, "vocabulary larger than the model");
  c.params = Parameters::zeros(c.config);
  auto views = tensors(c.params);
  const auto& listed = header.at("tensors");
  if (listed.size() != views.size()) throw Error(ErrorKind::BadFormat, "tensor count mismatch");
  for (std::size_t i = 0; i < views.size(); ++i) {
    auto& t = views[i];
    if (listed[i].at("name") != t.name || listed[i].at("rows") != t.rows || listed[i].at("cols") != t.cols) {
      throw Error(ErrorKind::BadFormat, "tensor " + t.name + " does not match the config");
    }
    const std::size_t bytes = static_cast<std::size_t>(t.size()) * sizeof(double);
    if (in.size() < bytes) throw Error(ErrorKind::BadFormat, "checkpoint truncated");
    std::memcpy(t.data, in.data(), bytes);
    in.remove_prefix(bytes);
  }
  if (!in.empty()) throw Error(ErrorKind::BadFormat, "trailing bytes after tensors");
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(c);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.view());
}

std::string Checkpoint::version() const {
  const std::string bytes = serialize_checkpoint(*this);
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : bytes) h = (h ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace doccheck::model
