#include "agentsim/nn/checkpoint.hpp"

#include "agentsim/error.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace agentsim::nn
{
namespace
{
constexpr char kMagic[8] = {'A', 'G', 'S', 'I', 'M', 'C', 'K', 'P'};

template <typename T>
void write_pod(std::ostream & out, const T & value)
{
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream & in)
{
  T value{};
  in.read(reinterpret_cast<char *>(&value), sizeof(T));
  if (!in) {
    throw ValidationError("checkpoint: truncated file");
  }
  return value;
}

struct Fnv
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void * data, std::size_t n)
  {
    const auto * p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
};
}  // namespace

const NamedArray * Checkpoint::find(const std::string & name) const
{
  for (const auto & a : arrays) {
    if (a.name == name) {
      return &a;
    }
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path & path, const Checkpoint & checkpoint)
{
  nlohmann::json header;
  header["format"] = "agentsim-checkpoint";
  header["meta"] = checkpoint.meta;
  header["arrays"] = nlohmann::json::array();
  for (const auto & a : checkpoint.arrays) {
    require(a.values.size() == a.rows * a.cols, "checkpoint: array size mismatch for " + a.name);
    header["arrays"].push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}});
  }
  const std::string text = header.dump();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("checkpoint: cannot open " + tmp + " for writing");
    }
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kCheckpointFormatVersion);
    write_pod(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto & a : checkpoint.arrays) {
      out.write(reinterpret_cast<const char *>(a.values.data()),
        static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    }
    if (!out) {
      throw Error("checkpoint: write failed for " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("checkpoint: cannot open " + path.string());
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("checkpoint: bad magic in " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointFormatVersion) {
    throw ValidationError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) {
    throw ValidationError("checkpoint: truncated header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(std::string("checkpoint: malformed header: ") + e.what());
  }
  Checkpoint ck;
  ck.meta = header.at("meta");
  for (const auto & entry : header.at("arrays")) {
    NamedArray a;
    a.name = entry.at("name").get<std::string>();
    a.rows = entry.at("rows").get<std::size_t>();
    a.cols = entry.at("cols").get<std::size_t>();
    a.values.resize(a.rows * a.cols);
    in.read(reinterpret_cast<char *>(a.values.data()), static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    if (!in) {
      throw ValidationError("checkpoint: truncated array " + a.name);
    }
    ck.arrays.push_back(std::move(a));
  }
  return ck;
}

std::uint64_t content_fingerprint(const nlohmann::json & meta, const std::vector<const NamedArray *> & arrays)
{
  Fnv fnv;
  const std::string text = meta.dump();
  fnv.bytes(text.data(), text.size());
  for (const NamedArray * a : arrays) {
    fnv.bytes(a->name.data(), a->name.size());
    const std::uint64_t shape[2] = {a->rows, a->cols};
    fnv.bytes(shape, sizeof(shape));
    fnv.bytes(a->values.data(), a->values.size() * sizeof(double));
  }
  return fnv.h;
}

std::string fingerprint_hex(std::uint64_t fingerprint)
{
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fingerprint;
  return os.str();
}
}  // namespace agentsim::nn
