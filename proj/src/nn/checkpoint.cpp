#include "cfcdc/nn/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cfcdc/error.hpp"

namespace cfcdc::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'F', 'C', 'D', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                      const std::vector<StoreRef>& stores) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ReferenceError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kCheckpointVersion);
  const std::string meta_text = meta.dump();
  put<std::uint64_t>(os, meta_text.size());
  os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));

  std::uint64_t count = 0;
  for (const auto& [prefix, store] : stores) count += store->size();
  put<std::uint64_t>(os, count);
  for (const auto& [prefix, store] : stores) {
    for (const Parameter* p : store->parameters()) {
      const std::string name = prefix + "/" + p->name();
      put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value().rows()));
      put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value().cols()));
      os.write(reinterpret_cast<const char*>(p->value().data()),
               static_cast<std::streamsize>(p->value().size() * sizeof(double)));
    }
  }
  if (!os) throw FormatError("failed writing checkpoint: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ReferenceError("checkpoint not found: " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not a checkpoint file: " + path.string());
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  }
  Checkpoint ckpt;
  const auto meta_len = get<std::uint64_t>(is, path);
  std::string meta_text(meta_len, '\0');
  if (!is.read(meta_text.data(), static_cast<std::streamsize>(meta_len))) {
    throw FormatError("truncated checkpoint metadata: " + path.string());
  }
  try {
    ckpt.meta = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint metadata: " + std::string(e.what()));
  }
  const auto count = get<std::uint64_t>(is, path);
  ckpt.tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = get<std::uint32_t>(is, path);
    t.name.resize(name_len);
    if (!is.read(t.name.data(), name_len)) throw FormatError("truncated tensor name: " + path.string());
    const auto rows = get<std::uint64_t>(is, path);
    const auto cols = get<std::uint64_t>(is, path);
    t.value.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    if (!is.read(reinterpret_cast<char*>(t.value.data()),
                 static_cast<std::streamsize>(rows * cols * sizeof(double)))) {
      throw FormatError("truncated tensor data: " + t.name);
    }
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void load_parameters(const Checkpoint& ckpt, const std::string& prefix, ParameterStore& store) {
  for (Parameter* p : store.parameters()) {
    const std::string name = prefix + "/" + p->name();
    const NamedTensor* t = ckpt.find(name);
    if (t == nullptr) throw FormatError("checkpoint lacks tensor " + name);
    if (t->value.rows() != p->value().rows() || t->value.cols() != p->value().cols()) {
      throw FormatError("shape mismatch for tensor " + name);
    }
    p->value() = t->value;
  }
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ReferenceError("cannot read file for digest: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

}  // namespace cfcdc::nn
