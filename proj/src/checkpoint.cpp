#include "mmcrl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmcrl {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_tensors(const std::string& path,
                  const std::map<std::string, Tensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_pod(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(os, static_cast<std::uint32_t>(t.rows()));
    write_pod(os, static_cast<std::uint32_t>(t.cols()));
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::map<std::string, Tensor> load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  const auto count = read_pod<std::uint32_t>(is);
  std::map<std::string, Tensor> out;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = read_pod<std::uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rows = read_pod<std::uint32_t>(is);
    const auto cols = read_pod<std::uint32_t>(is);
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor " + name);
    out.emplace(std::move(name), Tensor(rows, cols, std::move(data)));
  }
  return out;
}

}  // namespace mmcrl
