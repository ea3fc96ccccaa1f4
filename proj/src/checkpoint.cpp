#include "symrl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "symrl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace symrl {

namespace {

constexpr char kMagic[8] = {'S', 'Y', 'M', 'R', 'L', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_doubles(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::vector<double> read_doubles(std::istream& is, std::uint64_t n) {
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}
std::string read_string(std::istream& is) {
  std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

const NetParams& Checkpoint::net(const std::string& name) const {
  auto it = nets.find(name);
  if (it == nets.end())
    throw ConfigError("checkpoint is missing network chunk '" + name + "'");
  return it->second;
}

const std::vector<double>& Checkpoint::raw(const std::string& name) const {
  auto it = raws.find(name);
  if (it == raws.end())
    throw ConfigError("checkpoint is missing raw chunk '" + name + "'");
  return it->second;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint file '" + path + "'");
  os.write(kMagic, sizeof kMagic);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(ck.nets.size() + ck.raws.size()));
  for (const auto& [name, p] : ck.nets) {
    write_string(os, name);
    write_u32(os, 0);  // net chunk
    write_u32(os, static_cast<std::uint32_t>(p.arch.layer_widths.size()));
    for (int w : p.arch.layer_widths) write_u32(os, static_cast<std::uint32_t>(w));
    write_u32(os, static_cast<std::uint32_t>(p.arch.output_width));
    write_u32(os, p.arch.activation == Activation::Elu ? 0 : 1);
    for (const auto& l : p.layers) {
      write_doubles(os, l.w);
      write_doubles(os, l.b);
    }
  }
  for (const auto& [name, v] : ck.raws) {
    write_string(os, name);
    write_u32(os, 1);  // raw chunk
    write_u64(os, v.size());
    write_doubles(os, v);
  }
  if (!os) throw ConfigError("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read checkpoint file '" + path + "'");
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ConfigError("'" + path + "' is not a checkpoint file");
  std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw ConfigError("unsupported checkpoint version " +
                      std::to_string(version));
  Checkpoint ck;
  std::uint32_t n_chunks = read_u32(is);
  for (std::uint32_t c = 0; c < n_chunks; ++c) {
    std::string name = read_string(is);
    std::uint32_t kind = read_u32(is);
    if (kind == 0) {
      NetArch arch;
      std::uint32_t n_widths = read_u32(is);
      for (std::uint32_t k = 0; k < n_widths; ++k)
        arch.layer_widths.push_back(static_cast<int>(read_u32(is)));
      arch.output_width = static_cast<int>(read_u32(is));
      arch.activation = read_u32(is) == 0 ? Activation::Elu : Activation::Tanh;
      NetParams p;
      p.arch = arch;
      std::vector<int> widths = arch.layer_widths;
      widths.push_back(arch.output_width);
      for (size_t l = 1; l < widths.size(); ++l) {
        Layer lay;
        lay.in = widths[l - 1];
        lay.out = widths[l];
        lay.w = read_doubles(is, static_cast<std::uint64_t>(lay.in) * lay.out);
        lay.b = read_doubles(is, static_cast<std::uint64_t>(lay.out));
        p.layers.push_back(std::move(lay));
      }
      ck.nets[name] = std::move(p);
    } else if (kind == 1) {
      std::uint64_t n = read_u64(is);
      ck.raws[name] = read_doubles(is, n);
    } else {
      throw ConfigError("unknown chunk kind in checkpoint '" + path + "'");
    }
    if (!is) throw ConfigError("truncated checkpoint file '" + path + "'");
  }
  return ck;
}

}  // namespace symrl
