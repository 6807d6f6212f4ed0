#include "llb/field_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "llb/errors.hpp"

namespace llb {
namespace {

void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> buf{};
  for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  out.write(buf.data(), buf.size());
}

double get_le(std::istream& in) {
  std::array<unsigned char, 8> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw InputError("LLBFIELD: truncated payload");
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | buf[b];
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_field(std::ostream& out, const VectorField& f) {
  const Grid& g = f.grid();
  out << "LLBFIELD v1 " << g.dim();
  for (int a = 0; a < g.dim(); ++a) out << ' ' << g.cells(a);
  out << '\n';
  for (const Vec3& v : f.values()) {
    put_le(out, v.x);
    put_le(out, v.y);
    put_le(out, v.z);
  }
}

void write_field(const std::filesystem::path& path, const VectorField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_field(out, f);
}

VectorField read_field(std::istream& in, const Grid& grid) {
  std::string header;
  if (!std::getline(in, header)) throw InputError("LLBFIELD: missing header");
  std::istringstream hs(header);
  std::string magic, version;
  int dim = 0;
  hs >> magic >> version >> dim;
  if (magic != "LLBFIELD" || version != "v1") throw InputError("LLBFIELD: bad magic/version");
  if (dim != grid.dim())
    throw InputError("LLBFIELD: file is " + std::to_string(dim) + "D, grid is " +
                     std::to_string(grid.dim()) + "D");
  for (int a = 0; a < dim; ++a) {
    int n = 0;
    if (!(hs >> n) || n != grid.cells(a))
      throw InputError("LLBFIELD: shape mismatch on axis " + std::to_string(a));
  }
  std::vector<Vec3> values(grid.node_count());
  for (auto& v : values) {
    v.x = get_le(in);
    v.y = get_le(in);
    v.z = get_le(in);
  }
  return VectorField(grid, std::move(values));
}

VectorField read_field(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_field(in, grid);
}

}  // namespace llb
